#pragma once

// Symbolic coding of ODE trajectories by their exits from the neighbourhoods
// of P1 and P2, Monte-Carlo statistics of the resulting sign words, and the
// angular coverage of return-map ensembles.

#include "hetlab/integrate.hpp"
#include "hetlab/maps.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hetlab {

struct CodingConfig {
  double ball_radius = 0.3;  // geodesic radius of the balls around P1, P2
  int sectors = 8;           // angular bins of atan2(x2, x1) on exit from P2
  int max_symbols = 200;
  double max_time = 5000.0;
  /// A trajectory with min(|x3|, sqrt(x1^2 + x2^2)) above this is taken to have
  /// left the absorbing domain.
  double absorbing_radius = 0.65;
  /// Stop once this many P1 exits are recorded (0 = no limit).
  int stop_after_p1 = 0;
  IntegratorConfig integrator{};

  void validate() const;
};

enum class SymbolType { P1Exit, P2Exit };

struct ItinerarySymbol {
  SymbolType type = SymbolType::P1Exit;
  /// +1 / -1 (sign of x3) for P1 exits, the sector index for P2 exits.
  int value = 0;
  double t = 0.0;
};

enum class Termination { MaxSymbols, MaxTime, LeftAbsorbingDomain, StopAfterP1 };

const char* to_string(Termination t);

struct Itinerary {
  std::vector<ItinerarySymbol> symbols;
  Termination reason = Termination::MaxTime;
  double t_end = 0.0;

  /// Signs of the P1 exits as a string over {+, -}.
  std::string sign_word() const;
  int p1_count() const;
};

int sector_of(const State& x, int sectors);

/// Integrates from x0 and records exits from the two balls. Consecutive exits
/// from the same ball (re-entry without visiting the other) keep only the
/// latest one, so the symbols always alternate. Throws NumericalError if the
/// orbit never enters either ball before max_time.
Itinerary code_trajectory(const ModelParams& params, const State& x0, const CodingConfig& cfg);

/// Uniform sample from the geodesic ball of radius r around the unit vector c,
/// drawn from the stream (seed, index).
State sample_geodesic_ball(const State& center, double radius, std::uint64_t seed,
                           std::uint64_t index);

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};

/// 95% Wilson score interval for `count` successes in `n` trials.
WilsonInterval wilson_interval(std::size_t count, std::size_t n, double z = 1.959963984540054);

struct WordStat {
  std::string word;
  std::size_t count = 0;
  double fraction = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
};

struct CensusOptions {
  State center = normalized(State{0.01, 0.01, 0.01, 1.0});
  double radius = 0.05;
  std::size_t n_samples = 10000;
  int k = 5;
  std::uint64_t seed = 1;
  int threads = 1;
  CodingConfig coding{};

  void validate() const;
};

struct CensusSample {
  std::string word;      // empty if fewer than k P1 exits were coded
  bool coded = false;
  bool failed = false;   // NumericalError during coding
  bool alternates = true;
  bool mixed_signs = false;  // the coded itinerary contains both signs
};

struct CensusResult {
  int k = 0;
  std::size_t n = 0;
  std::size_t coded = 0;
  std::size_t incomplete = 0;  // fewer than k P1 exits before termination
  std::size_t failed = 0;
  bool all_alternate = true;
  std::size_t mixed_sign_samples = 0;
  /// Observed words in lexicographic order ('+' < '-').
  std::vector<WordStat> words;
  /// Words over {+, -} of length k never observed.
  std::vector<std::string> unobserved;
  std::vector<CensusSample> samples;  // per index

  const WordStat* find(const std::string& word) const;
};

/// All 2^k words, '+' before '-' at every position.
std::vector<std::string> all_sign_words(int k);

CensusResult census(const ModelParams& params, const CensusOptions& opts);

struct FollowFraction {
  std::string path;
  std::size_t matches = 0;
  std::size_t coded = 0;
  double fraction = 0.0;
  WilsonInterval interval;
};

/// Fraction of coded samples whose word starts with `path`.
FollowFraction follow_fraction(const CensusResult& c, const std::string& path);

struct AnnulusOptions {
  double x_center = 0.0;
  double y_center = 0.5;
  double seed_radius = 0.1;
  std::size_t n_seeds = 1000;
  int n_iter = 1000;
  int bins = 360;
  int discard = 0;  // leading iterates not histogrammed
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct AnnulusResult {
  std::vector<std::uint64_t> histogram;
  std::size_t survivors = 0;  // seeds never absorbed nor escaped
  std::size_t absorbed = 0;
  std::size_t escaped = 0;
  std::uint64_t points = 0;
  double coverage = 0.0;  // fraction of non-empty bins
};

/// Iterates the return map from seeds uniform in the disk of radius
/// seed_radius around (x_center, y_center) and bins the angular coordinate.
/// Orbits stop when absorbed or when the height leaves the cylinder. Throws
/// NumericalError if no point is ever binned.
AnnulusResult annulus_coverage(const NormalFormParams& nf, const AnnulusOptions& opts);

}  // namespace hetlab
