#pragma once

// The singular-limit family h_a(x) = x + xi + a - K ln|Phi2(x)| on the circle,
// with the critical-orbit bookkeeping used in the expansion estimates.

#include "hetlab/angles.hpp"
#include "hetlab/perturbation.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace hetlab {

struct CircleMapParams {
  double a = 0.0;
  double xi = 0.0;
  double K_omega = 10.0;
  Perturbation phi2 = Perturbation::sine();

  void validate() const;
};

/// Zeros (S) and critical points (C) of Phi2 on [0, 2pi), ascending.
struct CriticalSets {
  std::vector<double> C;
  std::vector<double> S;
};

/// Closed form for the built-in sine; otherwise grid scan plus bisection to
/// 1e-12. Throws ConfigError for a degenerate zero or critical point.
CriticalSets sets_C_S(const Perturbation& phi2, int grid = 4096);

/// Evaluation context: parameters plus the cached sets and the roots of h'.
struct CircleMap {
  CircleMapParams params;
  CriticalSets sets;
  /// Roots of h' (one per point of C), empty if K is too small for them.
  std::vector<double> turning;

  explicit CircleMap(const CircleMapParams& p);
};

/// Points within this distance of S are treated as singular.
inline constexpr double kSingularTolerance = 1e-14;

double distance_to_set(double x, const std::vector<double>& set);

/// Lifted (unreduced) map. Throws SingularityError on S.
double h_lift(const CircleMap& m, double x);
/// h reduced to [0, 2pi).
double h(const CircleMap& m, double x);
/// Lifted value, or nullopt on S (no exception; for hot loops).
std::optional<double> try_h_lift(const CircleMap& m, double x);

struct HDerivatives {
  double d1 = 0.0;  // 1 - K Phi2'/Phi2
  double d2 = 0.0;  // -K (Phi2'' Phi2 - Phi2'^2) / Phi2^2
};
HDerivatives h_derivatives(const CircleMap& m, double x);

/// Roots of K Phi2' = Phi2 (equivalently h' = 0), one bracket per point c of
/// C: [c - w, c + w] with w half the distance from c to S. Throws
/// NumericalError if a bracket has no sign change.
std::vector<double> true_critical_points(const CircleMapParams& p);

struct SandwichResult {
  double K0 = 1.0;
  double window_radius = 0.0;
  std::size_t samples_used = 0;
  /// Extremes of |h'| dist(x,S) / (K dist(x,C)) over the used samples.
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Smallest K0 >= 1 with (K/K0) dC/dS <= |h'| <= K K0 dC/dS on a uniform
/// sample, skipping windows of radius `window` (default 10/K) around the
/// roots of h'.
SandwichResult derivative_sandwich(const CircleMap& m, int sample_count = 10000,
                                   double window = 0.0);

struct CriticalOrbitStats {
  double c = 0.0;
  double xi_small = 0.0;           // K^(-1/6)
  std::vector<double> xi_of_n;     // K^(-n/1e6), n = 0..N
  std::vector<double> orbit;       // c_n = h^(n+1)(c), n = 0..N
  std::vector<double> logJ;        // ln J^n(c_0), n = 0..N
  std::vector<double> log_d;       // ln d_n(c_0), n = 0..N
  std::vector<double> d;           // d_n(c_0)
  std::vector<double> log_D;       // ln D_n(c_0); D_0 = +inf
  std::vector<double> D;
  /// I_n(c) = (c + sqrt(D_n/(K0 K)), c + sqrt(D_{n-1}/(K0 K))), n = 2..N;
  /// stored at index n, with offsets from c kept separately because they
  /// fall below double resolution next to c.
  std::vector<double> In_offset_lo;
  std::vector<double> In_offset_hi;
  double K0 = 1.0;
  bool truncated = false;
  int truncated_at = -1;
};

/// Ledger along the orbit of c for N steps (orbit entries 0..N). If the orbit
/// lands on S the sequences stop there and `truncated` is set.
CriticalOrbitStats critical_orbit_stats(const CircleMap& m, double c, int N, double K0 = 1.0);

/// dist(h^(i+1)(c), C u S) > K^(-1/6) for every c in C and i = 1..N.
bool delta_membership(const CircleMap& m, int N);

struct ParamSweepResult {
  double K_omega = 0.0;
  int N = 0;
  std::size_t grid_size = 0;
  std::vector<std::uint8_t> members;  // members[j] for a_j = 2 pi j / grid_size
  double measure_estimate = 0.0;
  double bound = 0.0;                 // 2 pi - K^(-1/9)

  double phase(std::size_t j) const { return kTwoPi * static_cast<double>(j) / grid_size; }
  std::size_t member_count() const;
};

ParamSweepResult sweep_delta(double K_omega, int N, std::size_t grid_size, int threads = 1,
                             double xi = 0.0, const Perturbation& phi2 = Perturbation::sine());

/// Largest N <= n_cap whose sweep has at least `min_members` members (0 if
/// none), with that sweep.
struct DeepestSweep {
  int N = 0;
  ParamSweepResult sweep;
};
DeepestSweep deepest_member_sweep(double K_omega, int n_cap, std::size_t grid_size,
                                  std::size_t min_members, int threads = 1);

/// Phases a_j of the members of a sweep, ascending.
std::vector<double> member_phases(const ParamSweepResult& s);

struct LogDerivativeSum {
  double sum = 0.0;  // sum of ln|h'| over the visited points
  int steps = 0;
  bool truncated = false;
  std::vector<double> partial;  // partial[n-1] = sum over the first n points
};

/// Accumulates ln|h'(h^i(x0))| for i < n.
LogDerivativeSum log_derivative_sum(const CircleMap& m, double x0, int n);

struct MapLyapunov {
  double exponent = 0.0;
  int steps = 0;
  bool truncated = false;
};
/// (1/n) sum_{i<n} ln|h'(h^i(x0))|.
MapLyapunov map_lyapunov(const CircleMap& m, double x0, int n);

struct ExpansionRow {
  int n = 0;
  double log_derivative = 0.0;  // ln |(h^n)'(h(c))|
  double log_bound = 0.0;       // (n / 1000) ln K
  bool holds = false;
};

struct ExpansionReport {
  double c = 0.0;
  std::vector<ExpansionRow> rows;
  bool all_hold = false;
  double log_average = 0.0;     // log_derivative(n_max) / n_max
  double lyapunov_bound = 0.0;  // ln K / 1000
  bool precondition_met = false;  // delta_membership(n_max)
  bool truncated = false;
};

ExpansionReport expansion_check(const CircleMap& m, double c, int n_max);

struct CoverIntervals {
  double s = 0.0;
  std::vector<int> n;
  std::vector<double> c_seq;  // left of s, increasing toward s
  std::vector<double> d_seq;  // right of s, decreasing toward s
  std::vector<double> c_residual;
  std::vector<double> d_residual;
  /// Lifted image lengths of (c_n, c_{n+1}] and [d_{n+1}, d_n).
  std::vector<double> c_span;
  std::vector<double> d_span;
  int minimal_n = 1;
};

/// Solves lifted h = 2 n pi on the two monotone branches next to s, for
/// n = first_n .. first_n + count - 1. The branch on (t, s) uses coordinates
/// in [0, 2pi], with s = 0 taken as 2pi on its left side.
CoverIntervals cover_intervals(const CircleMap& m, double s, int count, int first_n = 1);

struct DeletionStep {
  int n = 0;
  std::size_t pieces = 0;
  int deleted_segments = 0;
  double deleted_measure = 0.0;
  double cumulative_deleted = 0.0;
  double surviving_measure = 0.0;
  /// 4 xi sum_{i <= n} K^(-2i/1000)
  double deleted_bound = 0.0;
};

struct DeletionRecord {
  std::vector<DeletionStep> steps;
  bool covered = false;
  int N2 = -1;
  double covered_point = 0.0;  // point of C u S whose xi-arc was covered
  bool exhausted = false;
  int max_deletions_before_cover = 0;
};

/// Iterates I = [lo, hi] under h, deleting what falls in the xi-arcs around
/// C u S, until a surviving piece contains a whole arc (step N2) or
/// max_iter steps pass. xi_del <= 0 selects K^(-1/6).
DeletionRecord iterate_interval_with_deletion(const CircleMap& m, double lo, double hi,
                                              double xi_del = 0.0, int max_iter = 50);

/// sum_{i=1}^{N} a^{-i} and its closed form (a^N - 1) / (a^N (a - 1)).
double geometric_sum(double a, int N);
double geometric_sum_closed(double a, int N);

struct TecRow {
  int i = 0;
  double lhs = 0.0;  // ln J^N - ln J^i
  double rhs = 0.0;  // (N - i) ln(K^(5/6) / K0)
  bool holds = false;
};

struct GrowthLedger {
  int N3 = 0;
  double c = 0.0;
  double K0 = 1.0;
  double log_k2_sum = 0.0;      // ln sum_{i<N3} J^i / (dist(c_i,C) dist(c_i,S))
  double log_k2_implied = 0.0;  // ln(sum * (K^(5/6) - 1))
  double log_JD = 0.0;          // ln(J^N3 D_N3)
  double log_k3_implied = 0.0;  // ln(J^N3 D_N3 / K^(1/3))
  std::vector<TecRow> tec_rows;
  bool tec_all_hold = false;
  double In_offset_lo = 0.0;
  double In_offset_hi = 0.0;
  double image_length = 0.0;    // lifted length of h^(N3+1)(I_N3(c)); inf if it hits S
  bool image_covers = false;    // image_length >= 2 pi
};

GrowthLedger growth_ledger(const CircleMap& m, double c, int N3, double K0);

}  // namespace hetlab
