#include "support.hpp"

#include "hetlab/errors.hpp"
#include "hetlab/switching.hpp"

#include <doctest.h>

#include <cmath>

using namespace hetlab;

namespace {

ModelParams example(double omega, double lambda) {
  ModelParams p;
  p.omega = omega;
  p.lambda = lambda;
  return p;
}

const State kFigureIc = normalized(State(0.01, 0.01, 0.01, 1.0));

double binomial_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                  k * std::log(p) + (n - k) * std::log1p(-p));
}

}  // namespace

TEST_SUITE("switching") {

TEST_CASE("sectors") {
  CHECK(sector_of(State(1, 0, 0, 0), 8) == 0);
  CHECK(sector_of(State(0, 1, 0, 0), 8) == 2);
  CHECK(sector_of(State(-1, 0, 0, 0), 8) == 4);
  CHECK(sector_of(State(0, -1, 0, 0), 8) == 6);
  CHECK(sector_of(State(1, -1e-9, 0, 0), 8) == 7);
}

TEST_CASE("without the perturbation every P1 exit is positive") {
  CodingConfig cfg;
  cfg.max_symbols = 40;
  const auto it = code_trajectory(example(10, 0.0), kFigureIc, cfg);
  REQUIRE(it.p1_count() >= 5);
  CHECK(it.sign_word() == std::string(it.p1_count(), '+'));
  for (std::size_t i = 1; i < it.symbols.size(); ++i) {
    CHECK(it.symbols[i].type != it.symbols[i - 1].type);
    CHECK(it.symbols[i].t > it.symbols[i - 1].t);
  }
}

TEST_CASE("with the perturbation both signs appear") {
  CodingConfig cfg;
  cfg.max_symbols = 50;
  const auto it = code_trajectory(example(10, 0.1), kFigureIc, cfg);
  const auto w = it.sign_word();
  CHECK(w.find('+') != std::string::npos);
  CHECK(w.find('-') != std::string::npos);
  for (const auto& s : it.symbols) {
    if (s.type == SymbolType::P1Exit) CHECK((s.value == 1 || s.value == -1));
    else CHECK((s.value >= 0 && s.value < cfg.sectors));
  }
}

TEST_CASE("stop conditions") {
  CodingConfig cfg;
  cfg.stop_after_p1 = 3;
  auto it = code_trajectory(example(10, 0.1), kFigureIc, cfg);
  CHECK(it.reason == Termination::StopAfterP1);
  CHECK(it.p1_count() == 3);
  cfg = {};
  cfg.max_symbols = 4;
  it = code_trajectory(example(10, 0.1), kFigureIc, cfg);
  CHECK(it.reason == Termination::MaxSymbols);
  CHECK(it.symbols.size() == 4);
  cfg = {};
  cfg.ball_radius = 0.7;
  CHECK_THROWS_AS(code_trajectory(example(10, 0.1), kFigureIc, cfg), ConfigError);
  CHECK_THROWS_AS(code_trajectory(example(10, 0.1), State(1, 1, 0, 0), CodingConfig{}), ConfigError);
}

TEST_CASE("geodesic ball sampling") {
  const State c = normalized(State(0.3, -0.1, 0.2, 0.9));
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const State x = sample_geodesic_ball(c, 0.05, 7, i);
    CHECK(std::abs(x.norm() - 1.0) <= 1e-12);
    CHECK(std::acos(std::clamp(x.dot(c), -1.0, 1.0)) <= 0.05 + 1e-12);
  }
  CHECK((sample_geodesic_ball(c, 0.05, 7, 11) - sample_geodesic_ball(c, 0.05, 7, 11)).norm() == 0.0);
  CHECK((sample_geodesic_ball(c, 0.05, 7, 11) - sample_geodesic_ball(c, 0.05, 8, 11)).norm() > 0.0);
  CHECK_THROWS_AS(sample_geodesic_ball(c, 0.0, 1, 0), ConfigError);
}

TEST_CASE("Wilson intervals match reference values") {
  auto w = wilson_interval(8, 10);
  CHECK(w.low == doctest::Approx(0.49016247153664183).epsilon(1e-12));
  CHECK(w.high == doctest::Approx(0.9433178485456247).epsilon(1e-12));
  w = wilson_interval(1, 100);
  CHECK(w.low == doctest::Approx(0.0017674320641406505).epsilon(1e-12));
  CHECK(w.high == doctest::Approx(0.054486196178705315).epsilon(1e-12));
  w = wilson_interval(0, 10);
  CHECK(w.low == 0.0);
  CHECK(w.high == doctest::Approx(0.2775327998628892).epsilon(1e-12));
  w = wilson_interval(0, 0);
  CHECK(w.low == 0.0);
  CHECK(w.high == 1.0);
}

TEST_CASE("Wilson coverage is close to nominal") {
  for (double p : {0.1, 0.3, 0.5}) {
    const int n = 60;
    double cover = 0.0;
    for (int k = 0; k <= n; ++k) {
      const auto w = wilson_interval(k, n);
      if (w.low <= p && p <= w.high) cover += binomial_pmf(n, k, p);
    }
    CHECK(cover >= 0.92);
    CHECK(cover <= 0.99);
  }
}

TEST_CASE("all sign words") {
  const auto w = all_sign_words(2);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == "++");
  CHECK(w[1] == "+-");
  CHECK(w[2] == "-+");
  CHECK(w[3] == "--");
  CHECK(all_sign_words(5).size() == 32);
}

TEST_CASE("empty census") {
  CensusOptions o;
  o.n_samples = 0;
  o.k = 3;
  const auto r = census(example(10, 0.1), o);
  CHECK(r.n == 0);
  CHECK(r.words.empty());
  CHECK(r.unobserved.size() == 8);
}

TEST_CASE("census locks to one sign without the perturbation") {
  CensusOptions o;
  o.n_samples = 16;
  o.k = 3;
  o.threads = 2;
  // The default ball straddles x3 = 0, so both constant words can appear.
  auto r = census(example(10, 0.0), o);
  CHECK(r.failed == 0);
  CHECK(r.mixed_sign_samples == 0);
  for (const auto& w : r.words) CHECK((w.word == "+++" || w.word == "---"));
  CHECK(follow_fraction(r, "+-").fraction == 0.0);
  CHECK(follow_fraction(r, "").fraction == 1.0);

  o.center = normalized(State(0.01, 0.01, 0.2, 1.0));
  r = census(example(10, 0.0), o);
  REQUIRE(r.words.size() == 1);
  CHECK(r.words[0].word == "+++");
  o.center[2] = -o.center[2];
  r = census(example(10, 0.0), o);
  REQUIRE(r.words.size() == 1);
  CHECK(r.words[0].word == "---");
}

TEST_CASE("census is deterministic across thread counts and alternates") {
  CensusOptions o;
  o.n_samples = 24;
  o.k = 3;
  o.threads = 1;
  const auto a = census(example(10, 0.1), o);
  o.threads = 3;
  const auto b = census(example(10, 0.1), o);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].word == b.samples[i].word);
  REQUIRE(a.words.size() == b.words.size());
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    CHECK(a.words[i].word == b.words[i].word);
    CHECK(a.words[i].count == b.words[i].count);
  }
  CHECK(a.all_alternate);
  std::size_t total = 0;
  for (const auto& w : a.words) {
    total += w.count;
    CHECK(w.wilson_low <= w.fraction);
    CHECK(w.fraction <= w.wilson_high);
  }
  CHECK(total == a.coded);
  CHECK(a.coded + a.incomplete + a.failed == a.n);
  CHECK(a.words.size() + a.unobserved.size() == 8);
  CHECK_THROWS_AS(follow_fraction(a, "+-+-"), ConfigError);
  CHECK_THROWS_AS(follow_fraction(a, "+x"), ConfigError);
}

TEST_CASE("annulus coverage") {
  ModelParams m = example(10, 0.01);
  const auto nf = NormalFormParams::from_model(m);
  AnnulusOptions o;
  o.n_seeds = 50;
  o.n_iter = 100;
  o.bins = 1;
  const auto r = annulus_coverage(nf, o);
  CHECK(r.coverage == 1.0);
  CHECK(r.histogram.size() == 1);
  CHECK(r.histogram[0] == r.points);

  o.bins = 36;
  o.threads = 1;
  const auto one = annulus_coverage(nf, o);
  o.threads = 4;
  const auto four = annulus_coverage(nf, o);
  CHECK(one.histogram == four.histogram);

  // No perturbation: heights contract like |y|^delta, underflow to zero and
  // every orbit is absorbed.
  m.lambda = 0.0;
  const auto r0 = annulus_coverage(NormalFormParams::from_model(m), o);
  CHECK(r0.escaped == 0);
  CHECK(r0.absorbed == o.n_seeds);

  o.discard = 100;
  CHECK_THROWS_AS(annulus_coverage(nf, o), ConfigError);
}

}  // TEST_SUITE
