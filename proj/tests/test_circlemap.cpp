#include "support.hpp"

#include "hetlab/circlemap.hpp"
#include "hetlab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace hetlab;

namespace {

CircleMap make(double K, double a = 0.0, double xi = 0.0) {
  CircleMapParams p;
  p.K_omega = K;
  p.a = a;
  p.xi = xi;
  return CircleMap(p);
}

}  // namespace

TEST_SUITE("circlemap") {

TEST_CASE("h at hand-computed points") {
  const auto m = make(10.0);
  CHECK(h_lift(m, kPi / 6) == doctest::Approx(kPi / 6 + 10 * std::log(2.0)).epsilon(1e-14));
  CHECK(h(m, kPi / 6) == doctest::Approx(wrap_angle(kPi / 6 + 10 * std::log(2.0))).epsilon(1e-14));
  CHECK(h_lift(m, kPi / 2) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK_THROWS_AS(h_lift(m, 0.0), SingularityError);
  CHECK_THROWS_AS(h_lift(m, kPi), SingularityError);
  CHECK(!try_h_lift(m, 0.0).has_value());

  const auto shifted = make(10.0, 0.5, 0.25);
  CHECK(h_lift(shifted, kPi / 2) == doctest::Approx(kPi / 2 + 0.75).epsilon(1e-15));
}

TEST_CASE("h' and h'' at hand-computed points") {
  const auto m = make(10.0);
  CHECK(h_derivatives(m, kPi / 4).d1 == doctest::Approx(-9.0).epsilon(1e-14));
  CHECK(h_derivatives(m, kPi / 2).d1 == doctest::Approx(1.0).epsilon(1e-14));
  // -K (Phi'' Phi - Phi'^2) / Phi^2 = K / sin^2 x.
  CHECK(h_derivatives(m, kPi / 4).d2 == doctest::Approx(20.0).epsilon(1e-14));
}

TEST_CASE("derivatives match finite differences") {
  for (double K : {10.0, 1000.0}) {
    const auto m = make(K, testing::uniform(0, kTwoPi));
    for (int i = 0; i < 1000; ++i) {
      const double x = testing::uniform(0, kTwoPi);
      if (distance_to_set(x, m.sets.S) < 1e-2) continue;
      const double e = 1e-6;
      const double fd1 = (h_lift(m, x + e) - h_lift(m, x - e)) / (2 * e);
      const double e2 = 1e-4;
      const double fd2 = (h_lift(m, x + e2) - 2 * h_lift(m, x) + h_lift(m, x - e2)) / (e2 * e2);
      const auto d = h_derivatives(m, x);
      CHECK(std::abs(fd1 - d.d1) <= 1e-6 * std::max(1.0, std::abs(d.d1)));
      if (distance_to_set(x, m.sets.S) >= 0.1) CHECK(std::abs(fd2 - d.d2) <= 1e-3 * std::max(1.0, std::abs(d.d2)));
    }
  }
}

TEST_CASE("sets C and S") {
  auto s = sets_C_S(Perturbation::sine());
  REQUIRE(s.C.size() == 2);
  REQUIRE(s.S.size() == 2);
  CHECK(s.C[0] == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(s.C[1] == doctest::Approx(3 * kPi / 2).epsilon(1e-15));
  CHECK(s.S[0] == 0.0);
  CHECK(s.S[1] == doctest::Approx(kPi).epsilon(1e-15));

  s = sets_C_S(Perturbation::sine(2.0, 1));
  CHECK(s.C.size() == 2);
  CHECK(s.S.size() == 2);

  s = sets_C_S(Perturbation::sine(1.0, 2));
  REQUIRE(s.C.size() == 4);
  REQUIRE(s.S.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(s.C[k] == doctest::Approx((2 * k + 1) * kPi / 4).epsilon(1e-14));
    CHECK(s.S[k] == doctest::Approx(k * kPi / 2).epsilon(1e-14));
  }

  // A scanned custom sine agrees with the closed form.
  const auto custom = Perturbation::custom([](double x, double) { return std::sin(x); },
                                           [](double x) { return std::cos(x); },
                                           [](double x) { return -std::sin(x); });
  s = sets_C_S(custom);
  REQUIRE(s.C.size() == 2);
  REQUIRE(s.S.size() == 2);
  CHECK(s.C[0] == doctest::Approx(kPi / 2).epsilon(1e-11));
  CHECK(s.S[1] == doctest::Approx(kPi).epsilon(1e-11));

  // 1 - cos x has a double zero at 0.
  const auto degenerate = Perturbation::custom([](double x, double) { return 1.0 - std::cos(x); },
                                               [](double x) { return std::sin(x); },
                                               [](double x) { return std::cos(x); });
  CHECK_THROWS_AS(sets_C_S(degenerate), ConfigError);
  CHECK_THROWS_AS(sets_C_S(Perturbation::zero()), ConfigError);
}

TEST_CASE("turning points are arctan K and pi + arctan K") {
  for (double K : {2.0, 10.0, 24.69, 1e3, 1e4}) {
    CircleMapParams p;
    p.K_omega = K;
    const auto t = true_critical_points(p);
    REQUIRE(t.size() == 2);
    CHECK(t[0] == doctest::Approx(std::atan(K)).epsilon(1e-12));
    CHECK(t[1] == doctest::Approx(kPi + std::atan(K)).epsilon(1e-12));
    for (double x : t) CHECK(std::abs(h_derivatives(make(K), x).d1) <= 1e-8 * K);
    CHECK(distance_to_set(t[0], sets_C_S(p.phi2).C) <= 2.0 / K);
  }
  CircleMapParams p;
  p.K_omega = 0.1;
  CHECK_THROWS_AS(true_critical_points(p), NumericalError);
  CHECK(make(0.1).turning.empty());
}

TEST_CASE("derivative sandwich") {
  const auto r = derivative_sandwich(make(100.0));
  CHECK(r.K0 >= 1.0);
  CHECK(r.K0 <= 10.0);
  CHECK(r.min_ratio * r.K0 >= 1.0 - 1e-12);
  CHECK(r.max_ratio <= r.K0 * (1 + 1e-12));
  CHECK(r.samples_used > 0);
}

TEST_CASE("critical orbit ledger") {
  const auto m = make(200.0, 1.3);
  const double c = m.sets.C[0];
  const auto st = critical_orbit_stats(m, c, 8);
  REQUIRE(!st.truncated);
  REQUIRE(st.orbit.size() == 9);
  CHECK(st.orbit[0] == doctest::Approx(h(m, c)).epsilon(1e-15));
  CHECK(st.logJ[0] == 0.0);
  CHECK(st.logJ[1] == doctest::Approx(std::log(std::abs(h_derivatives(m, st.orbit[0]).d1))).epsilon(1e-14));
  CHECK(std::isinf(st.log_D[0]));
  CHECK(st.xi_small == doctest::Approx(std::pow(200.0, -1.0 / 6.0)));

  // Direct products agree with the log-space accumulation.
  double J = 1.0, inv_sum = 0.0;
  for (int n = 0; n <= 8; ++n) {
    const double x = st.orbit[n];
    const double dn = distance_to_set(x, m.sets.C) * distance_to_set(x, m.sets.S) / J;
    CHECK(st.d[n] == doctest::Approx(dn).epsilon(1e-10));
    if (n >= 1) CHECK(st.D[n] == doctest::Approx(1.0 / (std::sqrt(200.0) * inv_sum)).epsilon(1e-10));
    inv_sum += 1.0 / dn;
    J *= std::abs(h_derivatives(m, x).d1);
  }
  for (int n = 2; n <= 8; ++n) {
    CHECK(st.D[n] < st.D[n - 1]);
    CHECK(st.In_offset_lo[n] < st.In_offset_hi[n]);
  }
}

TEST_CASE("membership sets are nested") {
  for (int t = 0; t < 40; ++t) {
    const auto m = make(1e3, testing::uniform(0, kTwoPi));
    CHECK(delta_membership(m, 0));
    bool prev = true;
    for (int N = 1; N <= 10; ++N) {
      const bool in = delta_membership(m, N);
      if (in) CHECK(prev);
      prev = in;
    }
  }
}

TEST_CASE("sweep measure is monotone in N and stable under refinement") {
  double prev = INFINITY;
  for (int N = 0; N <= 8; ++N) {
    const auto s = sweep_delta(1e3, N, 2000);
    CHECK(s.measure_estimate <= prev);
    prev = s.measure_estimate;
    CHECK(s.bound == doctest::Approx(kTwoPi - std::pow(1e3, -1.0 / 9.0)));
  }
  CHECK(sweep_delta(1e3, 0, 500).measure_estimate == doctest::Approx(kTwoPi));
  const double coarse = sweep_delta(1e3, 3, 2000).measure_estimate;
  const double fine = sweep_delta(1e3, 3, 8000).measure_estimate;
  CHECK(std::abs(coarse - fine) <= 0.1 * kTwoPi);
  // Sweep members agree with pointwise membership.
  const auto s = sweep_delta(1e3, 4, 200);
  for (std::size_t j = 0; j < 200; j += 7)
    CHECK(static_cast<bool>(s.members[j]) == delta_membership(make(1e3, s.phase(j)), 4));
  CHECK_THROWS_AS(sweep_delta(1e3, 3, 0), ConfigError);
}

TEST_CASE("sweep is independent of the thread count") {
  const auto a = sweep_delta(1e4, 6, 3000, 1);
  const auto b = sweep_delta(1e4, 6, 3000, 4);
  CHECK(a.members == b.members);
  CHECK(a.measure_estimate == b.measure_estimate);
}

TEST_CASE("deepest member sweep") {
  const auto d = deepest_member_sweep(1e3, 12, 2000, 5);
  CHECK(d.sweep.member_count() >= 5);
  CHECK(d.sweep.N == d.N);
  const auto phases = member_phases(d.sweep);
  CHECK(phases.size() == d.sweep.member_count());
  for (double a : phases) CHECK(delta_membership(make(1e3, a), d.N));
}

TEST_CASE("map Lyapunov exponent is the mean log-derivative") {
  const auto m = make(1e3, 2.0);
  const double c = m.sets.C[0];
  const auto rep = expansion_check(m, c, 30);
  const auto ly = map_lyapunov(m, h(m, c), 30);
  if (!rep.truncated && !ly.truncated) CHECK(ly.exponent == doctest::Approx(rep.log_average).epsilon(1e-14));
  CHECK(rep.lyapunov_bound == doctest::Approx(std::log(1e3) / 1000));
  CHECK_THROWS_AS(map_lyapunov(m, 1.0, 0), ConfigError);
}

TEST_CASE("cover intervals next to s = pi") {
  const auto m = make(10.0);
  const auto cv = cover_intervals(m, kPi, 4);
  REQUIRE(cv.c_seq.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(cv.c_residual[k] <= 1e-10);
    CHECK(cv.d_residual[k] <= 1e-10);
    CHECK(cv.c_seq[k] < kPi);
    CHECK(cv.d_seq[k] > kPi);
    if (k > 0) {
      CHECK(cv.c_seq[k] > cv.c_seq[k - 1]);
      CHECK(cv.d_seq[k] < cv.d_seq[k - 1]);
    }
  }
  for (std::size_t k = 0; k < cv.c_span.size(); ++k) {
    CHECK(cv.c_span[k] == doctest::Approx(kTwoPi).epsilon(1e-10));
    CHECK(cv.d_span[k] == doctest::Approx(kTwoPi).epsilon(1e-10));
  }
  CHECK_THROWS_AS(cover_intervals(m, 1.0, 4), ConfigError);
}

TEST_CASE("cover intervals below the branch minimum are rejected") {
  const auto m = make(10.0, 6.0);
  try {
    cover_intervals(m, kPi, 4, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("minimal admissible n is 2") != std::string::npos);
  }
  const auto cv = cover_intervals(m, kPi, 3, 2);
  CHECK(cv.minimal_n == 2);
  CHECK_THROWS_AS(cover_intervals(make(0.1), kPi, 4), NumericalError);
}

TEST_CASE("the two branches next to a zero are monotone and unbounded") {
  const auto m = make(50.0);
  const double t = std::atan(50.0);
  double prev = -INFINITY;
  for (int i = 1; i < 200; ++i) {
    const double x = t + (kPi - t) * i / 200.0;
    const double v = h_lift(m, x);
    CHECK(v > prev);
    prev = v;
  }
  double dprev = 0.0;
  for (double e : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double d = std::abs(h_derivatives(m, kPi - e).d1);
    CHECK(d > dprev);
    dprev = d;
  }
  CHECK(dprev >= 50.0 / 1e-8 * 0.99);
}

TEST_CASE("deletion covers at once when I already holds an arc") {
  const auto m = make(1e4);
  const auto rec = iterate_interval_with_deletion(m, 0.1, 2.0);
  CHECK(rec.covered);
  CHECK(rec.N2 == 0);
  CHECK(rec.covered_point == doctest::Approx(kPi / 2));
  CHECK_THROWS_AS(iterate_interval_with_deletion(m, 3.0, 3.5), ConfigError);
  CHECK_THROWS_AS(iterate_interval_with_deletion(m, 1.0, 1.0), ConfigError);
}

TEST_CASE("deletion on a short interval at large K") {
  const auto m = make(1e4, 1.0);
  const auto rec = iterate_interval_with_deletion(m, 1.0, 1.001);
  REQUIRE(rec.covered);
  CHECK(rec.N2 <= 50);
  CHECK(rec.max_deletions_before_cover <= 2);
  for (const auto& s : rec.steps) {
    CHECK(s.surviving_measure >= 0.0);
    CHECK(s.deleted_bound > 0.0);
  }
}

TEST_CASE("geometric sum identity") {
  for (double a : {1.5, 2.0, 10.0, 1e3})
    for (int N : {1, 2, 5, 20}) CHECK(geometric_sum(a, N) == doctest::Approx(geometric_sum_closed(a, N)).epsilon(1e-13));
}

TEST_CASE("growth ledger") {
  const auto d = deepest_member_sweep(1e4, 20, 10000, 10);
  REQUIRE(d.N >= 2);
  const double a = member_phases(d.sweep).front();
  const auto m = make(1e4, a);
  const double K0 = derivative_sandwich(m).K0;
  const auto g = growth_ledger(m, m.sets.C[0], d.N, K0);
  CHECK(g.tec_rows.size() == static_cast<std::size_t>(d.N - 1));
  for (const auto& r : g.tec_rows) CHECK(r.holds == (r.lhs >= r.rhs));
  CHECK(g.In_offset_lo < g.In_offset_hi);
  CHECK(g.log_k3_implied == doctest::Approx(g.log_JD - std::log(1e4) / 3));
  CHECK(g.image_covers == (g.image_length >= kTwoPi));
  CHECK_THROWS_AS(growth_ledger(m, m.sets.C[0], 1, K0), ConfigError);
}

}  // TEST_SUITE
