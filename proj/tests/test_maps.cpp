#include "support.hpp"

#include "hetlab/errors.hpp"
#include "hetlab/maps.hpp"

#include <doctest.h>

#include <cmath>

using namespace hetlab;

namespace {

NormalFormParams example_nf(double omega, double lambda, double xi = 0.0) {
  ModelParams m;
  m.omega = omega;
  m.lambda = lambda;
  return NormalFormParams::from_model(m, xi);
}

}  // namespace

TEST_SUITE("maps") {

TEST_CASE("local map at P1") {
  const auto s = example_nf(1, 0.1).spectral;
  auto q = local_map_1(s, {0.0, 1.0});
  CHECK(q.r == 1.0);
  CHECK(q.phi == 0.0);
  q = local_map_1(s, {0.0, std::exp(-s.E1 / s.omega1)});
  CHECK(q.r == doctest::Approx(std::exp(-s.C1 / s.omega1)).epsilon(1e-14));
  CHECK(q.phi == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q.branch == 1);
  CHECK(local_map_1(s, {0.0, -0.5}).branch == -1);
  CHECK_THROWS_AS(local_map_1(s, {1.0, 0.0}), SingularityError);

  // Constant winding in ln y.
  const double a = local_map_1(s, {0.0, 1e-3}).phi, b = local_map_1(s, {0.0, 1e-3 * std::exp(-0.01)}).phi;
  CHECK(wrap_angle(b - a) == doctest::Approx(0.01 * s.omega1 / s.E1).epsilon(1e-9));
}

TEST_CASE("local map at P2") {
  const auto s = example_nf(1, 0.1).spectral;
  auto q = local_map_2(s, {1.0, 0.0, 1});
  CHECK(q.x == 0.0);
  CHECK(q.y == 1.0);
  q = local_map_2(s, {std::exp(-s.E2 / s.omega2), 0.0, 1});
  CHECK(q.x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q.y == doctest::Approx(std::exp(-s.C2 / s.omega2)).epsilon(1e-14));
  CHECK_THROWS_AS(local_map_2(s, {0.0, 1.0, 1}), SingularityError);
}

TEST_CASE("eta closed values") {
  const auto s = example_nf(1, 0.1).spectral;
  const auto d = derived_constants(s);
  auto r = eta(s, {0.0, 1.0});
  REQUIRE(!r.absorbed);
  CHECK(r.next.x == 0.0);
  CHECK(r.next.y == 1.0);
  r = eta(s, {0.0, 0.5});
  CHECK(r.next.x == doctest::Approx(wrap_angle(d.K_omega * std::log(2.0))).epsilon(1e-14));
  CHECK(r.next.y == doctest::Approx(std::pow(0.5, d.delta)).epsilon(1e-14));
  CHECK(eta(s, {1.0, 0.0}).absorbed);
}

TEST_CASE("eta is the composition of the local maps") {
  for (int t = 0; t < 5; ++t) {
    const auto s = example_nf(testing::uniform(0.5, 12), 0.1).spectral;
    for (int i = 0; i < 1000; ++i) {
      const CylinderPoint p{testing::uniform(0, kTwoPi), testing::uniform(-1, 1)};
      const auto direct = eta(s, p);
      const auto composed = local_map_2(s, local_map_1(s, p));
      CHECK(circle_distance(direct.next.x, composed.x) <= 1e-12);
      CHECK(std::abs(direct.next.y - composed.y) <= 1e-12);
    }
  }
}

TEST_CASE("global map") {
  auto nf = example_nf(1, 0.0, 0.3);
  auto q = global_map_21(nf, {1.0, 0.4});
  CHECK(q.x == doctest::Approx(1.3));
  CHECK(q.y == 0.4);
  nf = example_nf(1, 0.1, 0.0);
  q = global_map_21(nf, {kPi / 2, 0.0});
  CHECK(q.x == doctest::Approx(kPi / 2));
  CHECK(q.y == doctest::Approx(0.1));
  nf.xi = 0.25;
  q = global_map_21(nf, {0.0, 0.0});
  CHECK(q.x == 0.25);
  CHECK(q.y == 0.0);
  CHECK_THROWS_AS(global_map_21(nf, {kPi / 2, 0.95}), ConfigError);
}

TEST_CASE("return map matches its closed form") {
  for (int t = 0; t < 5; ++t) {
    auto nf = example_nf(testing::uniform(0.5, 12), testing::uniform(0.0, 0.2), testing::uniform(0, kTwoPi));
    for (int i = 0; i < 2000; ++i) {
      const CylinderPoint p{testing::uniform(0, kTwoPi), testing::uniform(-0.8, 0.8)};
      const auto a = return_map(nf, p), b = return_map_closed_form(nf, p);
      REQUIRE(a.absorbed == b.absorbed);
      CHECK(circle_distance(a.next.x, b.next.x) <= 1e-12);
      CHECK(std::abs(a.next.y - b.next.y) <= 1e-12);
    }
  }
}

TEST_CASE("lambda = 0: return map and absorption") {
  auto nf = example_nf(1, 0.0, 0.4);
  const auto d = derived_constants(nf.spectral);
  const auto r = return_map(nf, {1.0, -0.3});
  CHECK(r.next.x == doctest::Approx(wrap_angle(1.4 - d.K_omega * std::log(0.3))));
  CHECK(r.next.y == doctest::Approx(-std::pow(0.3, d.delta)));
  CHECK(return_map(nf, {2.0, 0.0}).absorbed);
  nf = example_nf(1, 0.1);
  CHECK(return_map(nf, {0.0, 0.0}).absorbed);
}

TEST_CASE("second component contracts") {
  const auto nf = example_nf(10, 0.15);
  const double delta = derived_constants(nf.spectral).delta;
  for (int i = 0; i < 2000; ++i) {
    const CylinderPoint p{testing::uniform(0, kTwoPi), testing::uniform(-0.8, 0.8)};
    const auto r = return_map(nf, p);
    CHECK(std::abs(r.next.y) <= std::pow(std::abs(p.y) + nf.lambda, delta) * (1 + 1e-12));
  }
}

TEST_CASE("winding of eta grows with |ln y|") {
  const auto s = example_nf(10, 0.1).spectral;
  const double K = derived_constants(s).K_omega;
  for (double y0 : {1e-1, 1e-3, 1e-6}) {
    // Count wraps of the angle along y in [y0, 1].
    int wraps = 0;
    double prev = 0.0;
    const int steps = 20000;
    for (int i = 1; i <= steps; ++i) {
      const double y = std::exp(std::log(y0) * i / steps);
      const double x = eta(s, {0.0, y}).next.x;
      if (x < prev - kPi) ++wraps;
      prev = x;
    }
    CHECK(wraps >= static_cast<int>(std::floor(K * std::abs(std::log(y0)) / kTwoPi)));
  }
}

TEST_CASE("lambda sequence") {
  CHECK(lambda_sequence(kTwoPi, 1, 0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const double K = 24.691358024691358;
  for (double a : {0.0, 1.0, 3.0, 6.0}) {
    for (int n = 1; n < 40; ++n) {
      const double l = lambda_sequence(K, n, a);
      CHECK(circle_distance(-K * std::log(l), a) <= 1e-10);
      CHECK(lambda_sequence(K, n + 1, a) < l);
    }
  }
  CHECK(circle_distance(-K * std::log(lambda_sequence(K, 3)), 0.0) <= 1e-10);
  const int n = lambda_sequence_index(K, 1.0, 0.01);
  CHECK(lambda_sequence(K, n, 1.0) <= 0.01);
  CHECK(lambda_sequence(K, n - 1, 1.0) > 0.01);
  CHECK_THROWS_AS(lambda_sequence(K, 0), ConfigError);
}

TEST_CASE("singular limit: defect decreases along the sequence") {
  const auto nf = example_nf(10, 0.1);
  const double delta = derived_constants(nf.spectral).delta;
  const auto grid = standard_defect_grid(nf.phi2);
  for (double a : {0.0, kPi / 2, kPi}) {
    double prev = INFINITY;
    for (int n = 3; n <= 12; ++n) {
      const auto e = singular_limit_defect(nf, a, n, grid);
      CHECK(e.defect < prev);
      prev = e.defect;
      CHECK(e.defect2 <= e.defect2_bound * (1 + 1e-12));
      CHECK(e.defect2 <= std::pow(e.lambda, delta - 1) * std::pow(2.0, delta) * (1 + 1e-12));
    }
  }
}

TEST_CASE("singular limit at tiny lambda") {
  const auto nf = example_nf(10, 0.1);
  const auto grid = standard_defect_grid(nf.phi2);
  const auto e = singular_limit_defect(nf, 0.0, 0, grid, 1e-12);
  CHECK(e.defect1 <= 1e-6);
  // The height defect is lambda^(delta - 1) |ybar + Phi2|^delta, which at
  // lambda = 1e-12 is still ~3e-6 on this grid; the exact bound holds.
  CHECK(e.defect2 <= e.defect2_bound * (1 + 1e-12));
  CHECK(e.defect2_bound == doctest::Approx(std::pow(1e-12, derived_constants(nf.spectral).delta - 1) *
                                           std::pow(2.0, derived_constants(nf.spectral).delta)));
}

TEST_CASE("defect grid keeps away from the singular set") {
  const auto phi2 = Perturbation::sine();
  for (const auto& g : standard_defect_grid(phi2, 64, 41, 1e-3)) CHECK(std::abs(g.ybar + phi2.at(g.x)) >= 1e-3);
}

}  // TEST_SUITE
