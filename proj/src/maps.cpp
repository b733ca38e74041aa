#include "hetlab/maps.hpp"

#include "hetlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hetlab {

namespace {

double signed_power(double u, double p) { return std::copysign(std::pow(std::abs(u), p), u); }

}  // namespace

NormalFormParams NormalFormParams::from_model(const ModelParams& m, double xi) {
  m.validate();
  NormalFormParams nf;
  nf.spectral = spectral_from_model(m);
  nf.xi = xi;
  nf.lambda = m.lambda;
  return nf;
}

void NormalFormParams::validate() const {
  spectral.validate();
  if (!std::isfinite(xi)) throw ConfigError("xi must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  phi1.validate();
  phi2.validate();
}

DiskPoint local_map_1(const SpectralData& s, const CylinderPoint& p) {
  if (p.y == 0.0) throw SingularityError("local map at P1: y = 0 lies on W^s(P1)");
  const double ay = std::abs(p.y);
  DiskPoint q;
  q.r = std::pow(ay, s.C1 / s.E1);
  q.phi = wrap_angle(p.x - (s.omega1 / s.E1) * std::log(ay));
  q.branch = p.y > 0.0 ? 1 : -1;
  return q;
}

CylinderPoint local_map_2(const SpectralData& s, const DiskPoint& p) {
  if (p.r == 0.0) throw SingularityError("local map at P2: r = 0 lies on W^s(P2)");
  CylinderPoint q;
  q.x = wrap_angle(p.phi - (s.omega2 / s.E2) * std::log(p.r));
  q.y = p.branch * std::pow(p.r, s.C2 / s.E2);
  return q;
}

ReturnOutcome eta(const SpectralData& s, const CylinderPoint& p) {
  if (p.y == 0.0) return ReturnOutcome::Absorbed();
  const DerivedConstants d = derived_constants(s);
  return ReturnOutcome::Next(
      {wrap_angle(p.x - d.K_omega * std::log(std::abs(p.y))), signed_power(p.y, d.delta)});
}

CylinderPoint global_map_21(const NormalFormParams& nf, const CylinderPoint& p) {
  CylinderPoint q;
  q.x = wrap_angle(nf.xi + p.x + nf.lambda * nf.phi1(p.x, p.y));
  q.y = p.y + nf.lambda * nf.phi2(p.x, p.y);
  if (!(std::abs(q.y) <= 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "global map leaves the cylinder: |y + lambda Phi2| = " << std::abs(q.y)
       << " > 1 at (x, y) = (" << p.x << ", " << p.y << "); reduce lambda";
    throw ConfigError(os.str());
  }
  return q;
}

ReturnOutcome return_map(const NormalFormParams& nf, const CylinderPoint& p) {
  return eta(nf.spectral, global_map_21(nf, p));
}

ReturnOutcome return_map_closed_form(const NormalFormParams& nf, const CylinderPoint& p) {
  const DerivedConstants d = derived_constants(nf.spectral);
  const double u = p.y + nf.lambda * nf.phi2(p.x, p.y);
  if (!(std::abs(u) <= 1.0)) throw ConfigError("return map: height leaves the cylinder");
  if (u == 0.0) return ReturnOutcome::Absorbed();
  const double x = p.x + nf.xi + nf.lambda * nf.phi1(p.x, p.y) - d.K_omega * std::log(std::abs(u));
  return ReturnOutcome::Next({wrap_angle(x), signed_power(u, d.delta)});
}

double lambda_sequence(double K_omega, int n, double a) {
  if (!(K_omega > 0.0)) throw ConfigError("K_omega must be > 0");
  if (n < 1) throw ConfigError("lambda sequence index must be >= 1");
  return std::exp(-(kTwoPi * n + a) / K_omega);
}

int lambda_sequence_index(double K_omega, double a, double lambda_max) {
  if (!(lambda_max > 0.0 && lambda_max < 1.0)) throw ConfigError("lambda_max must lie in (0, 1)");
  // -(2 pi n + a) / K <= ln lambda_max
  const double n_real = (-K_omega * std::log(lambda_max) - a) / kTwoPi;
  int n = std::max(1, static_cast<int>(std::ceil(n_real)));
  while (n > 1 && lambda_sequence(K_omega, n - 1, a) <= lambda_max) --n;
  while (lambda_sequence(K_omega, n, a) > lambda_max) ++n;
  return n;
}

std::vector<GridPoint> standard_defect_grid(const Perturbation& phi2, int nx, int ny,
                                            double margin) {
  if (nx < 1 || ny < 2) throw ConfigError("defect grid needs nx >= 1 and ny >= 2");
  std::vector<GridPoint> grid;
  grid.reserve(static_cast<std::size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i) {
    const double x = kTwoPi * i / nx;
    for (int j = 0; j < ny; ++j) {
      const double yb = -1.0 + 2.0 * j / (ny - 1);
      if (std::abs(yb + phi2.at(x)) < margin) continue;
      grid.push_back({x, yb});
    }
  }
  return grid;
}

SingularLimitEntry singular_limit_defect(const NormalFormParams& nf_base, double a, int n,
                                         const std::vector<GridPoint>& grid,
                                         double lambda_override) {
  const DerivedConstants d = derived_constants(nf_base.spectral);
  SingularLimitEntry e;
  e.n = n;
  e.lambda = lambda_override > 0.0 ? lambda_override : lambda_sequence(d.K_omega, n, a);
  // With an explicit lambda the phase is the one it encodes.
  const double phase = lambda_override > 0.0 ? wrap_angle(-d.K_omega * std::log(e.lambda)) : a;
  NormalFormParams nf = nf_base;
  nf.lambda = e.lambda;
  double max_u = 0.0;
  for (const auto& g : grid) {
    const double limit_u = g.ybar + nf.phi2.at(g.x);
    const double h = g.x + nf.xi + phase - d.K_omega * std::log(std::abs(limit_u));
    const auto out = return_map_closed_form(nf, {g.x, e.lambda * g.ybar});
    max_u = std::max(max_u, std::abs(limit_u));
    if (out.absorbed) {
      e.defect1 = e.defect2 = std::numeric_limits<double>::infinity();
      continue;
    }
    e.defect1 = std::max(e.defect1, circle_distance(out.next.x, h));
    e.defect2 = std::max(e.defect2, std::abs(out.next.y) / e.lambda);
  }
  e.defect = std::max(e.defect1, e.defect2);
  e.defect2_bound = std::pow(e.lambda, d.delta - 1.0) * std::pow(max_u, d.delta);
  return e;
}

}  // namespace hetlab
