#include "hetlab/model.hpp"

#include "hetlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hetlab {

void ModelParams::validate() const {
  std::ostringstream why;
  if (!(omega > 0.0)) why << "omega must be > 0 (got " << omega << "); ";
  if (!(alpha > 0.0)) why << "alpha must be > 0 (got " << alpha << "); ";
  if (!(beta < 0.0)) why << "beta must be < 0 (got " << beta << "); ";
  if (!(beta * beta < 8.0 * alpha * alpha)) why << "need beta^2 < 8 alpha^2; ";
  if (!(std::abs(beta) < std::abs(alpha))) why << "need |beta| < |alpha|; ";
  if (!(lambda >= 0.0 && lambda <= 1.0)) why << "lambda must lie in [0,1] (got " << lambda << "); ";
  const std::string msg = why.str();
  if (!msg.empty()) throw ConfigError("invalid model parameters: " + msg.substr(0, msg.size() - 2));
}

void SpectralData::validate() const {
  if (!(E1 > 0.0) || !(E2 > 0.0))
    throw ConfigError("expanding rates E1, E2 must be positive");
  if (!(C1 > E1)) throw ConfigError("saddle-focus P1 requires C1 > E1");
  if (!(C2 > E2)) throw ConfigError("saddle-focus P2 requires C2 > E2");
  if (!(omega1 > 0.0) || !(omega2 > 0.0))
    throw ConfigError("rotation rates omega1, omega2 must be positive");
}

Eigen::Vector4cd eigenvalues(const Jacobian& m) {
  Eigen::EigenSolver<Jacobian> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  Eigen::Vector4cd ev = solver.eigenvalues();
  std::sort(ev.data(), ev.data() + 4, [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return ev;
}

Equilibrium equilibrium_at(const ModelParams& p, const State& location) {
  const double residual = eval_field(p, location).norm();
  if (residual > kEquilibriumTolerance) {
    std::ostringstream os;
    os << "point is not an equilibrium: |g(x)| = " << residual;
    throw NumericalError(os.str());
  }
  Equilibrium eq;
  eq.location = location;
  const Jacobian J = eval_jacobian(p, location);
  eq.eigenvalues = eigenvalues(J);
  // Dimensions are counted on S^3: restrict J to the tangent space, which it
  // preserves at an equilibrium on the sphere. Off the sphere use all of R^4.
  Eigen::VectorXcd spectrum = eq.eigenvalues;
  if (std::abs(location.norm() - 1.0) <= 1e-12) {
    const Eigen::Matrix4d Q = Eigen::HouseholderQR<Eigen::Matrix<double, 4, 1>>(location).householderQ();
    const Eigen::Matrix<double, 4, 3> T = Q.rightCols<3>();
    spectrum = Eigen::EigenSolver<Eigen::Matrix3d>(T.transpose() * J * T, false).eigenvalues();
  }
  for (const auto& mu : spectrum) {
    if (mu.real() < 0.0) ++eq.stable_dim;
    if (mu.real() > 0.0) ++eq.unstable_dim;
  }
  return eq;
}

std::array<Equilibrium, 2> saddle_foci(const ModelParams& p) {
  return {equilibrium_at(p, kP1), equilibrium_at(p, kP2)};
}

SpectralData spectral_from_model(const ModelParams& p) {
  if (!(p.alpha + p.beta > 0.0))
    throw ConfigError("alpha + beta must be positive for a positive expanding rate");
  SpectralData s;
  s.C1 = s.C2 = p.alpha - p.beta;
  s.E1 = s.E2 = p.alpha + p.beta;
  s.omega1 = s.omega2 = p.omega;
  return s;
}

DerivedConstants derived_constants(const SpectralData& s) {
  s.validate();
  DerivedConstants d;
  d.delta1 = s.C1 / s.E1;
  d.delta2 = s.C2 / s.E2;
  d.delta = d.delta1 * d.delta2;
  d.K_omega = (s.E2 * s.omega1 + s.C1 * s.omega2) / (s.E1 * s.E2);
  return d;
}

}  // namespace hetlab
