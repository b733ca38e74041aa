#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace hetlab {

template <typename Scalar>
using StateT = Eigen::Matrix<Scalar, 4, 1>;
using State = StateT<double>;

template <typename Scalar>
using JacobianT = Eigen::Matrix<Scalar, 4, 4>;
using Jacobian = JacobianT<double>;

/// Tolerance used when a state is tagged as lying on the unit sphere.
inline constexpr double kSphereTolerance = 1e-9;
/// Field-norm threshold for declaring a point an equilibrium.
inline constexpr double kEquilibriumTolerance = 1e-10;

/// Parameters of the symmetry-breaking family on S^3.
///
/// The field uses two quadratic coefficients, written alpha1 and alpha2 in
/// the model equations; they are bound to `alpha` and `beta` respectively.
struct ModelParams {
  double omega = 1.0;
  double alpha = 1.0;
  double beta = -0.1;
  double lambda = 0.1;

  double alpha1() const { return alpha; }
  double alpha2() const { return beta; }

  /// Throws ConfigError unless omega > 0, beta < 0 < alpha, beta^2 < 8 alpha^2,
  /// |beta| < |alpha| and 0 <= lambda <= 1.
  void validate() const;
};

/// Eigenvalue data of the two saddle-foci: E1, -C1 +- i omega1 at P1 and
/// -C2, E2 +- i omega2 at P2.
struct SpectralData {
  double C1 = 0.0, E1 = 0.0, omega1 = 0.0;
  double C2 = 0.0, E2 = 0.0, omega2 = 0.0;

  void validate() const;
};

/// Saddle values and twisting number.
struct DerivedConstants {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta = 0.0;
  double K_omega = 0.0;
};

struct Equilibrium {
  State location = State::Zero();
  Eigen::Vector4cd eigenvalues = Eigen::Vector4cd::Zero();
  /// Counted within S^3 when the location lies on the unit sphere.
  int stable_dim = 0;
  int unstable_dim = 0;
};

inline const State kP1{0.0, 0.0, 0.0, 1.0};
inline const State kP2{0.0, 0.0, 0.0, -1.0};

/// Right-hand side of the vector field, evaluated in closed form.
template <typename Derived>
StateT<typename Derived::Scalar> eval_field(const ModelParams& p,
                                            const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const S x1 = x(0), x2 = x(1), x3 = x(2), x4 = x(3);
  const S r2 = x.squaredNorm();
  const S radial = S(1) - r2;
  const S a1 = S(p.alpha1()), a2 = S(p.alpha2());
  const S w = S(p.omega), lam = S(p.lambda);
  StateT<S> f;
  f(0) = x1 * radial - w * x2 - a1 * x1 * x4 + a2 * x1 * x4 * x4;
  f(1) = x2 * radial + w * x1 - a1 * x2 * x4 + a2 * x2 * x4 * x4;
  f(2) = x3 * radial + a1 * x3 * x4 + a2 * x3 * x4 * x4 + lam * x1 * x2 * x4;
  f(3) = x4 * radial - a1 * (x3 * x3 - x1 * x1 - x2 * x2) -
         a2 * x4 * (x1 * x1 + x2 * x2 + x3 * x3) - lam * x1 * x2 * x3;
  return f;
}

/// Exact Jacobian of eval_field.
template <typename Derived>
JacobianT<typename Derived::Scalar> eval_jacobian(const ModelParams& p,
                                                  const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const S x1 = x(0), x2 = x(1), x3 = x(2), x4 = x(3);
  const S radial = S(1) - x.squaredNorm();
  const S a1 = S(p.alpha1()), a2 = S(p.alpha2());
  const S w = S(p.omega), lam = S(p.lambda);
  const S planar = radial - a1 * x4 + a2 * x4 * x4;
  JacobianT<S> J;
  J(0, 0) = planar - S(2) * x1 * x1;
  J(0, 1) = -S(2) * x1 * x2 - w;
  J(0, 2) = -S(2) * x1 * x3;
  J(0, 3) = -S(2) * x1 * x4 - a1 * x1 + S(2) * a2 * x1 * x4;

  J(1, 0) = -S(2) * x1 * x2 + w;
  J(1, 1) = planar - S(2) * x2 * x2;
  J(1, 2) = -S(2) * x2 * x3;
  J(1, 3) = -S(2) * x2 * x4 - a1 * x2 + S(2) * a2 * x2 * x4;

  J(2, 0) = -S(2) * x1 * x3 + lam * x2 * x4;
  J(2, 1) = -S(2) * x2 * x3 + lam * x1 * x4;
  J(2, 2) = radial - S(2) * x3 * x3 + a1 * x4 + a2 * x4 * x4;
  J(2, 3) = -S(2) * x3 * x4 + a1 * x3 + S(2) * a2 * x3 * x4 + lam * x1 * x2;

  J(3, 0) = -S(2) * x1 * x4 + S(2) * a1 * x1 - S(2) * a2 * x4 * x1 - lam * x2 * x3;
  J(3, 1) = -S(2) * x2 * x4 + S(2) * a1 * x2 - S(2) * a2 * x4 * x2 - lam * x1 * x3;
  J(3, 2) = -S(2) * x3 * x4 - S(2) * a1 * x3 - S(2) * a2 * x4 * x3 - lam * x1 * x2;
  J(3, 3) = radial - S(2) * x4 * x4 - a2 * (x1 * x1 + x2 * x2 + x3 * x3);
  return J;
}

/// <g(x), x>. Vanishes identically on the unit sphere.
template <typename Derived>
typename Derived::Scalar tangency_defect(const ModelParams& p,
                                         const Eigen::MatrixBase<Derived>& x) {
  return eval_field(p, x).dot(x);
}

/// Eigenvalues of a 4x4 real matrix, sorted by descending real part (ties by
/// descending imaginary part).
Eigen::Vector4cd eigenvalues(const Jacobian& m);

/// Linearization at a point. Throws NumericalError if the point is not an
/// equilibrium to kEquilibriumTolerance.
Equilibrium equilibrium_at(const ModelParams& p, const State& location);

/// P1 = (0,0,0,1) and P2 = (0,0,0,-1) with their spectra.
std::array<Equilibrium, 2> saddle_foci(const ModelParams& p);

/// C1 = C2 = alpha - beta, E1 = E2 = alpha + beta, omega1 = omega2 = omega.
SpectralData spectral_from_model(const ModelParams& p);

DerivedConstants derived_constants(const SpectralData& s);

/// Projects onto the unit sphere. Zero input is returned unchanged.
template <typename Derived>
StateT<typename Derived::Scalar> normalized(const Eigen::MatrixBase<Derived>& x) {
  const auto n = x.norm();
  if (n == typename Derived::Scalar(0)) return x;
  return x / n;
}

inline bool on_sphere(const State& x, double tol = kSphereTolerance) {
  return std::abs(x.norm() - 1.0) <= tol;
}

}  // namespace hetlab
