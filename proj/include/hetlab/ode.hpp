#pragma once

// Embedded Runge-Kutta 5(4) pair of Dormand and Prince with step-size control
// and cubic Hermite dense output. Templated on the Eigen vector type so the
// same stepper drives the 4D flow, the variational system and test problems.

#include "hetlab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

namespace hetlab {

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.5;
  /// Renormalization interval for variational runs (orthonormalization of the
  /// tangent frame) and sampling interval for Lyapunov traces.
  double fixed_step = 0.5;
  bool renormalize_to_sphere = true;
  /// First trial step; 0 selects one automatically.
  double initial_step = 0.0;
  std::size_t max_steps = 100'000'000;

  void validate() const;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  /// Largest | |x| - 1 | seen right before a projection onto the sphere.
  double max_sphere_drift = 0.0;
  /// Step size proposed for the next step when the integration ended.
  double next_step = 0.0;
};

/// One accepted step, with enough data for Hermite interpolation.
template <typename Vec>
struct AcceptedStep {
  double t0 = 0.0, t1 = 0.0;
  Vec x0, f0, x1, f1;
};

template <typename Vec>
Vec hermite_interpolate(const AcceptedStep<Vec>& s, double t) {
  const double h = s.t1 - s.t0;
  if (h == 0.0) return s.x0;
  const double th = (t - s.t0) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1;
  const double h10 = th3 - 2 * th2 + th;
  const double h01 = -2 * th3 + 3 * th2;
  const double h11 = th3 - th2;
  return (h00 * s.x0 + (h10 * h) * s.f0 + h01 * s.x1 + (h11 * h) * s.f1).eval();
}

inline void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("integrator tolerances must be > 0");
  if (!(max_step > 0.0)) throw ConfigError("max_step must be > 0");
  if (!(fixed_step > 0.0)) throw ConfigError("fixed_step must be > 0");
}

namespace detail {

template <typename Vec>
double scaled_rms(const Vec& v, const Vec& scale) {
  return std::sqrt((v.array() / scale.array()).square().mean());
}

template <typename Vec>
std::string describe_state(double t, const Vec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << ", x=[";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
  os << "]";
  return os.str();
}

}  // namespace detail

/// Integrates dx/dt = rhs(t, x) from t0 to t1 (either direction).
///
/// `project(Vec&) -> double` is applied to every accepted state and returns the
/// constraint violation it removed. `observe(const AcceptedStep<Vec>&) -> bool`
/// sees every accepted step; returning false stops the integration early.
template <typename Vec, typename Rhs, typename Project, typename Observer>
IntegrationStats dormand_prince(Rhs&& rhs, double t0, const Vec& x_init, double t1,
                                const IntegratorConfig& cfg, Project&& project,
                                Observer&& observe) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  cfg.validate();
  IntegrationStats stats;
  if (t1 == t0) return stats;
  const double dir = t1 > t0 ? 1.0 : -1.0;

  Vec x = x_init;
  project(x);
  Vec f = rhs(t0, x);
  ++stats.rhs_evals;

  auto scale_of = [&](const Vec& a, const Vec& b) -> Vec {
    return (cfg.abs_tol + cfg.rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };

  // Initial step guess (Hairer, Norsett & Wanner, II.4).
  double h = cfg.initial_step;
  if (!(h > 0.0)) {
    const Vec sc = scale_of(x, x);
    const double d0 = detail::scaled_rms(x, sc);
    const double d1 = detail::scaled_rms(f, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(t1 - t0));
    const Vec xe = (x + dir * h0 * f).eval();
    const Vec fe = rhs(t0 + dir * h0, xe);
    ++stats.rhs_evals;
    const double d2 = detail::scaled_rms((fe - f).eval(), sc) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min({100.0 * h0, h1, cfg.max_step});
  }

  double t = t0;
  bool last_rejected = false;
  std::size_t steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > cfg.max_steps)
      throw NumericalError("integrator exceeded max_steps at " + detail::describe_state(t, x));
    h = std::min(h, cfg.max_step);
    const double h_planned = h;
    bool final_step = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      final_step = true;
    }
    const double hs = dir * h;

    const Vec k1 = f;
    const Vec k2 = rhs(t + c2 * hs, (x + hs * (a21 * k1)).eval());
    const Vec k3 = rhs(t + c3 * hs, (x + hs * (a31 * k1 + a32 * k2)).eval());
    const Vec k4 = rhs(t + c4 * hs, (x + hs * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
    const Vec k5 =
        rhs(t + c5 * hs, (x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
    const Vec k6 = rhs(t + hs,
                       (x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
    Vec x_new = (x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6)).eval();
    const Vec k7 = rhs(t + hs, x_new);
    stats.rhs_evals += 6;

    const Vec err = (hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).eval();
    const double err_norm = detail::scaled_rms(err, scale_of(x, x_new));

    if (std::isfinite(err_norm) && err_norm <= 1.0 && x_new.allFinite()) {
      const double drift = project(x_new);
      stats.max_sphere_drift = std::max(stats.max_sphere_drift, drift);
      const double t_new = final_step ? t1 : t + hs;
      const Vec f_new = drift > 0.0 ? rhs(t_new, x_new) : k7;
      if (drift > 0.0) ++stats.rhs_evals;
      AcceptedStep<Vec> step{t, t_new, x, f, x_new, f_new};
      ++stats.accepted;
      t = t_new;
      x = std::move(x_new);
      f = f_new;
      double fac = err_norm == 0.0 ? 5.0 : 0.9 * std::pow(err_norm, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h *= fac;
      if (final_step) h = std::max(h, h_planned);
      last_rejected = false;
      if (!observe(step)) {
        stats.next_step = h;
        return stats;
      }
    } else {
      ++stats.rejected;
      const double fac = std::isfinite(err_norm) ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2))
                                                 : 0.25;
      h *= fac;
      last_rejected = true;
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw NumericalError("step size underflow at " + detail::describe_state(t, x));
    }
  }
  stats.next_step = h;
  return stats;
}

}  // namespace hetlab
