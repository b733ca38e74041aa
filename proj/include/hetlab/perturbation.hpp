#pragma once

#include <functional>
#include <string>

namespace hetlab {

/// A smooth 2pi-periodic (in x) function Phi(x, y) used by the global map.
/// Circle-map code only needs the restriction to y = 0 and its first two
/// x-derivatives, which are available in closed form for the built-in kinds.
struct Perturbation {
  enum class Kind { Zero, Sine, Custom };

  Kind kind = Kind::Sine;
  double amplitude = 1.0;
  int harmonic = 1;

  // Custom kind only.
  std::function<double(double, double)> value_fn;
  std::function<double(double)> dx_fn;
  std::function<double(double)> dxx_fn;
  std::string label;

  static Perturbation zero();
  /// amplitude * sin(harmonic * x)
  static Perturbation sine(double amplitude = 1.0, int harmonic = 1);
  static Perturbation custom(std::function<double(double, double)> value,
                             std::function<double(double)> dx, std::function<double(double)> dxx,
                             std::string label = "custom");

  double operator()(double x, double y) const;
  /// Restriction to y = 0 and its derivatives.
  double at(double x) const { return (*this)(x, 0.0); }
  double dx(double x) const;
  double dxx(double x) const;

  bool is_zero() const { return kind == Kind::Zero || (kind == Kind::Sine && amplitude == 0.0); }
  /// Upper bound on |Phi| (exact for the built-in kinds, 1 assumed for custom).
  double sup_norm() const;

  void validate() const;
  std::string describe() const;
};

}  // namespace hetlab
