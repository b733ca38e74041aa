#include "hetlab/perturbation.hpp"

#include "hetlab/errors.hpp"

#include <cmath>
#include <sstream>

namespace hetlab {

Perturbation Perturbation::zero() {
  Perturbation p;
  p.kind = Kind::Zero;
  p.amplitude = 0.0;
  return p;
}

Perturbation Perturbation::sine(double amplitude, int harmonic) {
  Perturbation p;
  p.kind = Kind::Sine;
  p.amplitude = amplitude;
  p.harmonic = harmonic;
  p.validate();
  return p;
}

Perturbation Perturbation::custom(std::function<double(double, double)> value,
                                  std::function<double(double)> dx,
                                  std::function<double(double)> dxx, std::string label) {
  Perturbation p;
  p.kind = Kind::Custom;
  p.value_fn = std::move(value);
  p.dx_fn = std::move(dx);
  p.dxx_fn = std::move(dxx);
  p.label = std::move(label);
  p.validate();
  return p;
}

void Perturbation::validate() const {
  switch (kind) {
    case Kind::Zero:
      return;
    case Kind::Sine:
      if (!std::isfinite(amplitude)) throw ConfigError("perturbation amplitude must be finite");
      if (harmonic < 1) throw ConfigError("perturbation harmonic must be >= 1");
      return;
    case Kind::Custom:
      if (!value_fn || !dx_fn || !dxx_fn)
        throw ConfigError("custom perturbation needs value, d/dx and d2/dx2 callbacks");
      return;
  }
}

double Perturbation::operator()(double x, double y) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sine:
      return amplitude * std::sin(harmonic * x);
    case Kind::Custom:
      return value_fn(x, y);
  }
  return 0.0;
}

double Perturbation::dx(double x) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sine:
      return amplitude * harmonic * std::cos(harmonic * x);
    case Kind::Custom:
      return dx_fn(x);
  }
  return 0.0;
}

double Perturbation::dxx(double x) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sine:
      return -amplitude * harmonic * harmonic * std::sin(harmonic * x);
    case Kind::Custom:
      return dxx_fn(x);
  }
  return 0.0;
}

double Perturbation::sup_norm() const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sine:
      return std::abs(amplitude);
    case Kind::Custom:
      return 1.0;
  }
  return 0.0;
}

std::string Perturbation::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Zero:
      os << "0";
      break;
    case Kind::Sine:
      os << amplitude << "*sin(" << harmonic << "x)";
      break;
    case Kind::Custom:
      os << label;
      break;
  }
  return os.str();
}

}  // namespace hetlab
