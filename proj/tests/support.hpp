#pragma once

#include "hetlab/model.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline hetlab::State random_unit() {
  std::normal_distribution<double> n;
  hetlab::State x(n(rng()), n(rng()), n(rng()), n(rng()));
  return x.normalized();
}

/// Admissible (alpha, beta, omega, lambda).
inline hetlab::ModelParams random_params() {
  hetlab::ModelParams p;
  p.alpha = uniform(0.5, 2.0);
  p.beta = -uniform(0.05, 0.9) * p.alpha;
  p.omega = uniform(0.5, 12.0);
  p.lambda = uniform(0.0, 1.0);
  return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hetlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
