#pragma once

// Truncated normal forms of the local maps near the saddle-foci, the global
// map Out(P2) -> In(P1), and the first-return map to Out(P2).

#include "hetlab/angles.hpp"
#include "hetlab/model.hpp"
#include "hetlab/perturbation.hpp"

#include <vector>

namespace hetlab {

/// Point on a cylinder wall In(P1) or Out(P2). Height normalized to |y| <= 1.
struct CylinderPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Point on a disk Out(P1) or In(P2). `branch` carries the sign of the height
/// the point came from, so the lower half of the cylinder is handled by
/// symmetry without losing which connection was followed.
struct DiskPoint {
  double r = 0.0;
  double phi = 0.0;
  int branch = 1;
};

struct NormalFormParams {
  SpectralData spectral;
  double xi = 0.0;
  double lambda = 0.0;
  Perturbation phi1 = Perturbation::zero();
  Perturbation phi2 = Perturbation::sine();

  /// Example-model spectra: C = alpha - beta, E = alpha + beta.
  static NormalFormParams from_model(const ModelParams& m, double xi = 0.0);

  void validate() const;
};

/// Result of one return: the next point, or absorption into W^s(P1).
struct ReturnOutcome {
  bool absorbed = false;
  CylinderPoint next;

  static ReturnOutcome Absorbed() { return {true, {}}; }
  static ReturnOutcome Next(CylinderPoint p) { return {false, p}; }
};

/// In(P1) -> Out(P1): (r, phi) = (|y|^delta1, x - (omega1/E1) ln|y|).
/// Throws SingularityError for y = 0 (the point never leaves W1).
DiskPoint local_map_1(const SpectralData& s, const CylinderPoint& p);

/// In(P2) -> Out(P2): (x, y) = (phi - (omega2/E2) ln r, branch * r^delta2).
/// Throws SingularityError for r = 0.
CylinderPoint local_map_2(const SpectralData& s, const DiskPoint& p);

/// (x - K ln|y|, sgn(y)|y|^delta). Absorbed for y = 0.
ReturnOutcome eta(const SpectralData& s, const CylinderPoint& p);

/// (xi + x + lambda Phi1, y + lambda Phi2). Throws ConfigError when the height
/// leaves [-1, 1] (lambda too large for the cylinder).
CylinderPoint global_map_21(const NormalFormParams& nf, const CylinderPoint& p);

/// G_lambda computed as eta after the global map.
ReturnOutcome return_map(const NormalFormParams& nf, const CylinderPoint& p);

/// G_lambda in closed form:
/// [x + xi + lambda Phi1 - K ln|u|, sgn(u)|u|^delta], u = y + lambda Phi2.
ReturnOutcome return_map_closed_form(const NormalFormParams& nf, const CylinderPoint& p);

/// lambda_(a,n) = exp(-(2 pi n + a) / K), so that -K ln lambda = a mod 2pi.
double lambda_sequence(double K_omega, int n, double a = 0.0);

/// Smallest n >= 1 with lambda_(a,n) <= lambda_max.
int lambda_sequence_index(double K_omega, double a, double lambda_max);

struct GridPoint {
  double x = 0.0;
  double ybar = 0.0;
};

/// nx * ny grid on [0, 2pi) x [-1, 1] with points closer than `margin` to the
/// singular set {ybar + Phi2(x, 0) = 0} removed.
std::vector<GridPoint> standard_defect_grid(const Perturbation& phi2, int nx = 64, int ny = 41,
                                            double margin = 1e-3);

struct SingularLimitEntry {
  int n = 0;
  double lambda = 0.0;
  /// sup over the grid of the angular defect (circle metric) against h_a.
  double defect1 = 0.0;
  /// sup over the grid of the rescaled height lambda^(delta-1) |ybar + Phi2|^delta.
  double defect2 = 0.0;
  /// max(defect1, defect2)
  double defect = 0.0;
  /// lambda^(delta-1) * max |ybar + Phi2|^delta over the grid.
  double defect2_bound = 0.0;
};

/// Compares G_lambda in rescaled coordinates (x, ybar = y / lambda) with the
/// singular limit (h_a(x, ybar), 0), h_a(x, ybar) = x + xi + a - K ln|ybar + Phi2(x, 0)|,
/// at lambda_(a,n), or at lambda_override if positive (the phase is then
/// -K ln lambda mod 2pi and `a` is ignored).
SingularLimitEntry singular_limit_defect(const NormalFormParams& nf, double a, int n,
                                         const std::vector<GridPoint>& grid,
                                         double lambda_override = 0.0);

}  // namespace hetlab
