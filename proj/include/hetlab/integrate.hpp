#pragma once

#include "hetlab/model.hpp"
#include "hetlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace hetlab {

struct TrajectorySample {
  double t = 0.0;
  State x = State::Zero();
};

/// Samples in strictly increasing (or, for backward runs, decreasing) time.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  IntegrationStats stats;

  const State& final_state() const { return samples.back().x; }
};

enum class SectionKind { Ball, Hyperplane };
enum class CrossingDirection { Increasing, Decreasing, Both };

/// A cross-section surface, described by a scalar function g with g = 0 on the
/// surface. Ball: geodesic distance on S^3 to `center` minus `radius`, so an
/// increasing crossing is an exit. Hyperplane: <normal, x> - offset.
struct SectionSpec {
  SectionKind kind = SectionKind::Hyperplane;
  State vector = State::Zero();
  double scalar = 0.0;
  CrossingDirection direction = CrossingDirection::Both;
  int id = 0;

  static SectionSpec ball_exit(const State& center, double radius, int id);
  static SectionSpec hyperplane(const State& normal, double offset, CrossingDirection direction,
                                int id);

  double value(const State& x) const;
  /// dg/dt along a velocity f at x.
  double rate(const State& x, const State& f) const;
  void validate() const;
};

struct SectionEvent {
  double t = 0.0;
  State x = State::Zero();
  int section_id = 0;
  CrossingDirection direction = CrossingDirection::Increasing;
};

/// Event tolerance on |g| after refinement.
inline constexpr double kEventTolerance = 1e-10;
inline constexpr int kMaxBisections = 128;

/// Watches accepted steps for sign changes of section functions and refines
/// each crossing by bisection on the Hermite dense output.
class EventLocator {
 public:
  EventLocator(std::vector<SectionSpec> sections, bool project_to_sphere);

  /// Handles a possible event exactly at the start point.
  void start(double t0, const State& x0, const State& f0, std::vector<SectionEvent>& out);
  /// Appends, in time order, the events inside the step.
  void step(const AcceptedStep<State>& s, std::vector<SectionEvent>& out);

 private:
  State dense(const AcceptedStep<State>& s, double t) const;
  bool accepts(const SectionSpec& sec, CrossingDirection d) const;

  std::vector<SectionSpec> sections_;
  std::vector<double> previous_;
  bool project_;
};

inline double project_to_unit_sphere(State& x) {
  const double n = x.norm();
  if (n == 0.0) return 0.0;
  const double drift = std::abs(n - 1.0);
  x /= n;
  return drift;
}

/// Integrates an arbitrary 4D autonomous-or-not vector field while reporting
/// section crossings. `on_event(const SectionEvent&) -> bool` may stop the run.
/// `on_step(const AcceptedStep<State>&) -> bool` may also stop it.
template <typename Rhs, typename OnEvent, typename OnStep>
IntegrationStats integrate_with_events(Rhs&& rhs, const State& x0, double t0, double t1,
                                       const std::vector<SectionSpec>& sections,
                                       const IntegratorConfig& cfg, OnEvent&& on_event,
                                       OnStep&& on_step) {
  EventLocator locator(sections, cfg.renormalize_to_sphere);
  std::vector<SectionEvent> pending;
  State start = x0;
  if (cfg.renormalize_to_sphere) project_to_unit_sphere(start);
  locator.start(t0, start, rhs(t0, start), pending);
  for (const auto& e : pending)
    if (!on_event(e)) return IntegrationStats{};
  auto project = [&](State& x) { return cfg.renormalize_to_sphere ? project_to_unit_sphere(x) : 0.0; };
  return dormand_prince<State>(rhs, t0, start, t1, cfg, project,
                               [&](const AcceptedStep<State>& s) {
                                 pending.clear();
                                 locator.step(s, pending);
                                 for (const auto& e : pending)
                                   if (!on_event(e)) return false;
                                 return on_step(s);
                               });
}

/// Crossings of `sections` by the solution of dx/dt = rhs(t, x).
template <typename Rhs>
std::vector<SectionEvent> detect_crossings(Rhs&& rhs, const State& x0, double t0, double t1,
                                           const std::vector<SectionSpec>& sections,
                                           const IntegratorConfig& cfg) {
  if (sections.empty()) throw ConfigError("detect_crossings needs at least one section");
  for (const auto& s : sections) s.validate();
  std::vector<SectionEvent> events;
  integrate_with_events(
      rhs, x0, t0, t1, sections, cfg,
      [&](const SectionEvent& e) {
        events.push_back(e);
        return true;
      },
      [](const AcceptedStep<State>&) { return true; });
  return events;
}

std::vector<SectionEvent> detect_crossings(const ModelParams& params, const State& x0, double t0,
                                           double t1, const std::vector<SectionSpec>& sections,
                                           const IntegratorConfig& cfg);

/// Solution of the model flow. With sample_dt > 0 the trajectory is resampled
/// on a uniform grid from the dense output; otherwise every accepted step is
/// kept.
Trajectory integrate(const ModelParams& params, const State& x0, double t0, double t1,
                     const IntegratorConfig& cfg, double sample_dt = 0.0);

using Frame = Eigen::Matrix<double, 4, Eigen::Dynamic>;

struct VariationalSample {
  double t = 0.0;
  State x = State::Zero();
  Frame frame;
};

struct VariationalOptions {
  /// Gram-Schmidt the frame every cfg.fixed_step and accumulate log-norms.
  bool orthonormalize = true;
  bool keep_samples = true;
};

struct VariationalResult {
  std::vector<VariationalSample> samples;
  /// Accumulated log of the Gram-Schmidt normalization factors, per vector.
  Eigen::VectorXd log_norms;
  /// Integral of trace(Dg) along the orbit.
  double trace_integral = 0.0;
  IntegrationStats stats;
};

/// Flow plus tangent dynamics dv/dt = Dg(x) v for every column of frame0.
VariationalResult integrate_variational(const ModelParams& params, const State& x0,
                                        const Frame& frame0, double t0, double t1,
                                        const IntegratorConfig& cfg,
                                        const VariationalOptions& opts = {});

/// Modified Gram-Schmidt in place. Returns the normalization factors; throws
/// NumericalError if a vector collapses relative to its pre-projection norm.
Eigen::VectorXd gram_schmidt(Frame& frame);

/// First k columns of a fixed generic orthonormal 4x4 basis (no column lies
/// in a coordinate subspace, so equilibria do not trap the frame).
Frame generic_frame(int k);

struct LyapunovOptions {
  double transient = 100.0;
  /// A trace row is written every `trace_stride` renormalizations.
  int trace_stride = 20;
};

struct LyapunovResult {
  std::vector<double> exponents;  // descending
  double T = 0.0;
  double step = 0.0;
  double transient = 0.0;
  /// Rows [t, l1, ..., lk] of running estimates after the transient.
  std::vector<std::vector<double>> trace;
  /// Time average of trace(Dg) over the accumulation window.
  double mean_trace = 0.0;
};

/// Top-k Lyapunov exponents by variational integration with Gram-Schmidt
/// renormalization every cfg.fixed_step time units (Wolf's procedure).
LyapunovResult flow_lyapunov(const ModelParams& params, const State& x0, double T, int k,
                             const IntegratorConfig& cfg, const LyapunovOptions& opts = {});

}  // namespace hetlab
