#include "hetlab/integrate.hpp"

#include "hetlab/angles.hpp"
#include "hetlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hetlab {

// ---------------------------------------------------------------- sections

SectionSpec SectionSpec::ball_exit(const State& center, double radius, int id) {
  SectionSpec s;
  s.kind = SectionKind::Ball;
  s.vector = normalized(center);
  s.scalar = radius;
  s.direction = CrossingDirection::Increasing;
  s.id = id;
  s.validate();
  return s;
}

SectionSpec SectionSpec::hyperplane(const State& normal, double offset,
                                    CrossingDirection direction, int id) {
  SectionSpec s;
  s.kind = SectionKind::Hyperplane;
  s.vector = normal;
  s.scalar = offset;
  s.direction = direction;
  s.id = id;
  s.validate();
  return s;
}

void SectionSpec::validate() const {
  if (!vector.allFinite() || vector.norm() == 0.0)
    throw ConfigError("section needs a nonzero center/normal vector");
  if (kind == SectionKind::Ball && !(scalar > 0.0 && scalar < kPi))
    throw ConfigError("ball section radius must lie in (0, pi)");
}

double SectionSpec::value(const State& x) const {
  if (kind == SectionKind::Hyperplane) return vector.dot(x) - scalar;
  const double n = x.norm();
  const double u = std::clamp(vector.dot(x) / n, -1.0, 1.0);
  return std::acos(u) - scalar;
}

double SectionSpec::rate(const State& x, const State& f) const {
  if (kind == SectionKind::Hyperplane) return vector.dot(f);
  const double n = x.norm();
  const double u = std::clamp(vector.dot(x) / n, -1.0, 1.0);
  const double du = vector.dot(f) / n - vector.dot(x) * x.dot(f) / (n * n * n);
  const double s = std::sqrt(std::max(1.0 - u * u, 1e-300));
  return -du / s;
}

EventLocator::EventLocator(std::vector<SectionSpec> sections, bool project_to_sphere)
    : sections_(std::move(sections)), previous_(sections_.size(), 0.0), project_(project_to_sphere) {}

bool EventLocator::accepts(const SectionSpec& sec, CrossingDirection d) const {
  return sec.direction == CrossingDirection::Both || sec.direction == d;
}

State EventLocator::dense(const AcceptedStep<State>& s, double t) const {
  State x = hermite_interpolate(s, t);
  if (project_) project_to_unit_sphere(x);
  return x;
}

void EventLocator::start(double t0, const State& x0, const State& f0,
                         std::vector<SectionEvent>& out) {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& sec = sections_[i];
    const double g = sec.value(x0);
    previous_[i] = g;
    if (std::abs(g) > kEventTolerance) continue;
    previous_[i] = 0.0;
    const double r = sec.rate(x0, f0);
    if (r == 0.0) continue;
    const auto d = r > 0.0 ? CrossingDirection::Increasing : CrossingDirection::Decreasing;
    if (accepts(sec, d)) out.push_back({t0, x0, sec.id, d});
  }
}

void EventLocator::step(const AcceptedStep<State>& s, std::vector<SectionEvent>& out) {
  const auto first = out.size();
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& sec = sections_[i];
    const double g0 = previous_[i];
    const double g1 = sec.value(s.x1);
    previous_[i] = g1;
    const bool crossed = (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
    if (!crossed) continue;
    const auto d = g0 < 0.0 ? CrossingDirection::Increasing : CrossingDirection::Decreasing;
    if (!accepts(sec, d)) continue;
    if (g1 == 0.0) {
      out.push_back({s.t1, s.x1, sec.id, d});
      continue;
    }
    double a = s.t0, b = s.t1, ga = g0;
    bool found = false;
    for (int it = 0; it < kMaxBisections; ++it) {
      const double m = 0.5 * (a + b);
      const State xm = dense(s, m);
      const double gm = sec.value(xm);
      if (std::abs(gm) <= kEventTolerance) {
        out.push_back({m, xm, sec.id, d});
        found = true;
        break;
      }
      if ((gm < 0.0) == (ga < 0.0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    if (!found) {
      std::ostringstream os;
      os.precision(17);
      os << "event refinement failed after " << kMaxBisections << " bisections in step ["
         << s.t0 << ", " << s.t1 << "] for section " << sec.id;
      throw NumericalError(os.str());
    }
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
            [](const SectionEvent& l, const SectionEvent& r) { return l.t < r.t; });
}

std::vector<SectionEvent> detect_crossings(const ModelParams& params, const State& x0, double t0,
                                           double t1, const std::vector<SectionSpec>& sections,
                                           const IntegratorConfig& cfg) {
  return detect_crossings([&](double, const State& x) { return eval_field(params, x); }, x0, t0,
                          t1, sections, cfg);
}

// ---------------------------------------------------------------- flow

Trajectory integrate(const ModelParams& params, const State& x0, double t0, double t1,
                     const IntegratorConfig& cfg, double sample_dt) {
  if (!x0.allFinite()) throw ConfigError("initial condition must be finite");
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw ConfigError("time span must be finite");
  Trajectory traj;
  State start = x0;
  auto project = [&](State& x) { return cfg.renormalize_to_sphere ? project_to_unit_sphere(x) : 0.0; };
  project(start);
  traj.samples.push_back({t0, start});
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  std::size_t next_sample = 1;
  State last = start;
  auto rhs = [&](double, const State& x) { return eval_field(params, x); };
  traj.stats = dormand_prince<State>(rhs, t0, start, t1, cfg, project,
                                     [&](const AcceptedStep<State>& s) {
                                       last = s.x1;
                                       if (sample_dt <= 0.0) {
                                         traj.samples.push_back({s.t1, s.x1});
                                         return true;
                                       }
                                       while (true) {
                                         const double ts = t0 + dir * sample_dt * next_sample;
                                         if (dir * (ts - s.t1) > 0.0) break;
                                         State x = hermite_interpolate(s, ts);
                                         project(x);
                                         traj.samples.push_back({ts, x});
                                         ++next_sample;
                                       }
                                       return true;
                                     });
  if (sample_dt > 0.0 && traj.samples.back().t != t1) {
    traj.samples.push_back({t1, last});
  }
  return traj;
}

// ---------------------------------------------------------------- variational

namespace {

Eigen::VectorXd pack(const State& x, const Frame& frame) {
  const int k = static_cast<int>(frame.cols());
  Eigen::VectorXd z(4 + 4 * k + 1);
  z.head<4>() = x;
  z.segment(4, 4 * k) = Eigen::Map<const Eigen::VectorXd>(frame.data(), 4 * k);
  z(4 + 4 * k) = 0.0;
  return z;
}

/// Advances (x, frame) from t to t_end; returns the trace(Dg) integral over the
/// segment. `h` carries the step size between segments.
double advance(const ModelParams& params, State& x, Frame& frame, double t, double t_end,
               const IntegratorConfig& cfg, double& h, IntegrationStats& total) {
  const int k = static_cast<int>(frame.cols());
  Eigen::VectorXd z = pack(x, frame);
  auto rhs = [&](double, const Eigen::VectorXd& w) -> Eigen::VectorXd {
    const State xs = w.head<4>();
    const Jacobian J = eval_jacobian(params, xs);
    Eigen::VectorXd dw(w.size());
    dw.head<4>() = eval_field(params, xs);
    Eigen::Map<const Frame> V(w.data() + 4, 4, k);
    Eigen::Map<Frame> dV(dw.data() + 4, 4, k);
    dV.noalias() = J * V;
    dw(4 + 4 * k) = J.trace();
    return dw;
  };
  auto project = [&](Eigen::VectorXd& w) -> double {
    if (!cfg.renormalize_to_sphere) return 0.0;
    const double n = w.head<4>().norm();
    if (n == 0.0) return 0.0;
    w.head<4>() /= n;
    return std::abs(n - 1.0);
  };
  IntegratorConfig seg = cfg;
  seg.initial_step = h;
  Eigen::VectorXd last = z;
  const auto stats = dormand_prince<Eigen::VectorXd>(rhs, t, z, t_end, seg, project,
                                                     [&](const AcceptedStep<Eigen::VectorXd>& s) {
                                                       last = s.x1;
                                                       return true;
                                                     });
  if (stats.accepted > 0) h = stats.next_step;
  total.accepted += stats.accepted;
  total.rejected += stats.rejected;
  total.rhs_evals += stats.rhs_evals;
  total.max_sphere_drift = std::max(total.max_sphere_drift, stats.max_sphere_drift);
  total.next_step = h;
  x = last.head<4>();
  frame = Eigen::Map<const Frame>(last.data() + 4, 4, k);
  return last(4 + 4 * k);
}

}  // namespace

Eigen::VectorXd gram_schmidt(Frame& frame) {
  const Eigen::Index k = frame.cols();
  Eigen::VectorXd norms(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double before = frame.col(j).norm();
    for (Eigen::Index i = 0; i < j; ++i) frame.col(j) -= frame.col(i).dot(frame.col(j)) * frame.col(i);
    const double r = frame.col(j).norm();
    if (!(r > 1e-12 * before) || !std::isfinite(r)) {
      std::ostringstream os;
      os << "tangent frame degenerate: vector " << j << " lost " << before / r
         << "x of its norm to projection";
      throw NumericalError(os.str());
    }
    frame.col(j) /= r;
    norms(j) = r;
  }
  return norms;
}

Frame generic_frame(int k) {
  if (k < 1 || k > 4) throw ConfigError("frame size must be in 1..4");
  Jacobian seed;
  seed << 0.90, 0.30, 0.20, 0.40,
          0.40, -0.80, 0.30, 0.10,
          0.20, 0.35, -0.70, 0.50,
          0.30, 0.20, 0.45, 0.75;
  Eigen::HouseholderQR<Jacobian> qr(seed);
  const Jacobian q = qr.householderQ();
  return q.leftCols(k);
}

VariationalResult integrate_variational(const ModelParams& params, const State& x0,
                                        const Frame& frame0, double t0, double t1,
                                        const IntegratorConfig& cfg,
                                        const VariationalOptions& opts) {
  const auto k = frame0.cols();
  if (k < 1 || k > 4) throw ConfigError("variational frame must have 1..4 vectors");
  if (t1 < t0) throw ConfigError("variational integration runs forward in time");
  {
    Eigen::JacobiSVD<Frame> svd(frame0);
    const auto& sv = svd.singularValues();
    if (!(sv(k - 1) > 0.0) || sv(0) / sv(k - 1) > 1e12)
      throw NumericalError("initial tangent frame is (numerically) linearly dependent");
  }
  VariationalResult res;
  res.log_norms = Eigen::VectorXd::Zero(k);
  State x = x0;
  if (cfg.renormalize_to_sphere) project_to_unit_sphere(x);
  Frame frame = frame0;
  if (opts.keep_samples) res.samples.push_back({t0, x, frame});
  double h = cfg.initial_step;
  double t = t0;
  while (t < t1) {
    const double t_end = std::min(t1, t + cfg.fixed_step);
    res.trace_integral += advance(params, x, frame, t, t_end, cfg, h, res.stats);
    t = t_end;
    if (opts.orthonormalize) res.log_norms += gram_schmidt(frame).array().log().matrix();
    if (opts.keep_samples) res.samples.push_back({t, x, frame});
  }
  return res;
}

LyapunovResult flow_lyapunov(const ModelParams& params, const State& x0, double T, int k,
                             const IntegratorConfig& cfg, const LyapunovOptions& opts) {
  if (k < 1 || k > 4) throw ConfigError("Lyapunov exponent count must be in 1..4");
  if (!(opts.transient >= 0.0) || !(T > opts.transient))
    throw ConfigError("need total time T greater than the transient");
  if (opts.trace_stride < 1) throw ConfigError("trace stride must be >= 1");

  LyapunovResult res;
  res.T = T;
  res.step = cfg.fixed_step;
  res.transient = opts.transient;

  State x = x0;
  if (cfg.renormalize_to_sphere) project_to_unit_sphere(x);
  Frame frame = generic_frame(k);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(k);
  double trace_sum = 0.0;
  double window = 0.0;
  double h = cfg.initial_step;
  IntegrationStats stats;
  double t = 0.0;
  long renorms = 0;
  while (t < T) {
    const double t_end = std::min(T, t + cfg.fixed_step);
    const double tr = advance(params, x, frame, t, t_end, cfg, h, stats);
    const Eigen::VectorXd norms = gram_schmidt(frame);
    if (t >= opts.transient) {
      sums += norms.array().log().matrix();
      trace_sum += tr;
      window += t_end - t;
      if (++renorms % opts.trace_stride == 0) {
        std::vector<double> row{t_end};
        for (Eigen::Index j = 0; j < k; ++j) row.push_back(sums(j) / window);
        std::sort(row.begin() + 1, row.end(), std::greater<>());
        res.trace.push_back(std::move(row));
      }
    }
    t = t_end;
  }
  for (Eigen::Index j = 0; j < k; ++j) res.exponents.push_back(sums(j) / window);
  std::sort(res.exponents.begin(), res.exponents.end(), std::greater<>());
  res.mean_trace = trace_sum / window;
  return res;
}

}  // namespace hetlab
