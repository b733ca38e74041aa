#include "hetlab/circlemap.hpp"

#include "hetlab/errors.hpp"
#include "hetlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hetlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bisection on a sign change of f over [a, b], run to full double precision.
template <typename F>
double bisect(F&& f, double a, double b) {
  if (a > b) std::swap(a, b);
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Sign-change roots of f on a uniform periodic grid.
template <typename F>
std::vector<double> scan_roots(F&& f, int grid) {
  std::vector<double> roots;
  double x0 = 0.0, f0 = f(0.0);
  for (int i = 1; i <= grid; ++i) {
    const double x1 = kTwoPi * i / grid;
    const double f1 = f(x1);
    if (f0 == 0.0) {
      roots.push_back(wrap_angle(x0));
    } else if ((f0 < 0.0) != (f1 < 0.0) && f1 != 0.0) {
      roots.push_back(wrap_angle(bisect(f, x0, x1)));
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Lifted turning points (roots of h') inside (lo, hi).
std::vector<double> turning_points_in(const CircleMap& m, double lo, double hi) {
  std::vector<double> out;
  for (double t : m.turning) {
    double k = std::ceil((lo - t) / kTwoPi);
    for (double x = t + kTwoPi * k; x < hi; x += kTwoPi)
      if (x > lo) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool contains_singular(const CircleMap& m, double lo, double hi) {
  for (double s : m.sets.S) {
    const double x = s + kTwoPi * std::ceil((lo - s) / kTwoPi);
    if (x <= hi) return true;
  }
  return false;
}

/// Lifted image of [lo, hi] under h; requires no S point inside.
std::pair<double, double> image_of(const CircleMap& m, double lo, double hi) {
  double a = h_lift(m, lo), b = h_lift(m, hi);
  double mn = std::min(a, b), mx = std::max(a, b);
  for (double t : turning_points_in(m, lo, hi)) {
    const double v = h_lift(m, t);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {mn, mx};
}

/// Index of the first i in 1..cap with h^(i+1)(c) in C_xi u S_xi for some c,
/// minus one; cap if none. This is the largest N with a in Delta_N.
int survival_depth(const CircleMap& m, int cap) {
  const double xi = std::pow(m.params.K_omega, -1.0 / 6.0);
  int depth = cap;
  for (double c : m.sets.C) {
    double x = c;
    for (int i = 0; i <= cap; ++i) {
      const auto y = try_h_lift(m, x);
      if (!y) {
        depth = std::min(depth, std::max(0, i - 1));
        break;
      }
      x = wrap_angle(*y);
      if (i >= 1 && (distance_to_set(x, m.sets.C) <= xi || distance_to_set(x, m.sets.S) <= xi)) {
        depth = std::min(depth, i - 1);
        break;
      }
      if (i >= depth) break;
    }
  }
  return depth;
}

}  // namespace

void CircleMapParams::validate() const {
  if (!(K_omega > 0.0) || !std::isfinite(K_omega)) throw ConfigError("K_omega must be > 0");
  if (!std::isfinite(a) || !std::isfinite(xi)) throw ConfigError("a and xi must be finite");
  phi2.validate();
}

CriticalSets sets_C_S(const Perturbation& phi2, int grid) {
  phi2.validate();
  if (phi2.is_zero()) throw ConfigError("Phi2 vanishes identically; the circle map is undefined");
  CriticalSets out;
  if (phi2.kind == Perturbation::Kind::Sine) {
    const int m = phi2.harmonic;
    for (int k = 0; k < 2 * m; ++k) {
      out.S.push_back(kPi * k / m);
      out.C.push_back(kPi * (k + 0.5) / m);
    }
    return out;
  }
  if (grid < 16) throw ConfigError("root scan grid must have at least 16 points");
  out.S = scan_roots([&](double x) { return phi2.at(x); }, grid);
  out.C = scan_roots([&](double x) { return phi2.dx(x); }, grid);
  if (out.S.empty() || out.C.empty())
    throw ConfigError("Phi2 needs at least one zero and one critical point on the circle");
  for (double z : out.S)
    if (std::abs(phi2.dx(z)) < 1e-9) {
      std::ostringstream os;
      os << "degenerate zero of Phi2 at x = " << z << " (Phi2 = Phi2' = 0); not a Morse function";
      throw ConfigError(os.str());
    }
  for (double c : out.C)
    if (std::abs(phi2.dxx(c)) < 1e-9) {
      std::ostringstream os;
      os << "degenerate critical point of Phi2 at x = " << c << "; not a Morse function";
      throw ConfigError(os.str());
    }
  return out;
}

CircleMap::CircleMap(const CircleMapParams& p) : params(p), sets(sets_C_S(p.phi2)) {
  params.validate();
  try {
    turning = true_critical_points(p);
  } catch (const NumericalError&) {
    turning.clear();
  }
}

double distance_to_set(double x, const std::vector<double>& set) {
  double d = kInf;
  for (double s : set) d = std::min(d, circle_distance(x, s));
  return d;
}

std::optional<double> try_h_lift(const CircleMap& m, double x) {
  const double phi = m.params.phi2.at(x);
  if (phi == 0.0 || distance_to_set(x, m.sets.S) <= kSingularTolerance) return std::nullopt;
  return x + m.params.xi + m.params.a - m.params.K_omega * std::log(std::abs(phi));
}

double h_lift(const CircleMap& m, double x) {
  const auto v = try_h_lift(m, x);
  if (!v) {
    std::ostringstream os;
    os.precision(17);
    os << "circle map evaluated on its singular set at x = " << x;
    throw SingularityError(os.str());
  }
  return *v;
}

double h(const CircleMap& m, double x) { return wrap_angle(h_lift(m, x)); }

HDerivatives h_derivatives(const CircleMap& m, double x) {
  if (distance_to_set(x, m.sets.S) <= kSingularTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "derivative of the circle map requested on its singular set at x = " << x;
    throw SingularityError(os.str());
  }
  const double f = m.params.phi2.at(x), f1 = m.params.phi2.dx(x), f2 = m.params.phi2.dxx(x);
  const double K = m.params.K_omega;
  return {1.0 - K * f1 / f, -K * (f2 * f - f1 * f1) / (f * f)};
}

std::vector<double> true_critical_points(const CircleMapParams& p) {
  p.validate();
  const CriticalSets sets = sets_C_S(p.phi2);
  auto g = [&](double x) { return p.K_omega * p.phi2.dx(x) - p.phi2.at(x); };
  std::vector<double> roots;
  for (double c : sets.C) {
    const double w = 0.5 * distance_to_set(c, sets.S);
    const double lo = c - w, hi = c + w;
    if ((g(lo) < 0.0) == (g(hi) < 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "no sign change of K Phi2' - Phi2 on [" << lo << ", " << hi << "] around c = " << c
         << " (K_omega = " << p.K_omega << " too small for h' to vanish there)";
      throw NumericalError(os.str());
    }
    roots.push_back(wrap_angle(bisect(g, lo, hi)));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

SandwichResult derivative_sandwich(const CircleMap& m, int sample_count, double window) {
  if (sample_count < 1) throw ConfigError("sandwich sample count must be >= 1");
  const double K = m.params.K_omega;
  SandwichResult r;
  r.window_radius = window > 0.0 ? window : 10.0 / K;
  r.min_ratio = kInf;
  r.max_ratio = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    const double x = kTwoPi * (i + 0.5) / sample_count;
    const double dS = distance_to_set(x, m.sets.S);
    const double dC = distance_to_set(x, m.sets.C);
    if (dS <= kSingularTolerance || dC == 0.0) continue;
    if (distance_to_set(x, m.turning) < r.window_radius) continue;
    const double ratio = std::abs(h_derivatives(m, x).d1) * dS / (K * dC);
    r.min_ratio = std::min(r.min_ratio, ratio);
    r.max_ratio = std::max(r.max_ratio, ratio);
    ++r.samples_used;
  }
  if (r.samples_used == 0) throw NumericalError("every sandwich sample fell in an excluded window");
  r.K0 = std::max({1.0, r.max_ratio, 1.0 / r.min_ratio});
  return r;
}

CriticalOrbitStats critical_orbit_stats(const CircleMap& m, double c, int N, double K0) {
  if (N < 0) throw ConfigError("orbit length must be >= 0");
  if (!(K0 >= 1.0)) throw ConfigError("K0 must be >= 1");
  const double K = m.params.K_omega;
  CriticalOrbitStats st;
  st.c = c;
  st.K0 = K0;
  st.xi_small = std::pow(K, -1.0 / 6.0);
  for (int n = 0; n <= N; ++n) st.xi_of_n.push_back(std::pow(K, -n / 1e6));

  double x = c;
  double logJ = 0.0;
  double lse = -kInf;  // ln sum_{i<n} 1/d_i
  for (int n = 0; n <= N; ++n) {
    const auto y = try_h_lift(m, x);
    if (!y) {
      st.truncated = true;
      st.truncated_at = n;
      break;
    }
    const double cn = wrap_angle(*y);
    const double dC = distance_to_set(cn, m.sets.C);
    const double dS = distance_to_set(cn, m.sets.S);
    st.orbit.push_back(cn);
    st.logJ.push_back(logJ);
    const double log_d = std::log(dC) + std::log(dS) - logJ;
    st.log_d.push_back(log_d);
    st.d.push_back(std::exp(log_d));
    if (n == 0) {
      st.log_D.push_back(kInf);
    } else {
      st.log_D.push_back(-0.5 * std::log(K) - lse);
    }
    st.D.push_back(std::exp(st.log_D.back()));
    lse = log_sum_exp(lse, -log_d);
    if (dS <= kSingularTolerance) {
      st.truncated = true;
      st.truncated_at = n + 1;
      break;
    }
    logJ += std::log(std::abs(h_derivatives(m, cn).d1));
    x = cn;
  }
  const auto len = st.orbit.size();
  st.In_offset_lo.assign(len, std::nan(""));
  st.In_offset_hi.assign(len, std::nan(""));
  const double scale = std::log(K0) + std::log(K);
  for (std::size_t n = 2; n < len; ++n) {
    st.In_offset_lo[n] = std::exp(0.5 * (st.log_D[n] - scale));
    st.In_offset_hi[n] = std::exp(0.5 * (st.log_D[n - 1] - scale));
  }
  return st;
}

bool delta_membership(const CircleMap& m, int N) {
  if (N <= 0) return true;
  return survival_depth(m, N) >= N;
}

std::size_t ParamSweepResult::member_count() const {
  return static_cast<std::size_t>(std::count(members.begin(), members.end(), std::uint8_t{1}));
}

namespace {

std::vector<int> depth_grid(double K_omega, int cap, std::size_t grid_size, int threads, double xi,
                            const Perturbation& phi2) {
  CircleMapParams base;
  base.K_omega = K_omega;
  base.xi = xi;
  base.phi2 = phi2;
  const CircleMap proto(base);
  std::vector<int> depth(grid_size, 0);
  parallel_for(grid_size, threads, [&](std::size_t j) {
    CircleMap local = proto;
    local.params.a = kTwoPi * static_cast<double>(j) / static_cast<double>(grid_size);
    depth[j] = survival_depth(local, cap);
  });
  return depth;
}

ParamSweepResult sweep_from_depths(double K_omega, int N, const std::vector<int>& depth) {
  ParamSweepResult r;
  r.K_omega = K_omega;
  r.N = N;
  r.grid_size = depth.size();
  r.members.resize(depth.size());
  std::size_t count = 0;
  for (std::size_t j = 0; j < depth.size(); ++j) {
    r.members[j] = depth[j] >= N ? 1 : 0;
    count += r.members[j];
  }
  r.measure_estimate = kTwoPi * static_cast<double>(count) / static_cast<double>(depth.size());
  r.bound = kTwoPi - std::pow(K_omega, -1.0 / 9.0);
  return r;
}

}  // namespace

ParamSweepResult sweep_delta(double K_omega, int N, std::size_t grid_size, int threads, double xi,
                             const Perturbation& phi2) {
  if (grid_size == 0) throw ConfigError("sweep grid must be non-empty");
  if (N < 0) throw ConfigError("N must be >= 0");
  if (!(K_omega > 0.0)) throw ConfigError("K_omega must be > 0");
  return sweep_from_depths(K_omega, N, depth_grid(K_omega, N, grid_size, threads, xi, phi2));
}

DeepestSweep deepest_member_sweep(double K_omega, int n_cap, std::size_t grid_size,
                                  std::size_t min_members, int threads) {
  if (grid_size == 0) throw ConfigError("sweep grid must be non-empty");
  const auto depth = depth_grid(K_omega, n_cap, grid_size, threads, 0.0, Perturbation::sine());
  DeepestSweep out;
  out.sweep = sweep_from_depths(K_omega, 0, depth);
  for (int N = 1; N <= n_cap; ++N) {
    auto s = sweep_from_depths(K_omega, N, depth);
    if (s.member_count() < min_members) break;
    out.N = N;
    out.sweep = std::move(s);
  }
  return out;
}

std::vector<double> member_phases(const ParamSweepResult& s) {
  std::vector<double> out;
  for (std::size_t j = 0; j < s.members.size(); ++j)
    if (s.members[j]) out.push_back(s.phase(j));
  return out;
}

LogDerivativeSum log_derivative_sum(const CircleMap& m, double x0, int n) {
  LogDerivativeSum out;
  double x = x0;
  for (int i = 0; i < n; ++i) {
    if (distance_to_set(x, m.sets.S) <= kSingularTolerance) {
      out.truncated = true;
      break;
    }
    out.sum += std::log(std::abs(h_derivatives(m, x).d1));
    out.partial.push_back(out.sum);
    ++out.steps;
    x = wrap_angle(h_lift(m, x));
  }
  return out;
}

MapLyapunov map_lyapunov(const CircleMap& m, double x0, int n) {
  if (n < 1) throw ConfigError("map Lyapunov exponent needs n >= 1");
  const auto s = log_derivative_sum(m, x0, n);
  MapLyapunov r;
  r.steps = s.steps;
  r.truncated = s.truncated;
  r.exponent = s.steps > 0 ? s.sum / s.steps : 0.0;
  return r;
}

ExpansionReport expansion_check(const CircleMap& m, double c, int n_max) {
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  ExpansionReport r;
  r.c = c;
  const double lnK = std::log(m.params.K_omega);
  r.lyapunov_bound = lnK / 1000.0;
  r.precondition_met = delta_membership(m, n_max);
  const auto c0 = try_h_lift(m, c);
  if (!c0) {
    r.truncated = true;
    return r;
  }
  const auto s = log_derivative_sum(m, wrap_angle(*c0), n_max);
  r.truncated = s.truncated;
  r.all_hold = !s.truncated;
  for (int n = 1; n <= s.steps; ++n) {
    ExpansionRow row;
    row.n = n;
    row.log_derivative = s.partial[n - 1];
    row.log_bound = n * lnK / 1000.0;
    row.holds = row.log_derivative >= row.log_bound;
    r.all_hold = r.all_hold && row.holds;
    r.rows.push_back(row);
  }
  r.log_average = s.steps > 0 ? s.sum / s.steps : 0.0;
  return r;
}

CoverIntervals cover_intervals(const CircleMap& m, double s, int count, int first_n) {
  if (count < 2) throw ConfigError("cover_intervals needs count >= 2");
  if (first_n < 1) throw ConfigError("cover_intervals needs first_n >= 1");
  const double sw = wrap_angle(s);
  if (distance_to_set(sw, m.sets.S) > 1e-12)
    throw ConfigError("cover_intervals: s must be a zero of Phi2");
  if (m.turning.empty())
    throw NumericalError("h' has no roots at this K_omega; monotone branches next to s are undefined");

  const double s_left = sw == 0.0 ? kTwoPi : sw;
  const double s_right = sw;
  double gap_left = kInf, gap_right = kInf;
  for (double t : m.turning) {
    const double dl = wrap_angle(s_left - t);
    const double dr = wrap_angle(t - s_right);
    if (dl > 0.0) gap_left = std::min(gap_left, dl);
    if (dr > 0.0) gap_right = std::min(gap_right, dr);
  }
  const double tL = s_left - gap_left;
  const double tR = s_right + gap_right;
  const double minL = h_lift(m, tL), minR = h_lift(m, tR);

  CoverIntervals out;
  out.s = sw;
  out.minimal_n = std::max(1, static_cast<int>(std::floor(std::max(minL, minR) / kTwoPi)) + 1);
  if (first_n < out.minimal_n) {
    std::ostringstream os;
    os << "cover_intervals: 2 n pi lies below the branch minimum for n = " << first_n
       << "; the minimal admissible n is " << out.minimal_n;
    throw ConfigError(os.str());
  }

  // Solves lifted h(x) = target for x between the turning point `t` and the
  // singularity `edge` (h -> +inf at the edge).
  auto solve = [&](double t, double edge, double target, double& residual) {
    double far = t, near = edge - 0.5 * (edge - t);
    while (h_lift(m, near) < target) {
      far = near;
      near = edge - 0.5 * (edge - near);
      if (std::abs(edge - near) <= kSingularTolerance)
        throw NumericalError("cover_intervals: level not reached before the singularity");
    }
    const double x = bisect([&](double v) { return h_lift(m, v) - target; }, far, near);
    residual = std::abs(h_lift(m, x) - target);
    return x;
  };

  for (int k = 0; k < count; ++k) {
    const int n = first_n + k;
    const double target = kTwoPi * n;
    double rc = 0.0, rd = 0.0;
    out.n.push_back(n);
    out.c_seq.push_back(solve(tL, s_left, target, rc));
    out.d_seq.push_back(solve(tR, s_right, target, rd));
    out.c_residual.push_back(rc);
    out.d_residual.push_back(rd);
  }
  for (int k = 0; k + 1 < count; ++k) {
    out.c_span.push_back(h_lift(m, out.c_seq[k + 1]) - h_lift(m, out.c_seq[k]));
    out.d_span.push_back(h_lift(m, out.d_seq[k + 1]) - h_lift(m, out.d_seq[k]));
  }
  return out;
}

DeletionRecord iterate_interval_with_deletion(const CircleMap& m, double lo, double hi,
                                              double xi_del, int max_iter) {
  if (!(hi > lo)) throw ConfigError("deletion: interval must have positive length");
  if (hi - lo >= kTwoPi) throw ConfigError("deletion: interval must be shorter than 2 pi");
  if (contains_singular(m, lo, hi)) throw ConfigError("deletion: interval meets the singular set");
  if (max_iter < 0) throw ConfigError("deletion: max_iter must be >= 0");
  const double K = m.params.K_omega;
  const double xi = xi_del > 0.0 ? xi_del : std::pow(K, -1.0 / 6.0);
  std::vector<double> marks = m.sets.C;
  marks.insert(marks.end(), m.sets.S.begin(), m.sets.S.end());

  DeletionRecord rec;
  std::vector<std::pair<double, double>> pieces{{lo, hi}};
  double cumulative = 0.0, bound_sum = 0.0;
  for (int n = 0; n <= max_iter; ++n) {
    bound_sum += std::pow(K, -2.0 * n / 1000.0);
    DeletionStep step;
    step.n = n;
    step.pieces = pieces.size();
    step.deleted_bound = 4.0 * xi * bound_sum;

    // Cover test: some piece contains a whole arc [p - xi, p + xi].
    for (const auto& [a, b] : pieces) {
      for (double p : marks) {
        const double centre = p + kTwoPi * std::ceil((a + xi - p) / kTwoPi);
        if (centre + xi <= b) {
          rec.covered = true;
          rec.N2 = n;
          rec.covered_point = p;
          break;
        }
      }
      if (rec.covered) break;
    }
    if (rec.covered) {
      double surv = 0.0;
      for (const auto& [a, b] : pieces) surv += b - a;
      step.surviving_measure = surv;
      step.cumulative_deleted = cumulative;
      rec.steps.push_back(step);
      break;
    }

    // Deletion.
    std::vector<std::pair<double, double>> kept;
    for (const auto& [a, b] : pieces) {
      std::vector<std::pair<double, double>> cuts;
      for (double p : marks) {
        for (double centre = p + kTwoPi * std::floor((a - xi - p) / kTwoPi); centre - xi < b;
             centre += kTwoPi) {
          const double l = std::max(a, centre - xi), r = std::min(b, centre + xi);
          if (r > l) cuts.emplace_back(l, r);
        }
      }
      std::sort(cuts.begin(), cuts.end());
      double cursor = a;
      std::vector<std::pair<double, double>> merged;
      for (const auto& c : cuts) {
        if (!merged.empty() && c.first <= merged.back().second)
          merged.back().second = std::max(merged.back().second, c.second);
        else
          merged.push_back(c);
      }
      for (const auto& [l, r] : merged) {
        if (l > cursor) kept.emplace_back(cursor, l);
        cursor = std::max(cursor, r);
        step.deleted_measure += r - l;
        ++step.deleted_segments;
      }
      if (b > cursor) kept.emplace_back(cursor, b);
    }
    cumulative += step.deleted_measure;
    step.cumulative_deleted = cumulative;
    for (const auto& [a, b] : kept) step.surviving_measure += b - a;
    rec.max_deletions_before_cover = std::max(rec.max_deletions_before_cover, step.deleted_segments);
    rec.steps.push_back(step);
    if (kept.empty()) {
      rec.exhausted = true;
      break;
    }
    if (n == max_iter) break;

    // Image under h, one monotone branch at a time.
    pieces.clear();
    for (const auto& [a, b] : kept) {
      std::vector<double> cutsx{a};
      for (double t : turning_points_in(m, a, b)) cutsx.push_back(t);
      cutsx.push_back(b);
      for (std::size_t i = 0; i + 1 < cutsx.size(); ++i) {
        const double u = h_lift(m, cutsx[i]), v = h_lift(m, cutsx[i + 1]);
        double l = std::min(u, v), r = std::max(u, v);
        const double shift = kTwoPi * std::floor(l / kTwoPi);
        pieces.emplace_back(l - shift, r - shift);
      }
    }
    if (pieces.size() > 100000) throw NumericalError("deletion: piece count exploded");
  }
  return rec;
}

double geometric_sum(double a, int N) {
  double s = 0.0, term = 1.0;
  for (int i = 1; i <= N; ++i) {
    term /= a;
    s += term;
  }
  return s;
}

double geometric_sum_closed(double a, int N) {
  const double aN = std::pow(a, N);
  return (aN - 1.0) / (aN * (a - 1.0));
}

GrowthLedger growth_ledger(const CircleMap& m, double c, int N3, double K0) {
  if (N3 < 2) throw ConfigError("growth ledger needs N3 >= 2");
  const double K = m.params.K_omega;
  const auto st = critical_orbit_stats(m, c, N3, K0);
  if (st.truncated) throw SingularityError("critical orbit hits the singular set before N3");

  GrowthLedger g;
  g.N3 = N3;
  g.c = c;
  g.K0 = K0;
  double lse = -kInf;
  for (int i = 0; i < N3; ++i) lse = log_sum_exp(lse, -st.log_d[i]);
  g.log_k2_sum = lse;
  g.log_k2_implied = lse + std::log(std::pow(K, 5.0 / 6.0) - 1.0);
  g.log_JD = st.logJ[N3] + st.log_D[N3];
  g.log_k3_implied = g.log_JD - std::log(K) / 3.0;

  const double rate = std::log(std::pow(K, 5.0 / 6.0) / K0);
  g.tec_all_hold = true;
  for (int i = 1; i < N3; ++i) {
    TecRow row;
    row.i = i;
    row.lhs = st.logJ[N3] - st.logJ[i];
    row.rhs = (N3 - i) * rate;
    row.holds = row.lhs >= row.rhs;
    g.tec_all_hold = g.tec_all_hold && row.holds;
    g.tec_rows.push_back(row);
  }

  g.In_offset_lo = st.In_offset_lo[N3];
  g.In_offset_hi = st.In_offset_hi[N3];

  // Push I_N3(c) forward N3 + 1 times. While it is below double resolution it
  // is carried as offsets from a base point on the critical orbit, advanced
  // with the second-order Taylor expansion of h; once the offsets exceed
  // kExact the endpoints are tracked directly in lifted coordinates.
  constexpr double kExact = 1e-8;
  double base = c, olo = g.In_offset_lo, ohi = g.In_offset_hi;
  bool exact = false;
  double L = 0.0, R = 0.0;
  bool infinite = false;
  for (int step = 0; step <= N3 && !infinite; ++step) {
    if (!exact && std::max(std::abs(olo), std::abs(ohi)) >= kExact) {
      exact = true;
      L = base + std::min(olo, ohi);
      R = base + std::max(olo, ohi);
    }
    if (exact) {
      if (R - L >= kTwoPi || contains_singular(m, L, R)) {
        infinite = true;
        break;
      }
      const auto [l, r] = image_of(m, L, R);
      const double shift = kTwoPi * std::floor(l / kTwoPi);
      L = l - shift;
      R = r - shift;
    } else {
      if (distance_to_set(base, m.sets.S) <= std::max(std::abs(olo), std::abs(ohi))) {
        infinite = true;
        break;
      }
      const auto dv = h_derivatives(m, base);
      olo = dv.d1 * olo + 0.5 * dv.d2 * olo * olo;
      ohi = dv.d1 * ohi + 0.5 * dv.d2 * ohi * ohi;
      base = wrap_angle(h_lift(m, base));
    }
  }
  g.image_length = infinite ? kInf : (exact ? R - L : std::abs(ohi - olo));
  g.image_covers = g.image_length >= kTwoPi;
  return g;
}

}  // namespace hetlab
