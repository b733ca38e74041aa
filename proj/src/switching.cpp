#include "hetlab/switching.hpp"

#include "hetlab/angles.hpp"
#include "hetlab/errors.hpp"
#include "hetlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hetlab {

namespace {

constexpr int kBallP1 = 1;
constexpr int kBallP2 = 2;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

/// Uniform in [0, 1) from the top 53 bits; independent of the standard library.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void CodingConfig::validate() const {
  if (!(ball_radius > 0.0 && ball_radius < 0.5)) throw ConfigError("ball_radius must lie in (0, 0.5)");
  if (sectors < 2) throw ConfigError("sectors must be >= 2");
  if (max_symbols < 1) throw ConfigError("max_symbols must be >= 1");
  if (!(max_time > 0.0)) throw ConfigError("max_time must be > 0");
  if (!(absorbing_radius > 0.0)) throw ConfigError("absorbing_radius must be > 0");
  if (stop_after_p1 < 0) throw ConfigError("stop_after_p1 must be >= 0");
  if (!(integrator.rel_tol > 0.0 && integrator.abs_tol > 0.0))
    throw ConfigError("integrator tolerances must be > 0");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::MaxSymbols: return "max_symbols";
    case Termination::MaxTime: return "max_time";
    case Termination::LeftAbsorbingDomain: return "left_absorbing_domain";
    case Termination::StopAfterP1: return "stop_after_p1";
  }
  return "unknown";
}

std::string Itinerary::sign_word() const {
  std::string w;
  for (const auto& s : symbols)
    if (s.type == SymbolType::P1Exit) w.push_back(s.value > 0 ? '+' : '-');
  return w;
}

int Itinerary::p1_count() const {
  return static_cast<int>(std::count_if(symbols.begin(), symbols.end(),
                                        [](const auto& s) { return s.type == SymbolType::P1Exit; }));
}

int sector_of(const State& x, int sectors) {
  const double phi = wrap_angle(std::atan2(x[1], x[0]));
  return std::min(sectors - 1, static_cast<int>(phi / (kTwoPi / sectors)));
}

Itinerary code_trajectory(const ModelParams& params, const State& x0, const CodingConfig& cfg) {
  params.validate();
  cfg.validate();
  if (!x0.allFinite() || !on_sphere(x0, 1e-6)) throw ConfigError("initial condition must lie on S^3");

  const std::vector<SectionSpec> sections{SectionSpec::ball_exit(kP1, cfg.ball_radius, kBallP1),
                                          SectionSpec::ball_exit(kP2, cfg.ball_radius, kBallP2)};
  const auto inside_any = [&](const State& x) {
    return sections[0].value(x) < 0.0 || sections[1].value(x) < 0.0;
  };

  Itinerary it;
  bool visited = inside_any(normalized(x0));
  int p1 = 0;
  bool stop = false;
  auto record = [&](SymbolType type, int value, double t) {
    if (!it.symbols.empty() && it.symbols.back().type == type) {
      if (type == SymbolType::P1Exit) --p1;
      it.symbols.back() = {type, value, t};
    } else {
      it.symbols.push_back({type, value, t});
    }
    if (type == SymbolType::P1Exit) ++p1;
    if (cfg.stop_after_p1 > 0 && p1 >= cfg.stop_after_p1) {
      it.reason = Termination::StopAfterP1;
      stop = true;
    } else if (static_cast<int>(it.symbols.size()) >= cfg.max_symbols) {
      it.reason = Termination::MaxSymbols;
      stop = true;
    }
  };

  auto rhs = [&](double, const State& x) -> State { return eval_field(params, x); };
  it.t_end = cfg.max_time;
  it.reason = Termination::MaxTime;
  integrate_with_events(
      rhs, x0, 0.0, cfg.max_time, sections, cfg.integrator,
      [&](const SectionEvent& e) {
        if (e.section_id == kBallP1)
          record(SymbolType::P1Exit, e.x[2] >= 0.0 ? 1 : -1, e.t);
        else
          record(SymbolType::P2Exit, sector_of(e.x, cfg.sectors), e.t);
        if (stop) it.t_end = e.t;
        return !stop;
      },
      [&](const AcceptedStep<State>& s) {
        visited = visited || inside_any(s.x1);
        const double rho12 = std::hypot(s.x1[0], s.x1[1]);
        if (std::min(std::abs(s.x1[2]), rho12) > cfg.absorbing_radius) {
          it.reason = Termination::LeftAbsorbingDomain;
          it.t_end = s.t1;
          return false;
        }
        return true;
      });
  if (!visited && it.symbols.empty())
    throw NumericalError("trajectory never entered the neighbourhood of P1 or P2");
  return it;
}

State sample_geodesic_ball(const State& center, double radius, std::uint64_t seed,
                           std::uint64_t index) {
  if (!(radius > 0.0 && radius < kPi)) throw ConfigError("sampling radius must lie in (0, pi)");
  const State c = normalized(center);
  // Orthonormal basis of the tangent space at c: a Householder reflection
  // taking e4 to c maps e1, e2, e3 onto it.
  State v = c - State::UnitW();
  Eigen::Matrix4d H = Eigen::Matrix4d::Identity();
  if (v.norm() > 1e-14) {
    v.normalize();
    H -= 2.0 * v * v.transpose();
  }
  auto rng = stream(seed, index);
  for (;;) {
    Eigen::Vector3d u(2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0);
    const double n = u.norm();
    if (n > 1.0 || n == 0.0) continue;
    const double rho = n * radius;
    // Volume element of the exponential map on S^3 is sin^2(rho)/rho^2.
    const double accept = std::pow(std::sin(rho) / rho, 2);
    if (unit(rng) >= accept) continue;
    const Eigen::Vector3d dir = u / n;
    const State t = H.col(0) * dir[0] + H.col(1) * dir[1] + H.col(2) * dir[2];
    return normalized(State(std::cos(rho) * c + std::sin(rho) * t));
  }
}

WilsonInterval wilson_interval(std::size_t count, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(count) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonInterval w{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (count == 0) w.low = 0.0;
  if (count == n) w.high = 1.0;
  return w;
}

void CensusOptions::validate() const {
  if (!center.allFinite() || center.norm() == 0.0) throw ConfigError("census center must be nonzero");
  if (!(radius > 0.0 && radius < kPi)) throw ConfigError("census radius must lie in (0, pi)");
  if (k < 0 || k > 20) throw ConfigError("word length k must lie in [0, 20]");
  coding.validate();
}

const WordStat* CensusResult::find(const std::string& word) const {
  for (const auto& w : words)
    if (w.word == word) return &w;
  return nullptr;
}

std::vector<std::string> all_sign_words(int k) {
  std::vector<std::string> out{""};
  for (int i = 0; i < k; ++i) {
    std::vector<std::string> next;
    for (const auto& w : out) {
      next.push_back(w + '+');
      next.push_back(w + '-');
    }
    out = std::move(next);
  }
  return out;
}

CensusResult census(const ModelParams& params, const CensusOptions& opts) {
  params.validate();
  opts.validate();
  CensusResult r;
  r.k = opts.k;
  r.n = opts.n_samples;
  r.samples.resize(opts.n_samples);
  CodingConfig coding = opts.coding;
  coding.stop_after_p1 = opts.k;

  parallel_for(opts.n_samples, opts.threads, [&](std::size_t i) {
    CensusSample& s = r.samples[i];
    const State x0 = sample_geodesic_ball(opts.center, opts.radius, opts.seed, i);
    try {
      const Itinerary it = code_trajectory(params, x0, coding);
      for (std::size_t j = 1; j < it.symbols.size(); ++j)
        if (it.symbols[j].type == it.symbols[j - 1].type) s.alternates = false;
      const std::string w = it.sign_word();
      s.mixed_signs = w.find('+') != std::string::npos && w.find('-') != std::string::npos;
      if (static_cast<int>(w.size()) >= opts.k) {
        s.coded = true;
        s.word = w.substr(0, opts.k);
      }
    } catch (const NumericalError&) {
      s.failed = true;
    }
  });

  std::map<std::string, std::size_t> counts;
  for (const auto& s : r.samples) {
    r.all_alternate = r.all_alternate && s.alternates;
    if (s.mixed_signs) ++r.mixed_sign_samples;
    if (s.failed) {
      ++r.failed;
    } else if (!s.coded) {
      ++r.incomplete;
    } else {
      ++r.coded;
      ++counts[s.word];
    }
  }
  for (const auto& w : all_sign_words(opts.k)) {
    const auto found = counts.find(w);
    if (found == counts.end()) {
      r.unobserved.push_back(w);
      continue;
    }
    WordStat ws;
    ws.word = w;
    ws.count = found->second;
    ws.fraction = r.n ? static_cast<double>(ws.count) / static_cast<double>(r.n) : 0.0;
    const auto wi = wilson_interval(ws.count, r.n);
    ws.wilson_low = wi.low;
    ws.wilson_high = wi.high;
    r.words.push_back(ws);
  }
  return r;
}

FollowFraction follow_fraction(const CensusResult& c, const std::string& path) {
  if (static_cast<int>(path.size()) > c.k) throw ConfigError("path is longer than the census word length");
  if (path.find_first_not_of("+-") != std::string::npos)
    throw ConfigError("path must be a word over {+, -}");
  FollowFraction f;
  f.path = path;
  f.coded = c.coded;
  for (const auto& s : c.samples)
    if (s.coded && s.word.compare(0, path.size(), path) == 0) ++f.matches;
  f.fraction = f.coded ? static_cast<double>(f.matches) / static_cast<double>(f.coded) : 0.0;
  f.interval = wilson_interval(f.matches, f.coded);
  return f;
}

void AnnulusOptions::validate() const {
  if (!(seed_radius > 0.0)) throw ConfigError("seed_radius must be > 0");
  if (std::abs(y_center) + seed_radius > 1.0) throw ConfigError("seed disk must lie inside |y| <= 1");
  if (n_iter < 1) throw ConfigError("n_iter must be >= 1");
  if (bins < 1) throw ConfigError("bins must be >= 1");
  if (discard < 0 || discard >= n_iter) throw ConfigError("discard must lie in [0, n_iter)");
}

AnnulusResult annulus_coverage(const NormalFormParams& nf, const AnnulusOptions& opts) {
  nf.validate();
  opts.validate();
  struct PerSeed {
    std::vector<std::uint32_t> bins;  // bin index of each binned point
    int status = 0;                   // 0 survived, 1 absorbed, 2 escaped
  };
  std::vector<PerSeed> per(opts.n_seeds);
  const double width = kTwoPi / opts.bins;
  parallel_for(opts.n_seeds, opts.threads, [&](std::size_t i) {
    auto rng = stream(opts.seed, i);
    double u, v;
    do {
      u = 2.0 * unit(rng) - 1.0;
      v = 2.0 * unit(rng) - 1.0;
    } while (u * u + v * v > 1.0);
    CylinderPoint p{wrap_angle(opts.x_center + opts.seed_radius * u),
                    opts.y_center + opts.seed_radius * v};
    PerSeed& out = per[i];
    for (int n = 0; n < opts.n_iter; ++n) {
      ReturnOutcome r;
      try {
        r = return_map(nf, p);
      } catch (const ConfigError&) {
        out.status = 2;
        return;
      }
      if (r.absorbed) {
        out.status = 1;
        return;
      }
      p = r.next;
      if (n >= opts.discard)
        out.bins.push_back(static_cast<std::uint32_t>(
            std::min(opts.bins - 1, static_cast<int>(p.x / width))));
    }
  });
  AnnulusResult res;
  res.histogram.assign(opts.bins, 0);
  for (const auto& s : per) {
    if (s.status == 0) ++res.survivors;
    if (s.status == 1) ++res.absorbed;
    if (s.status == 2) ++res.escaped;
    for (auto b : s.bins) ++res.histogram[b];
    res.points += s.bins.size();
  }
  if (res.points == 0) throw NumericalError("annulus coverage: every orbit was absorbed or escaped before binning");
  const auto filled = std::count_if(res.histogram.begin(), res.histogram.end(),
                                    [](std::uint64_t c) { return c > 0; });
  res.coverage = static_cast<double>(filled) / opts.bins;
  return res;
}

}  // namespace hetlab
