#include "cli.hpp"

#include "config_json.hpp"
#include "io.hpp"

#include "hetlab/circlemap.hpp"
#include "hetlab/errors.hpp"
#include "hetlab/integrate.hpp"
#include "hetlab/maps.hpp"
#include "hetlab/model.hpp"
#include "hetlab/parallel.hpp"
#include "hetlab/switching.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>

#ifndef HETLAB_VERSION
#define HETLAB_VERSION "0.0.0"
#endif

namespace hetlab::cli {

const char* version() { return HETLAB_VERSION; }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Every bound option, so the effective configuration can be written back.
struct Binding {
  std::vector<std::string> path;
  std::string key;
  std::function<json()> value;
};

struct Globals {
  std::string config;
  std::string output_dir = ".";
  int threads = 0;
  std::uint64_t seed = 1;
};

class Builder {
 public:
  explicit Builder(std::vector<Binding>& reg) : reg_(reg) {}

  template <typename T>
  CLI::Option* add(CLI::App* app, const std::vector<std::string>& path, const std::string& key,
                   T& var, const std::string& desc) {
    auto* opt = app->add_option("--" + key, var, desc)->capture_default_str();
    reg_.push_back({path, key, [&var] { return json(var); }});
    return opt;
  }

  CLI::Option* add_state(CLI::App* app, const std::vector<std::string>& path,
                         const std::string& key, std::vector<double>& var,
                         const std::string& desc) {
    return add(app, path, key, var, desc)->expected(4)->delimiter(',');
  }

 private:
  std::vector<Binding>& reg_;
};

State to_state(const std::vector<double>& v, const char* what) {
  if (v.size() != 4) throw ConfigError(std::string(what) + " needs exactly 4 components");
  State x(v[0], v[1], v[2], v[3]);
  if (!x.allFinite() || x.norm() == 0.0) throw ConfigError(std::string(what) + " must be finite and nonzero");
  return x;
}

json state_json(const State& x) { return json::array({x[0], x[1], x[2], x[3]}); }

struct ModelOpts {
  ModelParams p;
  void add(Builder& b, CLI::App* app, const std::vector<std::string>& path) {
    b.add(app, path, "alpha", p.alpha, "coefficient alpha (> 0)");
    b.add(app, path, "beta", p.beta, "coefficient beta (< 0, |beta| < alpha)");
    b.add(app, path, "omega", p.omega, "angular frequency omega (> 0)");
    b.add(app, path, "lambda", p.lambda, "symmetry-breaking parameter lambda in [0, 1]");
  }
};

struct IntegratorOpts {
  IntegratorConfig cfg;
  void add(Builder& b, CLI::App* app, const std::vector<std::string>& path) {
    b.add(app, path, "rtol", cfg.rel_tol, "relative tolerance");
    b.add(app, path, "atol", cfg.abs_tol, "absolute tolerance");
    b.add(app, path, "max-step", cfg.max_step, "largest step");
  }
};

struct CodingOpts {
  CodingConfig cfg;
  void add(Builder& b, CLI::App* app, const std::vector<std::string>& path) {
    b.add(app, path, "ball-radius", cfg.ball_radius, "geodesic radius of the balls around P1, P2");
    b.add(app, path, "sectors", cfg.sectors, "angular sectors on exit from P2");
    b.add(app, path, "max-time", cfg.max_time, "integration time limit");
    b.add(app, path, "max-symbols", cfg.max_symbols, "symbol limit");
    b.add(app, path, "absorbing-radius", cfg.absorbing_radius,
          "distance from the network beyond which coding stops");
  }
};

/// One command: its path, the CLI11 app, and the action.
struct Command {
  std::vector<std::string> path;
  CLI::App* app = nullptr;
  std::function<void(const Globals&, const fs::path&, std::ostream&)> action;
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& p : v) s += (s.empty() ? "" : " ") + p;
  return s;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double member_phase_or(double a, double K, int threads) {
  if (a >= 0.0) return a;
  const auto deepest = deepest_member_sweep(K, 30, 10000, 10, threads);
  const auto phases = member_phases(deepest.sweep);
  if (phases.empty()) throw NumericalError("no member phase found for this K_omega");
  return phases.front();
}

// ------------------------------------------------------------------ commands

void model_info(const ModelParams& p, const fs::path& dir, std::ostream& out) {
  p.validate();
  const SpectralData s = spectral_from_model(p);
  const DerivedConstants d = derived_constants(s);
  json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["omega"] = p.omega;
  j["lambda"] = p.lambda;
  j["spectral"] = {{"C1", s.C1}, {"E1", s.E1}, {"omega1", s.omega1},
                   {"C2", s.C2}, {"E2", s.E2}, {"omega2", s.omega2}};
  j["derived"] = {{"delta1", d.delta1}, {"delta2", d.delta2}, {"delta", d.delta}, {"K_omega", d.K_omega}};
  const auto eq = saddle_foci(p);
  const char* names[] = {"P1", "P2"};
  for (int i = 0; i < 2; ++i) {
    json e;
    e["name"] = names[i];
    e["location"] = state_json(eq[i].location);
    for (int k = 0; k < 4; ++k) e["eigenvalues"].push_back({eq[i].eigenvalues[k].real(), eq[i].eigenvalues[k].imag()});
    e["stable_dim"] = eq[i].stable_dim;
    e["unstable_dim"] = eq[i].unstable_dim;
    j["equilibria"].push_back(e);
  }
  io::write_json(dir / "model_info.json", j);
  out << "delta1 = " << io::format_double(d.delta1) << "\n"
      << "delta2 = " << io::format_double(d.delta2) << "\n"
      << "delta = " << io::format_double(d.delta) << "\n"
      << "K_omega = " << io::format_double(d.K_omega) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();

  std::vector<Binding> reg;
  Builder b(reg);
  Globals g;
  std::vector<Command> commands;

  CLI::App app{"Numerics for a heteroclinic network on S^3: flow, return maps, circle maps and switching",
               "hetlab"};
  app.set_version_flag("--version", version());
  app.config_formatter(std::make_shared<ConfigJSON>());
  app.set_config("--config", "", "JSON configuration file (or a run manifest)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);
  b.add(&app, {}, "output-dir", g.output_dir, "directory for output files");
  b.add(&app, {}, "threads", g.threads, "worker threads (0: $HETLAB_THREADS or all cores)");
  b.add(&app, {}, "seed", g.seed, "random seed");

  auto sub = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
    auto* s = parent->add_subcommand(name, desc);
    s->configurable();
    s->fallthrough();
    return s;
  };

  // model-info
  {
    const std::vector<std::string> path{"model-info"};
    auto* s = sub(&app, path[0], "spectra, saddle values and twisting number");
    auto m = std::make_shared<ModelOpts>();
    m->add(b, s, path);
    commands.push_back({path, s, [m](const Globals&, const fs::path& dir, std::ostream& o) {
                          model_info(m->p, dir, o);
                        }});
  }

  // simulate
  {
    const std::vector<std::string> path{"simulate"};
    auto* s = sub(&app, path[0], "integrate one trajectory");
    auto m = std::make_shared<ModelOpts>();
    auto in = std::make_shared<IntegratorOpts>();
    auto ic = std::make_shared<std::vector<double>>(std::vector<double>{0.01, 0.01, 0.01, 1.0});
    auto T = std::make_shared<double>(1000.0);
    auto dt = std::make_shared<double>(0.5);
    m->add(b, s, path);
    in->add(b, s, path);
    b.add_state(s, path, "ic", *ic, "initial condition x1,x2,x3,x4 (projected to S^3)");
    b.add(s, path, "t", *T, "final time");
    b.add(s, path, "dt", *dt, "output sampling interval (0: every accepted step)");
    commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                          m->p.validate();
                          if (!(*T > 0.0)) throw ConfigError("--t must be > 0");
                          if (*dt < 0.0) throw ConfigError("--dt must be >= 0");
                          const State x0 = normalized(to_state(*ic, "--ic"));
                          const Trajectory tr = integrate(m->p, x0, 0.0, *T, in->cfg, *dt);
                          io::CsvWriter csv(dir / "trajectory.csv", {"t", "x1", "x2", "x3", "x4"});
                          for (const auto& smp : tr.samples) {
                            csv << smp.t << smp.x[0] << smp.x[1] << smp.x[2] << smp.x[3];
                            csv.end_row();
                          }
                          csv.close();
                          o << "samples = " << tr.samples.size() << "\n"
                            << "accepted_steps = " << tr.stats.accepted << "\n"
                            << "max_sphere_drift = " << io::format_double(tr.stats.max_sphere_drift) << "\n";
                        }});
  }

  // lyapunov
  {
    const std::vector<std::string> path{"lyapunov"};
    auto* s = sub(&app, path[0], "Lyapunov exponents of one trajectory");
    auto m = std::make_shared<ModelOpts>();
    auto in = std::make_shared<IntegratorOpts>();
    auto ic = std::make_shared<std::vector<double>>(std::vector<double>{0.01, 0.01, 0.01, 1.0});
    auto T = std::make_shared<double>(10000.0);
    auto k = std::make_shared<int>(4);
    auto opts = std::make_shared<LyapunovOptions>();
    m->add(b, s, path);
    in->add(b, s, path);
    b.add_state(s, path, "ic", *ic, "initial condition x1,x2,x3,x4 (projected to S^3)");
    b.add(s, path, "t", *T, "total time");
    b.add(s, path, "k", *k, "number of exponents (1..4)");
    b.add(s, path, "step", in->cfg.fixed_step, "renormalization interval");
    b.add(s, path, "transient", opts->transient, "discarded initial time");
    b.add(s, path, "trace-stride", opts->trace_stride, "renormalizations between trace rows");
    commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                          m->p.validate();
                          const State x0 = normalized(to_state(*ic, "--ic"));
                          const auto r = flow_lyapunov(m->p, x0, *T, *k, in->cfg, *opts);
                          json j;
                          j["exponents"] = r.exponents;
                          j["T"] = r.T;
                          j["step"] = r.step;
                          j["trace"] = r.trace;
                          io::write_json(dir / "lyapunov.json", j);
                          for (std::size_t i = 0; i < r.exponents.size(); ++i)
                            o << "l" << i + 1 << " = " << io::format_double(r.exponents[i]) << "\n";
                        }});
  }

  // return-map
  {
    const std::vector<std::string> path{"return-map"};
    auto* s = sub(&app, path[0], "iterate the first-return map on Out(P2)");
    auto m = std::make_shared<ModelOpts>();
    auto xi = std::make_shared<double>(0.0);
    auto x0 = std::make_shared<double>(0.5);
    auto y0 = std::make_shared<double>(0.5);
    auto n = std::make_shared<int>(1000);
    m->add(b, s, path);
    b.add(s, path, "xi", *xi, "global-map offset xi");
    b.add(s, path, "x0", *x0, "initial angle");
    b.add(s, path, "y0", *y0, "initial height in [-1, 1]");
    b.add(s, path, "n", *n, "iterations");
    commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                          const auto nf = NormalFormParams::from_model(m->p, *xi);
                          nf.validate();
                          if (*n < 0) throw ConfigError("--n must be >= 0");
                          if (!(std::abs(*y0) <= 1.0)) throw ConfigError("--y0 must lie in [-1, 1]");
                          io::CsvWriter csv(dir / "return_map.csv", {"n", "x", "y", "absorbed"});
                          CylinderPoint p{wrap_angle(*x0), *y0};
                          csv << 0 << p.x << p.y << 0;
                          csv.end_row();
                          int done = 0;
                          bool absorbed = false;
                          for (int i = 1; i <= *n; ++i) {
                            const auto r = return_map(nf, p);
                            done = i;
                            if (r.absorbed) {
                              const auto q = global_map_21(nf, p);
                              csv << i << q.x << q.y << 1;
                              csv.end_row();
                              absorbed = true;
                              break;
                            }
                            p = r.next;
                            csv << i << p.x << p.y << 0;
                            csv.end_row();
                          }
                          csv.close();
                          o << "iterations = " << done << "\n" << "absorbed = " << (absorbed ? "true" : "false") << "\n";
                        }});
  }

  // circle
  {
    auto* circle = sub(&app, "circle", "the singular-limit circle map h_a");
    circle->require_subcommand(1);

    struct CircleOpts {
      CircleMapParams p;
      void add(Builder& b, CLI::App* app, const std::vector<std::string>& path) {
        b.add(app, path, "komega", p.K_omega, "twisting number K_omega (> 0)");
        b.add(app, path, "a", p.a, "phase a");
        b.add(app, path, "xi", p.xi, "offset xi");
      }
    };

    {
      const std::vector<std::string> path{"circle", "orbit"};
      auto* s = sub(circle, "orbit", "critical-orbit ledger J^n, d_n, D_n");
      auto c = std::make_shared<CircleOpts>();
      c->p.K_omega = 1e4;
      auto crit = std::make_shared<double>(kPi / 2);
      auto N = std::make_shared<int>(30);
      auto K0 = std::make_shared<double>(0.0);
      c->add(b, s, path);
      b.add(s, path, "c", *crit, "critical point");
      b.add(s, path, "N", *N, "orbit length");
      b.add(s, path, "K0", *K0, "derivative constant K0 (0: empirical)");
      commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                            const CircleMap m(c->p);
                            const double k0 = *K0 > 0.0 ? *K0 : derivative_sandwich(m).K0;
                            const auto st = critical_orbit_stats(m, *crit, *N, k0);
                            io::CsvWriter csv(dir / "orbit.csv", {"n", "c_n", "logJ", "d_n", "D_n"});
                            for (std::size_t i = 0; i < st.orbit.size(); ++i) {
                              csv << static_cast<int>(i) << st.orbit[i] << st.logJ[i] << st.d[i] << st.D[i];
                              csv.end_row();
                            }
                            csv.close();
                            const auto e = expansion_check(m, *crit, std::max(1, *N));
                            json j;
                            j["K_omega"] = c->p.K_omega;
                            j["a"] = c->p.a;
                            j["xi"] = c->p.xi;
                            j["c"] = *crit;
                            j["N"] = *N;
                            j["K0"] = k0;
                            j["truncated"] = st.truncated;
                            j["delta_member"] = e.precondition_met;
                            j["expansion_all_hold"] = e.all_hold;
                            j["log_average"] = e.log_average;
                            j["lyapunov_bound"] = e.lyapunov_bound;
                            io::write_json(dir / "orbit.json", j);
                            o << "K0 = " << io::format_double(k0) << "\n"
                              << "delta_member = " << (e.precondition_met ? "true" : "false") << "\n"
                              << "log_average = " << io::format_double(e.log_average) << "\n";
                          }});
    }
    {
      const std::vector<std::string> path{"circle", "sweep"};
      auto* s = sub(circle, "sweep", "estimate the measure of Delta_N on a phase grid");
      auto K = std::make_shared<double>(1e4);
      auto N = std::make_shared<int>(20);
      auto grid = std::make_shared<std::size_t>(10000);
      auto xi = std::make_shared<double>(0.0);
      b.add(s, path, "komega", *K, "twisting number K_omega (> 0)");
      b.add(s, path, "N", *N, "orbit depth N");
      b.add(s, path, "grid", *grid, "number of phases");
      b.add(s, path, "xi", *xi, "offset xi");
      commands.push_back({path, s, [=](const Globals& gl, const fs::path& dir, std::ostream& o) {
                            const auto r = sweep_delta(*K, *N, *grid, resolve_threads(gl.threads), *xi);
                            io::CsvWriter csv(dir / "sweep.csv", {"a", "member"});
                            for (std::size_t j = 0; j < r.grid_size; ++j) {
                              csv << r.phase(j) << static_cast<int>(r.members[j]);
                              csv.end_row();
                            }
                            csv.close();
                            json j;
                            j["K_omega"] = r.K_omega;
                            j["N"] = r.N;
                            j["measure_estimate"] = r.measure_estimate;
                            j["bound"] = r.bound;
                            io::write_json(dir / "sweep.json", j);
                            o << "members = " << r.member_count() << "\n"
                              << "measure_estimate = " << io::format_double(r.measure_estimate) << "\n"
                              << "bound = " << io::format_double(r.bound) << "\n";
                          }});
    }
    {
      const std::vector<std::string> path{"circle", "cover"};
      auto* s = sub(circle, "cover", "nested intervals next to a singularity");
      auto c = std::make_shared<CircleOpts>();
      auto sing = std::make_shared<double>(kPi);
      auto count = std::make_shared<int>(4);
      auto first = std::make_shared<int>(1);
      c->add(b, s, path);
      b.add(s, path, "s", *sing, "zero s of Phi2");
      b.add(s, path, "count", *count, "number of levels");
      b.add(s, path, "first-n", *first, "first level n");
      commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                            const CircleMap m(c->p);
                            const auto cv = cover_intervals(m, *sing, *count, *first);
                            io::CsvWriter csv(dir / "cover.csv", {"n", "c_n", "d_n", "c_residual", "d_residual"});
                            for (std::size_t i = 0; i < cv.n.size(); ++i) {
                              csv << cv.n[i] << cv.c_seq[i] << cv.d_seq[i] << cv.c_residual[i] << cv.d_residual[i];
                              csv.end_row();
                            }
                            csv.close();
                            o << "minimal_n = " << cv.minimal_n << "\n";
                          }});
    }
    {
      const std::vector<std::string> path{"circle", "deletion"};
      auto* s = sub(circle, "deletion", "iterate an interval, deleting the xi-arcs around C and S");
      auto c = std::make_shared<CircleOpts>();
      c->p.K_omega = 1e4;
      auto lo = std::make_shared<double>(1.0);
      auto hi = std::make_shared<double>(1.001);
      auto xi_del = std::make_shared<double>(0.0);
      auto max_iter = std::make_shared<int>(50);
      c->add(b, s, path);
      b.add(s, path, "lo", *lo, "left end of the seed interval");
      b.add(s, path, "hi", *hi, "right end of the seed interval");
      b.add(s, path, "xi-del", *xi_del, "deletion radius (0: K_omega^(-1/6))");
      b.add(s, path, "max-iter", *max_iter, "iteration limit");
      commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                            const CircleMap m(c->p);
                            const auto rec = iterate_interval_with_deletion(m, *lo, *hi, *xi_del, *max_iter);
                            io::CsvWriter csv(dir / "deletion.csv",
                                              {"n", "pieces", "deleted_segments", "deleted_measure",
                                               "cumulative_deleted", "surviving_measure", "deleted_bound"});
                            for (const auto& st : rec.steps) {
                              csv << st.n << st.pieces << st.deleted_segments << st.deleted_measure
                                  << st.cumulative_deleted << st.surviving_measure << st.deleted_bound;
                              csv.end_row();
                            }
                            csv.close();
                            json j;
                            j["covered"] = rec.covered;
                            j["N2"] = rec.N2;
                            j["covered_point"] = rec.covered_point;
                            j["exhausted"] = rec.exhausted;
                            j["max_deletions_before_cover"] = rec.max_deletions_before_cover;
                            io::write_json(dir / "deletion.json", j);
                            o << "covered = " << (rec.covered ? "true" : "false") << "\n"
                              << "N2 = " << rec.N2 << "\n";
                            if (rec.exhausted)
                              throw NumericalError("every piece was deleted; xi is too large for this K_omega");
                          }});
    }
  }

  // census
  {
    const std::vector<std::string> path{"census"};
    auto* s = sub(&app, path[0], "Monte-Carlo census of sign words");
    auto m = std::make_shared<ModelOpts>();
    auto co = std::make_shared<CodingOpts>();
    auto center = std::make_shared<std::vector<double>>(std::vector<double>{0.01, 0.01, 0.01, 1.0});
    auto radius = std::make_shared<double>(0.05);
    auto n = std::make_shared<std::size_t>(10000);
    auto k = std::make_shared<int>(5);
    auto follow = std::make_shared<std::string>();
    m->add(b, s, path);
    co->add(b, s, path);
    b.add_state(s, path, "center", *center, "center of the ball of initial conditions");
    b.add(s, path, "radius", *radius, "geodesic radius of the ball");
    b.add(s, path, "n", *n, "number of samples");
    b.add(s, path, "k", *k, "word length");
    b.add(s, path, "path", *follow, "also report the fraction following this prefix over {+,-}");
    commands.push_back({path, s, [=](const Globals& gl, const fs::path& dir, std::ostream& o) {
                          CensusOptions opts;
                          opts.center = normalized(to_state(*center, "--center"));
                          opts.radius = *radius;
                          opts.n_samples = *n;
                          opts.k = *k;
                          opts.seed = gl.seed;
                          opts.threads = resolve_threads(gl.threads);
                          opts.coding = co->cfg;
                          const auto r = census(m->p, opts);
                          json j;
                          j["params"] = {{"alpha", m->p.alpha},
                                         {"beta", m->p.beta},
                                         {"omega", m->p.omega},
                                         {"lambda", m->p.lambda},
                                         {"center", state_json(opts.center)},
                                         {"radius", opts.radius},
                                         {"seed", opts.seed},
                                         {"ball_radius", co->cfg.ball_radius},
                                         {"sectors", co->cfg.sectors},
                                         {"max_time", co->cfg.max_time}};
                          j["k"] = r.k;
                          j["n"] = r.n;
                          j["words"] = json::array();
                          for (const auto& w : r.words)
                            j["words"].push_back({{"word", w.word},
                                                  {"count", w.count},
                                                  {"fraction", w.fraction},
                                                  {"wilson_low", w.wilson_low},
                                                  {"wilson_high", w.wilson_high}});
                          j["unobserved"] = r.unobserved;
                          io::write_json(dir / "census.json", j);
                          o << "coded = " << r.coded << "\n"
                            << "incomplete = " << r.incomplete << "\n"
                            << "failed = " << r.failed << "\n"
                            << "observed_words = " << r.words.size() << "\n"
                            << "unobserved_words = " << r.unobserved.size() << "\n";
                          if (!follow->empty()) {
                            const auto f = follow_fraction(r, *follow);
                            io::write_json(dir / "follow.json", {{"path", f.path},
                                                                 {"matches", f.matches},
                                                                 {"coded", f.coded},
                                                                 {"fraction", f.fraction},
                                                                 {"wilson_low", f.interval.low},
                                                                 {"wilson_high", f.interval.high}});
                            o << "follow_fraction = " << io::format_double(f.fraction) << "\n";
                          }
                        }});
  }

  // itinerary
  {
    const std::vector<std::string> path{"itinerary"};
    auto* s = sub(&app, path[0], "symbolic itinerary of one trajectory");
    auto m = std::make_shared<ModelOpts>();
    auto co = std::make_shared<CodingOpts>();
    auto ic = std::make_shared<std::vector<double>>(std::vector<double>{0.01, 0.01, 0.01, 1.0});
    m->add(b, s, path);
    co->add(b, s, path);
    b.add_state(s, path, "ic", *ic, "initial condition x1,x2,x3,x4 (projected to S^3)");
    commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                          const State x0 = normalized(to_state(*ic, "--ic"));
                          const auto it = code_trajectory(m->p, x0, co->cfg);
                          io::CsvWriter csv(dir / "itinerary.csv", {"idx", "t", "type", "value"});
                          for (std::size_t i = 0; i < it.symbols.size(); ++i) {
                            const auto& sym = it.symbols[i];
                            csv << static_cast<int>(i) << sym.t
                                << std::string(sym.type == SymbolType::P1Exit ? "P1" : "P2") << sym.value;
                            csv.end_row();
                          }
                          csv.close();
                          o << "symbols = " << it.symbols.size() << "\n"
                            << "signs = " << it.sign_word() << "\n"
                            << "terminated = " << to_string(it.reason) << "\n";
                        }});
  }

  // singular-limit
  {
    const std::vector<std::string> path{"singular-limit"};
    auto* s = sub(&app, path[0], "distance between the rescaled return map and h_a");
    auto m = std::make_shared<ModelOpts>();
    m->p.omega = 10.0;
    auto xi = std::make_shared<double>(0.0);
    auto a = std::make_shared<double>(0.0);
    auto n_min = std::make_shared<int>(3);
    auto n_max = std::make_shared<int>(12);
    auto nx = std::make_shared<int>(64);
    auto ny = std::make_shared<int>(41);
    auto margin = std::make_shared<double>(1e-3);
    m->add(b, s, path);
    b.add(s, path, "xi", *xi, "global-map offset xi");
    b.add(s, path, "a", *a, "phase a");
    b.add(s, path, "n-min", *n_min, "first sequence index");
    b.add(s, path, "n-max", *n_max, "last sequence index");
    b.add(s, path, "nx", *nx, "grid points in x");
    b.add(s, path, "ny", *ny, "grid points in the rescaled height");
    b.add(s, path, "margin", *margin, "distance kept from the singular set");
    commands.push_back({path, s, [=](const Globals&, const fs::path& dir, std::ostream& o) {
                          const auto nf = NormalFormParams::from_model(m->p, *xi);
                          if (*n_min < 1 || *n_max < *n_min) throw ConfigError("need 1 <= --n-min <= --n-max");
                          const auto grid = standard_defect_grid(nf.phi2, *nx, *ny, *margin);
                          const double K = derived_constants(nf.spectral).K_omega;
                          json j;
                          j["K_omega"] = K;
                          j["a"] = *a;
                          j["entries"] = json::array();
                          for (int n = *n_min; n <= *n_max; ++n) {
                            const auto e = singular_limit_defect(nf, *a, n, grid);
                            j["entries"].push_back(
                                {{"n", e.n}, {"lambda", e.lambda}, {"defect1", e.defect1}, {"defect2", e.defect2}});
                            o << "n = " << n << "  defect = " << io::format_double(e.defect) << "\n";
                          }
                          io::write_json(dir / "singular_limit.json", j);
                        }});
  }

  // annulus
  {
    const std::vector<std::string> path{"annulus"};
    auto* s = sub(&app, path[0], "angular coverage of return-map orbits");
    auto m = std::make_shared<ModelOpts>();
    m->p.omega = 10.0;
    auto xi = std::make_shared<double>(0.0);
    auto a = std::make_shared<double>(-1.0);
    auto lambda_max = std::make_shared<double>(0.01);
    auto ao = std::make_shared<AnnulusOptions>();
    m->add(b, s, path);
    b.add(s, path, "xi", *xi, "global-map offset xi");
    b.add(s, path, "a", *a, "phase a (negative: first member of the deepest Delta_N sweep)");
    b.add(s, path, "lambda-max", *lambda_max, "largest admissible lambda_(a,n)");
    b.add(s, path, "x-center", ao->x_center, "seed disk center, angle");
    b.add(s, path, "y-center", ao->y_center, "seed disk center, height");
    b.add(s, path, "seed-radius", ao->seed_radius, "seed disk radius");
    b.add(s, path, "seeds", ao->n_seeds, "number of seeds");
    b.add(s, path, "iter", ao->n_iter, "iterations per seed");
    b.add(s, path, "bins", ao->bins, "angular bins");
    b.add(s, path, "discard", ao->discard, "leading iterates left out of the histogram");
    commands.push_back({path, s, [=](const Globals& gl, const fs::path& dir, std::ostream& o) {
                          auto nf = NormalFormParams::from_model(m->p, *xi);
                          const int threads = resolve_threads(gl.threads);
                          const double K = derived_constants(nf.spectral).K_omega;
                          const double phase = member_phase_or(*a, K, threads);
                          const int n = lambda_sequence_index(K, phase, *lambda_max);
                          nf.lambda = lambda_sequence(K, n, phase);
                          AnnulusOptions opts = *ao;
                          opts.seed = gl.seed;
                          opts.threads = threads;
                          const auto r = annulus_coverage(nf, opts);
                          io::CsvWriter csv(dir / "annulus.csv", {"bin", "count"});
                          for (std::size_t i = 0; i < r.histogram.size(); ++i) {
                            csv << static_cast<int>(i) << static_cast<long long>(r.histogram[i]);
                            csv.end_row();
                          }
                          csv.close();
                          json j;
                          j["K_omega"] = K;
                          j["a"] = phase;
                          j["n"] = n;
                          j["lambda"] = nf.lambda;
                          j["coverage"] = r.coverage;
                          j["survivors"] = r.survivors;
                          j["absorbed"] = r.absorbed;
                          j["escaped"] = r.escaped;
                          j["points"] = r.points;
                          io::write_json(dir / "annulus.json", j);
                          o << "lambda = " << io::format_double(nf.lambda) << "\n"
                            << "coverage = " << io::format_double(r.coverage) << "\n";
                        }});
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : (dynamic_cast<const CLI::FileError*>(&e) ? kIo : kConfig);
  }

  // Deepest invoked command.
  std::vector<std::string> invoked;
  for (const CLI::App* cur = &app; !cur->get_subcommands().empty();) {
    cur = cur->get_subcommands().front();
    invoked.push_back(cur->get_name());
  }
  const Command* cmd = nullptr;
  for (const auto& c : commands)
    if (c.path == invoked) cmd = &c;
  if (cmd == nullptr) {
    err << "no command selected; see --help\n";
    return kConfig;
  }

  try {
    const fs::path dir(g.output_dir);
    io::ensure_directory(dir);
    int code = kOk;
    std::string failure;
    try {
      cmd->action(g, dir, out);
    } catch (const ConfigError& e) {
      code = kConfig;
      failure = e.what();
    } catch (const NumericalError& e) {
      code = kNumerical;
      failure = e.what();
    }

    json config = json::object();
    for (const auto& bnd : reg) {
      if (bnd.path.empty()) {
        config[bnd.key] = bnd.value();
        continue;
      }
      if (bnd.path != invoked) continue;
      json* node = &config;
      for (const auto& p : bnd.path) node = &(*node)[p];
      (*node)[bnd.key] = bnd.value();
    }
    // A command without options of its own still needs its section.
    json* node = &config;
    for (const auto& p : invoked) {
      if (!node->contains(p)) (*node)[p] = json::object();
      node = &(*node)[p];
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest;
    manifest["tool"] = "heteroclinic-lab";
    manifest["version"] = version();
    manifest["command"] = join(invoked);
    manifest["started_at"] = started_utc;
    manifest["wall_clock_seconds"] = wall;
    manifest["threads_used"] = resolve_threads(g.threads);
    manifest["exit_code"] = code;
    manifest["config"] = config;
    io::write_json(dir / "manifest.json", manifest);

    if (code != kOk) {
      err << "error: " << failure << "\n";
      return code;
    }
    return kOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace hetlab::cli
