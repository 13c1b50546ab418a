// Command-line driver: one scenario config in, CSV/JSON artifacts out.
//
// Exit codes: 0 success, 1 numerical failure (diagnostic JSON on stderr and in
// <out>/error.json), 2 bad command line or config (nothing written).

#include <Eigen/Core>
#include <boost/version.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <epiwave/epiwave.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace epiwave;

namespace {

constexpr const char* kVersion = "1.0.0";

const std::map<std::string, std::set<std::string>> kKeys = {
    {"", {"grid", "kernel", "nonlinearity", "forcing", "run", "sir", "output"}},
    {"grid", {"dim", "cell_points", "window_radius"}},
    {"kernel", {"variant", "shape", "support", "beta", "mu", "b", "s", "profile", "horizon"}},
    {"forcing", {"type", "amplitude", "radius", "rate"}},
    {"run",
     {"dt", "T", "snapshot_every", "tol", "tail_radius", "outer_radius", "classify_tol", "slab_L",
      "direction", "speed_factor", "subwave_factor", "rho_values", "c_values", "max_iter"}},
    {"sir", {"S0", "I0_amplitude", "I0_radius", "diffusion", "dt", "T", "refine"}},
};

void check_keys(const json& j, const std::string& section) {
  require(j.is_object(), (section.empty() ? std::string("config") : section) + " must be an object");
  const auto& allowed = kKeys.at(section);
  for (auto it = j.begin(); it != j.end(); ++it)
    require(allowed.count(it.key()) > 0,
            "unknown key '" + it.key() + "'" + (section.empty() ? "" : " in " + section));
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

PointFn point_fn(const json& j, const char* key, const char* fallback) {
  std::string text = fallback;
  if (j.contains(key)) {
    const auto& v = j.at(key);
    if (v.is_number())
      text = v.dump();
    else if (v.is_string())
      text = v.get<std::string>();
    else
      throw ValidationError(std::string("field '") + key + "' must be a number or expression");
  }
  auto e = std::make_shared<Expression>(text);
  return [e](const Point& p) { return (*e)(Expression::Vars{p[0], p[1], 0.0, 0.0}); };
}

struct Run {
  double dt = 0.05, T = 80.0, snapshot_every = 1.0, tol = 1e-8;
  double tail_radius = 10.0, outer_radius = 0.0, classify_tol = 1e-2;
  double slab_L = 40.0, direction = 1.0, speed_factor = 2.0, subwave_factor = 0.98;
  int max_iter = 200000;
  std::vector<double> rho_values, c_values;
};

struct SirSpec {
  PointFn S0;
  double I0_amplitude = 0.2, I0_radius = 1.0, D = 0.0, dt = 0.05, T = 10.0;
  bool refine = true;
};

// Everything a command needs, built and validated before any file is written.
struct Scenario {
  PeriodicGrid grid{1, 8, 1};
  std::optional<TimeKernel> G;
  KernelFunction K;
  PointFn mu;
  Nonlinearity g = Nonlinearity::exponential();
  Forcing f = Forcing::zero();
  Run run;
  SirSpec sir;
  std::string out = "out";
};

Shape parse_shape(const std::string& s) {
  if (s == "box") return Shape::Box;
  if (s == "tent") return Shape::Tent;
  if (s == "gauss") return Shape::Gauss;
  throw ValidationError("unknown kernel shape '" + s + "' (box, tent, gauss)");
}

Scenario load(const json& cfg) {
  check_keys(cfg, "");
  Scenario sc;
  const json grid = cfg.value("grid", json::object());
  check_keys(grid, "grid");
  sc.grid = PeriodicGrid(get(grid, "dim", 1), get(grid, "cell_points", 64), get(grid, "window_radius", 20));
  const int dim = sc.grid.dim();

  require(cfg.contains("kernel"), "config needs a 'kernel' section");
  const json& k = cfg.at("kernel");
  check_keys(k, "kernel");
  const std::string variant = get<std::string>(k, "variant", "separable");
  sc.mu = point_fn(k, "mu", "1");
  if (variant == "separable") {
    sc.K = convolution_kernel(dim, parse_shape(get<std::string>(k, "shape", "box")), get(k, "support", 1.0),
                              get(k, "beta", 2.0), point_fn(k, "b", "1"), point_fn(k, "s", "1"));
    sc.G = TimeKernel::separable(dim, sc.mu, sc.K);
  } else if (variant == "isotropic") {
    require(k.contains("profile"), "isotropic kernel needs a 'profile' expression in t and r");
    auto e = std::make_shared<Expression>(get<std::string>(k, "profile", "0"));
    IsotropicKernel iso{[e](double tau, double r) { return (*e)(Expression::Vars{0.0, 0.0, tau, r}); },
                        get(k, "support", 1.0), get(k, "horizon", 40.0)};
    require(iso.support > 0 && iso.horizon > 0, "isotropic support and horizon must be positive");
    sc.G = TimeKernel(iso, dim);
  } else {
    throw ValidationError("unknown kernel variant '" + variant + "' (separable, isotropic)");
  }

  const std::string gname = get<std::string>(cfg, "nonlinearity", "exponential");
  if (gname == "exponential")
    sc.g = Nonlinearity::exponential();
  else if (gname == "rational")
    sc.g = Nonlinearity::rational();
  else if (gname == "linear")
    sc.g = Nonlinearity::linear();
  else
    throw ValidationError("unknown nonlinearity '" + gname + "' (exponential, rational, linear)");

  const json fj = cfg.value("forcing", json::object());
  check_keys(fj, "forcing");
  const std::string ftype = get<std::string>(fj, "type", "bump");
  if (ftype == "bump") {
    const double rate = fj.contains("rate") && fj.at("rate").is_null() ? kInf : get(fj, "rate", 1.0);
    sc.f = Forcing::bump(dim, get(fj, "amplitude", 0.5), get(fj, "radius", 1.0), rate);
  } else if (ftype != "none") {
    throw ValidationError("unknown forcing type '" + ftype + "' (bump, none)");
  }

  const json rj = cfg.value("run", json::object());
  check_keys(rj, "run");
  Run& r = sc.run;
  r.dt = get(rj, "dt", r.dt);
  r.T = get(rj, "T", r.T);
  r.snapshot_every = get(rj, "snapshot_every", r.snapshot_every);
  r.tol = get(rj, "tol", r.tol);
  r.tail_radius = get(rj, "tail_radius", r.tail_radius);
  r.outer_radius = get(rj, "outer_radius", r.outer_radius);
  r.classify_tol = get(rj, "classify_tol", r.classify_tol);
  r.slab_L = get(rj, "slab_L", r.slab_L);
  r.direction = get(rj, "direction", r.direction);
  r.speed_factor = get(rj, "speed_factor", r.speed_factor);
  r.subwave_factor = get(rj, "subwave_factor", r.subwave_factor);
  r.max_iter = get(rj, "max_iter", r.max_iter);
  r.rho_values = get(rj, "rho_values", std::vector<double>{0.25, 0.5, 1.0, 1.5, 2.0, 3.0});
  r.c_values = get(rj, "c_values", std::vector<double>{0.0, 0.5, 1.0, 2.0});
  require(r.dt > 0 && r.T > 0 && r.snapshot_every > 0, "dt, T and snapshot_every must be positive");
  require(r.tol > 0 && r.classify_tol > 0, "tolerances must be positive");
  require(r.tail_radius > 0, "tail_radius must be positive");
  require(r.slab_L > 0, "slab_L must be positive");
  require(r.speed_factor >= 1, "speed_factor must be at least 1");
  require(r.subwave_factor > 0 && r.subwave_factor < 1, "subwave_factor must lie in (0, 1)");
  require(r.max_iter >= 1, "max_iter must be positive");
  for (double v : r.rho_values) require(v >= 0, "rho_values must be nonnegative");
  for (double v : r.c_values) require(v >= 0, "c_values must be nonnegative");

  const json sj = cfg.value("sir", json::object());
  check_keys(sj, "sir");
  sc.sir.S0 = point_fn(sj, "S0", "1");
  sc.sir.I0_amplitude = get(sj, "I0_amplitude", sc.sir.I0_amplitude);
  sc.sir.I0_radius = get(sj, "I0_radius", sc.sir.I0_radius);
  sc.sir.D = get(sj, "diffusion", sc.sir.D);
  sc.sir.dt = get(sj, "dt", sc.sir.dt);
  sc.sir.T = get(sj, "T", sc.sir.T);
  sc.sir.refine = get(sj, "refine", sc.sir.refine);
  require(sc.sir.I0_amplitude >= 0 && sc.sir.I0_radius > 0, "invalid I0 parameters");
  require(sc.sir.D >= 0 && sc.sir.dt > 0 && sc.sir.T > 0, "invalid SIR time or diffusion parameters");

  sc.out = get<std::string>(cfg, "output", sc.out);
  return sc;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON numbers; non-finite values become strings.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

class Csv {
 public:
  Csv(const fs::path& p, const std::string& header) : os_(p) {
    if (!os_) throw std::runtime_error("cannot write " + p.string());
    os_ << header << '\n';
  }
  template <class... A>
  void row(A... v) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(v), first = false), ...);
    os_ << '\n';
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const char* v) { return v; }
  std::ofstream os_;
};

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  os << j.dump(2) << '\n';
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

SpatialKernel spatial(const Scenario& sc) { return periodize_kernel(time_integrate_kernel(*sc.G, 0.0), sc.grid); }

std::optional<Vec> steady_for_waves(const Scenario& sc, const SpatialKernel& V) {
  return solve_steady_state(V, sc.g, 1e-13, sc.run.max_iter, Seed::UpperBound).U;
}

json cmd_threshold(const Scenario& sc, const fs::path& out) {
  const auto V = spatial(sc);
  const auto ep = principal_eigenpair(V, sc.g);
  const auto st = solve_steady_state(V, sc.g, sc.run.tol, sc.run.max_iter);
  const auto field = solve_initial_value(*sc.G, sc.f, sc.g, sc.grid, sc.run.dt, sc.run.T, sc.run.snapshot_every);
  const auto lt = long_time_limit(field);
  const auto cl = classify_outcome(lt.u_inf, sc.grid, st.U, sc.run.tail_radius, sc.run.classify_tol, V.reach(),
                                   sc.run.outer_radius);
  Csv csv(out / "u_inf.csv", "x1,x2,u_inf");
  for (std::size_t a = 0; a < sc.grid.window_size(); ++a) {
    const Point p = sc.grid.window_point(a);
    csv.row(p[0], p[1], lt.u_inf(Eigen::Index(a)));
  }
  json j;
  j["lambda1"] = ep.lambda;
  j["eigen_residual"] = ep.residual;
  j["outcome"] = to_string(cl.outcome);
  j["tail_inf"] = jnum(cl.tail_inf);
  j["tail_sup"] = cl.tail_sup;
  j["tail_dist_U"] = cl.tail_dist_U;
  j["tail_nodes"] = cl.tail_nodes;
  j["converged"] = lt.converged;
  j["last_change"] = lt.last_change;
  j["steady_present"] = st.present();
  return j;
}

json cmd_steady(const Scenario& sc, const fs::path& out) {
  const auto V = spatial(sc);
  const auto st = solve_steady_state(V, sc.g, sc.run.tol, sc.run.max_iter);
  json j;
  j["lambda1"] = st.lambda1;
  j["present"] = st.present();
  j["iterations"] = st.iterations;
  j["residual"] = st.residual;
  j["seed_scale"] = st.seed_scale;
  Csv csv(out / "steady.csv", "x1,x2,U");
  for (std::size_t i = 0; i < sc.grid.cell_size(); ++i) {
    const Point p = sc.grid.cell_point(i);
    csv.row(p[0], p[1], st.U ? (*st.U)(Eigen::Index(i)) : 0.0);
  }
  if (st.U) {
    const int samples = std::min<int>(3, int(st.U->size()));
    std::vector<Vec> seeds{Vec::Constant(st.U->size(), 1e-3), Vec::Constant(st.U->size(), 2 * st.U->maxCoeff()),
                           Vec::LinSpaced(st.U->size(), 0.1, st.U->maxCoeff())};
    seeds.resize(std::size_t(samples));
    j["uniqueness_distance"] = uniqueness_probe(V, sc.g, seeds, sc.run.tol, sc.run.max_iter);
    j["U_min"] = st.U->minCoeff();
    j["U_max"] = st.U->maxCoeff();
  }
  return j;
}

json cmd_simulate(const Scenario& sc, const fs::path& out) {
  const auto field = solve_initial_value(*sc.G, sc.f, sc.g, sc.grid, sc.run.dt, sc.run.T, sc.run.snapshot_every);
  const auto lt = long_time_limit(field);
  Csv csv(out / "solution.csv", "t,x1,x2,u");
  for (std::size_t k = 0; k < field.times.size(); ++k)
    for (std::size_t a = 0; a < sc.grid.window_size(); ++a) {
      const Point p = sc.grid.window_point(a);
      csv.row(field.times[k], p[0], p[1], field.snapshots[k](Eigen::Index(a)));
    }
  json j;
  j["snapshots"] = field.times.size();
  j["min_increment"] = field.min_increment;
  j["time_monotone"] = field.min_increment >= 0;
  j["converged"] = lt.converged;
  j["last_change"] = lt.last_change;
  j["u_max"] = field.final().maxCoeff();
  return j;
}

json cmd_speed(const Scenario& sc, const fs::path& out) {
  DispersionModel model(*sc.G, sc.g, sc.grid, sc.run.direction);
  const auto ms = minimal_speed(model);
  Csv csv(out / "speed_curve.csv", "rho,c");
  for (const auto& [rho, c] : ms.curve) csv.row(rho, c);
  json j;
  j["c_star"] = ms.c_star;
  j["rho_star"] = ms.rho_star;
  j["at_rest"] = ms.at_rest;
  j["lambda1"] = model.lambda(0.0, 0.0);
  return j;
}

json cmd_dispersion(const Scenario& sc, const fs::path& out) {
  DispersionModel model(*sc.G, sc.g, sc.grid, sc.run.direction);
  Csv csv(out / "dispersion.csv", "rho,c,lambda,residual");
  bool monotone = true;
  for (double rho : sc.run.rho_values) {
    double prev = kInf;
    for (double c : sc.run.c_values) {
      const auto p = model.eigen(rho, c);
      csv.row(rho, c, p.lambda, p.residual);
      if (!(p.lambda < prev) && rho > 0) monotone = false;
      prev = p.lambda;
    }
  }
  json j;
  j["points"] = sc.run.rho_values.size() * sc.run.c_values.size();
  j["decreasing_in_c"] = monotone;
  return j;
}

json cmd_wave(const Scenario& sc, const fs::path& out) {
  const auto V = spatial(sc);
  DispersionModel model(*sc.G, sc.g, sc.grid, sc.run.direction);
  const auto ms = minimal_speed(model);
  if (ms.at_rest) throw NumericalError("lambda1 <= 1: no traveling waves", "{\"c_star\":0}");
  const auto U = steady_for_waves(sc, V);
  const double c = sc.run.speed_factor * ms.c_star;
  const auto ws = construct_wave(model, c, *U, sc.run.slab_L, 1e-6, sc.run.max_iter);
  const auto ck = verify_sub_super(model, ws.bounds);
  Csv csv(out / "wave.csv", "zeta,cell,x1,u,usub,usuper");
  for (int r = ws.inner_lo - ws.lo; r <= ws.inner_hi - ws.lo; ++r)
    for (int i = 0; i < ws.u.cols(); ++i)
      csv.row(ws.zeta(r), i, sc.grid.cell_point(std::size_t(i))[0], ws.u(r, i), ws.bounds.usub(r, i),
              ws.bounds.usuper(r, i));
  json j;
  j["c_star"] = ms.c_star;
  j["c"] = c;
  j["rho"] = ws.bounds.rho;
  j["rho_prime"] = ws.bounds.rho_prime;
  j["M"] = ws.bounds.M;
  j["iterations"] = ws.iterations;
  j["residual"] = ws.residual;
  j["monotone"] = ws.monotone;
  j["sandwiched"] = ws.sandwiched;
  j["super_fraction"] = ck.super_fraction;
  j["sub_fraction"] = ck.sub_fraction;
  json tails = json::array();
  for (const auto& t : ws.tails)
    tails.push_back({{"delta", t.delta}, {"ahead_sup", t.ahead_sup}, {"behind_dist", t.behind_dist}});
  j["tails"] = tails;
  return j;
}

SirModel sir_model(const Scenario& sc, const PeriodicGrid& grid) {
  const double amp = sc.sir.I0_amplitude, rad = sc.sir.I0_radius;
  const int dim = grid.dim();
  SirModel m{grid, sc.K, sc.mu, sc.sir.S0, [amp, rad, dim](const Point& x) {
               const double r = dim == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
               return amp * std::max(0.0, 1.0 - r / rad);
             }};
  if (sc.sir.D > 0) {
    m.diffusion = Diffusion::Laplacian;
    m.D = sc.sir.D;
  }
  return m;
}

json cmd_sir_verify(const Scenario& sc, const fs::path& out) {
  require(sc.G->is_separable(), "sir-verify needs a separable kernel (K and mu)");
  const auto m = sir_model(sc, sc.grid);
  const auto tr = simulate_sir(m, sc.sir.dt, sc.sir.T, sc.run.snapshot_every);
  Csv csv(out / "sir_trajectory.csv", "t,x1,x2,S,I,u");
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Vec u = tr.u(k);
    for (std::size_t a = 0; a < sc.grid.window_size(); ++a) {
      const Point p = sc.grid.window_point(a);
      const auto e = Eigen::Index(a);
      csv.row(tr.times[k], p[0], p[1], tr.S[k](e), tr.I[k](e), u(e));
    }
  }
  json j;
  j["S_nonincreasing"] = tr.S_nonincreasing;
  j["min_S"] = tr.min_S;
  if (m.diffusion == Diffusion::Laplacian) {
    j["equivalence"] = "skipped: diffusion present";
    return j;
  }
  const auto eq = equivalence_check(m, sc.sir.dt, sc.sir.T);
  json e{{"sup_difference", eq.sup_difference}, {"dt", eq.dt}, {"spacing", eq.spacing}};
  write_json(out / "equivalence.json", e);
  j["equivalence"] = e;
  if (sc.sir.refine) {
    const PeriodicGrid fine(sc.grid.dim(), 2 * sc.grid.cell_points(), sc.grid.window_radius());
    const auto eq2 = equivalence_check(sir_model(sc, fine), 0.5 * sc.sir.dt, sc.sir.T);
    j["refined"] = {{"sup_difference", eq2.sup_difference}, {"dt", eq2.dt}, {"spacing", eq2.spacing}};
    j["ratio"] = jnum(eq.sup_difference / eq2.sup_difference);
  }
  return j;
}

json cmd_subwave(const Scenario& sc, const fs::path& out) {
  DispersionModel model(*sc.G, sc.g, sc.grid, sc.run.direction);
  const auto ms = minimal_speed(model);
  if (ms.at_rest) throw NumericalError("lambda1 <= 1: minimal speed is zero", "{\"c_star\":0}");
  const double c = sc.run.subwave_factor * ms.c_star;
  const auto root = complex_decay_root(model, c, ms.rho_star, ms.c_star);
  const auto os = oscillating_subsolution(model, c, root);
  Csv csv(out / "subwave.csv", "xi,cell,x1,v_plus,slack");
  const int off = os.band_lo - os.lo;
  for (int r = 0; r < os.slack.rows(); ++r)
    for (int i = 0; i < os.slack.cols(); ++i)
      csv.row((os.band_lo + r) * os.h, i, sc.grid.cell_point(std::size_t(i))[0], os.values(off + r, i),
              os.slack(r, i));
  json j;
  j["c_star"] = ms.c_star;
  j["rho_star"] = ms.rho_star;
  j["c"] = c;
  j["rho"] = {root.rho.real(), root.rho.imag()};
  j["root_residual"] = root.residual;
  j["band"] = os.band;
  j["min_slack_positive"] = os.min_slack_positive;
  j["min_slack_band"] = os.min_slack_band;
  j["edge_minus"] = os.edge_minus;
  j["edge_plus"] = os.edge_plus;
  return j;
}

const std::map<std::string, json (*)(const Scenario&, const fs::path&)> kCommands = {
    {"threshold", cmd_threshold}, {"steady", cmd_steady},         {"simulate", cmd_simulate},
    {"speed", cmd_speed},         {"wave", cmd_wave},             {"dispersion", cmd_dispersion},
    {"sir-verify", cmd_sir_verify}, {"subwave-diag", cmd_subwave}};

int fail(int code, const std::string& kind, const std::string& msg, const json& detail = json::object(),
         const fs::path* dir = nullptr) {
  json d{{"error", kind}, {"message", msg}, {"detail", detail}};
  std::cerr << d.dump(2) << '\n';
  if (dir) write_json(*dir / "error.json", d);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epiwave: threshold, steady states and waves for nonlocal epidemic models"};
  std::string command, config_path, out_dir;
  int n_threads = 0;
  std::string names;
  for (const auto& [k, _] : kCommands) names += (names.empty() ? "" : ", ") + k;
  app.add_option("command", command, "one of: " + names)->required();
  app.add_option("--config", config_path, "scenario JSON")->required();
  app.add_option("--out", out_dir, "output directory (overrides 'output' in the config)");
  app.add_option("--threads", n_threads, "worker threads (default EPIWAVE_THREADS or 1)");
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  const auto cmd = kCommands.find(command);
  if (cmd == kCommands.end()) return fail(2, "usage", "unknown command '" + command + "'; expected " + names);
  if (n_threads <= 0)
    if (const char* env = std::getenv("EPIWAVE_THREADS")) n_threads = std::atoi(env);
  set_threads(std::max(1, n_threads));

  std::string raw;
  json cfg;
  Scenario sc;
  try {
    std::ifstream in(config_path);
    if (!in) return fail(2, "config", "cannot read " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    raw = ss.str();
    cfg = json::parse(raw);
    sc = load(cfg);
  } catch (const json::exception& e) {
    return fail(2, "config", std::string("malformed JSON: ") + e.what());
  } catch (const ValidationError& e) {
    return fail(2, "config", e.what());
  }
  const fs::path out = out_dir.empty() ? fs::path(sc.out) : fs::path(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  json result;
  try {
    fs::create_directories(out);
    result = cmd->second(sc, out);
  } catch (const ValidationError& e) {
    return fail(2, "validation", e.what(), json::object(), &out);
  } catch (const NumericalError& e) {
    json detail = json::parse(e.detail(), nullptr, false);
    if (detail.is_discarded()) detail = e.detail();
    return fail(1, "numerical", e.what(), detail, &out);
  } catch (const std::exception& e) {
    return fail(1, "runtime", e.what(), json::object(), &out);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.dump())));
  json manifest;
  manifest["command"] = command;
  manifest["config_path"] = config_path;
  manifest["config_hash_fnv1a64"] = hash;
  manifest["config"] = cfg;
  manifest["versions"] = {{"epiwave", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                                        std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                                        std::to_string(BOOST_VERSION % 100)}};
  manifest["threads"] = threads();
  manifest["timings"] = {{"total_seconds", seconds}};
  manifest["result"] = result;
  write_json(out / "manifest.json", manifest);
  std::cout << result.dump(2) << '\n';
  return 0;
}
