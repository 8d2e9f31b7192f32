#pragma once

// Command-line front end. Kept in a header so the tests can run it
// in-process; tools/hgrid_main.cpp only forwards argv.
//
// Configuration precedence: built-in defaults < --config JSON file < flags.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hgrid/hgrid.hpp"
#include "hgrid/io.hpp"

namespace hgrid::cli {

enum ExitCode : int { kPass = 0, kToleranceFailure = 1, kUsage = 2, kDivergence = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default bound C/n on the weak-form residual of the standard problem,
/// with C fitted on exhaustive runs at n = 8 and n = 16.
inline constexpr double kWeakFormConstant = 0.04;
inline const std::vector<double> kDefaultCrossvalSlices = {0.5, 0.75, 1.0};

struct RunConfig {
  int n = 16;
  std::string mode = "exhaustive";
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
  std::optional<std::string> f, h, phi;
  double x0 = 0.0;
  std::optional<double> window;
  std::vector<double> slices;
  std::string out = ".";
  unsigned threads = 1;
  std::vector<int> levels;
  std::optional<double> dx, dt, tol;
  double t_end = 1.0;
  std::string dist = "dirac";
  std::string dist2 = "split-dirac";
  double at = 0.0;
};

namespace detail {

inline double number_from(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    double d = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(d)) return d;
  }
  throw ConfigError("config key '" + key + "' must be a finite number");
}

inline std::int64_t integer_from(const json& v, const std::string& key) {
  const double d = number_from(v, key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError("config key '" + key + "' must be an integer");
  return static_cast<std::int64_t>(d);
}

inline std::string string_from(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<double> list_from(const json& v, const std::string& key) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(number_from(e, key));
    return out;
  }
  if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(number_from(json(item), key));
    }
    return out;
  }
  return {number_from(v, key)};
}

inline json optional_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }
inline json optional_json(const std::optional<double>& d) { return d ? json(*d) : json(nullptr); }

}  // namespace detail

/// Builds a RunConfig from a flat JSON object. Unknown keys are rejected.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config file must be a flat JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (v.is_null()) continue;
    if (key == "n") {
      const auto n = detail::integer_from(v, key);
      if (n < 1 || n > 1 << 20) throw ConfigError("n must be in [1, 2^20]");
      c.n = static_cast<int>(n);
    } else if (key == "mode") {
      c.mode = detail::string_from(v, key);
      if (c.mode != "exhaustive" && c.mode != "sampled") throw ConfigError("mode must be 'exhaustive' or 'sampled'");
    } else if (key == "samples") {
      const auto m = detail::integer_from(v, key);
      if (m < 1) throw ConfigError("samples must be at least 1");
      c.samples = static_cast<std::uint64_t>(m);
    } else if (key == "seed") {
      const auto s = detail::integer_from(v, key);
      if (s < 0) throw ConfigError("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "f") {
      c.f = detail::string_from(v, key);
    } else if (key == "h") {
      c.h = detail::string_from(v, key);
    } else if (key == "phi") {
      c.phi = detail::string_from(v, key);
    } else if (key == "x0") {
      c.x0 = detail::number_from(v, key);
    } else if (key == "window") {
      c.window = detail::number_from(v, key);
    } else if (key == "slices") {
      c.slices = detail::list_from(v, key);
    } else if (key == "out") {
      c.out = detail::string_from(v, key);
    } else if (key == "threads") {
      const auto t = detail::integer_from(v, key);
      if (t < 1 || t > 1024) throw ConfigError("threads must be in [1, 1024]");
      c.threads = static_cast<unsigned>(t);
    } else if (key == "levels") {
      c.levels.clear();
      for (double d : detail::list_from(v, key)) {
        if (d != std::floor(d) || d < 1 || d > 1 << 20) throw ConfigError("levels must be positive integers");
        c.levels.push_back(static_cast<int>(d));
      }
    } else if (key == "dx") {
      c.dx = detail::number_from(v, key);
    } else if (key == "dt") {
      c.dt = detail::number_from(v, key);
    } else if (key == "t_end") {
      c.t_end = detail::number_from(v, key);
    } else if (key == "tol") {
      c.tol = detail::number_from(v, key);
    } else if (key == "dist") {
      c.dist = detail::string_from(v, key);
    } else if (key == "dist2") {
      c.dist2 = detail::string_from(v, key);
    } else if (key == "at") {
      c.at = detail::number_from(v, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["n"] = c.n;
  j["mode"] = c.mode;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["f"] = detail::optional_json(c.f);
  j["h"] = detail::optional_json(c.h);
  j["phi"] = detail::optional_json(c.phi);
  j["x0"] = c.x0;
  j["window"] = detail::optional_json(c.window);
  j["slices"] = c.slices;
  j["out"] = c.out;
  j["threads"] = c.threads;
  j["levels"] = c.levels;
  j["dx"] = detail::optional_json(c.dx);
  j["dt"] = detail::optional_json(c.dt);
  j["t_end"] = c.t_end;
  j["tol"] = detail::optional_json(c.tol);
  j["dist"] = c.dist;
  j["dist2"] = c.dist2;
  j["at"] = c.at;
  return j;
}

namespace detail {

struct Context {
  RunConfig cfg;
  std::ostream* out;
  std::ostream* err;
  ParallelOptions par() const { return ParallelOptions{cfg.threads, 4096}; }
};

inline Expr parse_field(const std::string& src, const char* what) {
  try {
    return parse(src);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("cannot parse ") + what + " \"" + src + "\": " + e.what());
  }
}

inline GridLevel level_of(const RunConfig& c, int n) {
  return c.window ? GridLevel(n, *c.window) : GridLevel(n);
}

inline CauchyProblem problem_of(const RunConfig& c, int n, bool require_coefficients) {
  if (require_coefficients && !c.f) throw ConfigError("missing --f (drift expression)");
  if (require_coefficients && !c.h) throw ConfigError("missing --h (diffusion expression)");
  return CauchyProblem(parse_field(c.f.value_or("0"), "drift"), parse_field(c.h.value_or("1"), "diffusion"), c.x0,
                       level_of(c, n));
}

inline TestFunction phi_of(const RunConfig& c) {
  if (!c.phi) return TestFunction::standard();
  return TestFunction(parse_field(*c.phi, "test function"));
}

inline NoiseEnsemble ensemble_of(const RunConfig& c, const GridLevel& level) {
  if (c.mode == "exhaustive") return enumerate(level, NoiseAlphabet::binary());
  return sample(level, NoiseAlphabet::binary(), c.samples, c.seed);
}

inline std::filesystem::path out_dir(const RunConfig& c) {
  std::filesystem::path p(c.out);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << s;
  if (!f) throw ConfigError("cannot write " + p.string());
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline bool is_zero(const Expr& e) { return e.is_constant() && e.constant() == 0.0; }

/// Least-squares slope of -log|v| against log n.
inline double decay_exponent(const std::vector<int>& levels, const std::vector<double>& values) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (values[i] != 0.0 && std::isfinite(values[i])) {
      xs.push_back(std::log(static_cast<double>(levels[i])));
      ys.push_back(-std::log(std::abs(values[i])));
    }
  }
  if (xs.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

struct Failure {
  std::string term;
  double value;
  double bound;
};

inline int finish(Context& ctx, const std::vector<Failure>& failures) {
  for (const auto& f : failures) {
    *ctx.err << "tolerance failure: " << f.term << " = " << format_number(f.value) << " exceeds "
             << format_number(f.bound) << "\n";
  }
  return failures.empty() ? kPass : kToleranceFailure;
}

inline json failures_json(const std::vector<Failure>& failures) {
  json arr = json::array();
  for (const auto& f : failures) {
    json j;
    j["term"] = f.term;
    j["value"] = f.value;
    j["bound"] = f.bound;
    arr.push_back(j);
  }
  return arr;
}

// ---------------------------------------------------------------------------

inline int cmd_simulate(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const CauchyProblem p = problem_of(c, c.n, true);
  const NoiseEnsemble ens = ensemble_of(c, p.level());
  const std::vector<int> slices = c.slices.empty() ? all_time_indices(p.level()) : time_indices(p.level(), c.slices);
  const DensityField d = density(p, ens, slices, ctx.par());

  const auto dir = out_dir(c);
  std::ostringstream csv;
  write_density_csv(csv, d);
  write_text(dir / "density.csv", csv.str());
  json side = density_sidecar(d, p, ens);
  side["config"] = to_json(c);
  write_json(dir / "density.json", side);
  *ctx.out << "wrote " << (dir / "density.csv").string() << " (" << ens.size() << " paths, " << slices.size()
           << " slices)\n";
  return kPass;
}

inline int verify_ito(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const CauchyProblem p = problem_of(c, c.n, false);
  const TestFunction phi = phi_of(c);
  json reports = json::array();
  std::vector<Failure> failures;
  double worst = 0;
  auto run = [&](const Trajectory& tr, const json& source) {
    const ItoReport r = ito_residual(phi, tr, p);
    for (double v : r.residuals) {
      if (!std::isfinite(v)) failures.push_back({"non-finite Ito residual", v, 0.0});
    }
    worst = std::max(worst, r.max_abs);
    json j = hgrid::to_json(r);
    j["path"] = source;
    reports.push_back(j);
  };
  json descriptor;
  if (is_zero(p.diffusion())) {
    run(solve_grid_ode(p), json("deterministic"));
    descriptor = "deterministic";
  } else {
    const NoiseEnsemble ens = ensemble_of(c, p.level());
    const std::uint64_t paths = std::min<std::uint64_t>(5, ens.size());
    for (std::uint64_t i = 0; i < paths; ++i) run(solve_grid_ode(p, ens.path(i), i), json(i));
    descriptor = ensemble_descriptor(ens);
  }
  if (c.tol && !(worst <= *c.tol)) failures.push_back({"max Ito residual", worst, *c.tol});

  json j;
  j["config"] = to_json(c);
  j["problem"] = problem_descriptor(p);
  j["phi"] = to_string(phi.expr());
  j["ensemble"] = descriptor;
  j["tolerance"] = detail::optional_json(c.tol);
  j["max_residual"] = worst;
  j["reports"] = reports;
  j["failures"] = failures_json(failures);
  write_json(out_dir(c) / "ito.json", j);
  *ctx.out << "ito: max residual " << format_number(worst) << " over " << reports.size() << " path(s)\n";
  return finish(ctx, failures);
}

inline int verify_weakform(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const CauchyProblem p = problem_of(c, c.n, false);
  const TestFunction phi = phi_of(c);
  const NoiseEnsemble ens = ensemble_of(c, p.level());
  const WeakFormReport r = weak_form_residual(p, ens, phi, ctx.par());

  const double bound = c.tol.value_or(kWeakFormConstant / c.n + 4.0 * r.std_error);
  std::vector<Failure> failures;
  if (!(std::abs(r.residual) <= bound)) failures.push_back({"weak-form residual", std::abs(r.residual), bound});
  const double piece_scale = std::max({1.0, std::abs(r.drift_term), std::abs(r.noise_term),
                                       std::abs(r.eps_correction), std::abs(r.quadratic_term)});
  const double gap = std::abs(r.pieces_total - r.expansion_total);
  if (!(gap <= 1e-10 * piece_scale)) failures.push_back({"piece sum minus expansion", gap, 1e-10 * piece_scale});
  if (r.exhaustive) {
    const double nb = 1e-10 * std::max(r.noise_scale, 1e-300);
    if (!(std::abs(r.noise_term) <= nb)) failures.push_back({"noise term", std::abs(r.noise_term), nb});
  }

  json j;
  j["config"] = to_json(c);
  j["problem"] = problem_descriptor(p);
  j["phi"] = to_string(phi.expr());
  j["ensemble"] = ensemble_descriptor(ens);
  j["bound"] = bound;
  j["report"] = hgrid::to_json(r);
  j["failures"] = failures_json(failures);
  write_json(out_dir(c) / "weakform.json", j);
  *ctx.out << "weakform: residual " << format_number(r.residual) << " (bound " << format_number(bound)
           << "), noise term " << format_number(r.noise_term) << "\n";
  return finish(ctx, failures);
}

inline FPParams fp_params_of(const RunConfig& c, const GridLevel& level, int n_for_dx) {
  FPParams fp;
  fp.halfwidth = level.spatial_halfwidth();
  fp.dx = c.dx.value_or(2.0 / n_for_dx);
  fp.dt = c.dt.value_or(0.0);
  return fp;
}

inline int verify_crossval(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const CauchyProblem p = problem_of(c, c.n, false);
  const NoiseEnsemble ens = ensemble_of(c, p.level());
  const std::vector<double> times = c.slices.empty() ? kDefaultCrossvalSlices : c.slices;
  const CrossValidationReport r = cross_validate(p, ens, fp_params_of(c, p.level(), c.n), times, ctx.par());
  const double bound = c.tol.value_or(0.1);
  std::vector<Failure> failures;
  if (!(r.max_l1 <= bound)) failures.push_back({"max L1 distance to FP solution", r.max_l1, bound});

  json j;
  j["config"] = to_json(c);
  j["problem"] = problem_descriptor(p);
  j["ensemble"] = ensemble_descriptor(ens);
  j["bound"] = bound;
  j["report"] = hgrid::to_json(r);
  j["failures"] = failures_json(failures);
  write_json(out_dir(c) / "crossval.json", j);
  *ctx.out << "crossval: max L1 " << format_number(r.max_l1) << " (bound " << format_number(bound) << ")\n";
  return finish(ctx, failures);
}

inline int verify_lemmas(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (c.mode != "exhaustive") throw ConfigError("verify lemmas needs --mode exhaustive");
  const CauchyProblem p = problem_of(c, c.n, false);
  const NoiseEnsemble ens = enumerate(p.level(), NoiseAlphabet::binary());
  const double tol = c.tol.value_or(1e-10);
  const LemmaReport r =
      lemma_suite(p, ens, default_state_functions(), default_path_functionals(), tol, ctx.par());

  std::vector<Failure> failures;
  json checks = json::array();
  double worst_noise = 0;
  for (const auto& chk : r.checks) {
    json e;
    e["identity"] = chk.name;
    e["lhs"] = chk.lhs;
    e["rhs"] = chk.rhs;
    e["scale"] = chk.scale;
    e["relative_error"] = chk.relative_error;
    e["pass"] = chk.pass;
    checks.push_back(e);
    if (!chk.pass) failures.push_back({chk.name, chk.relative_error, tol});
    if (chk.name.rfind("E[F xi(", 0) == 0 && chk.name.find(")] = 0") != std::string::npos) {
      worst_noise = std::max(worst_noise, std::abs(chk.lhs));
    }
  }
  json j;
  j["config"] = to_json(c);
  j["problem"] = problem_descriptor(p);
  j["ensemble"] = ensemble_descriptor(ens);
  j["tolerance"] = tol;
  j["noise_term_max_abs"] = worst_noise;
  j["checks"] = checks;
  j["failures"] = failures_json(failures);
  write_json(out_dir(c) / "lemmas.json", j);
  const IdentityCheck* w = r.worst();
  *ctx.out << "lemmas: " << r.checks.size() << " identities, max |E[F xi]| = " << format_number(worst_noise)
           << ", worst relative error " << format_number(w ? w->relative_error : 0.0) << "\n";
  return finish(ctx, failures);
}

inline int cmd_convergence(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (c.levels.size() < 3) throw ConfigError("convergence needs at least 3 levels (--levels a,b,c)");
  std::vector<int> levels = c.levels;
  std::sort(levels.begin(), levels.end());
  if (std::adjacent_find(levels.begin(), levels.end()) != levels.end()) throw ConfigError("levels must be distinct");
  const TestFunction phi = phi_of(c);
  const std::vector<double> times = c.slices.empty() ? kDefaultCrossvalSlices : c.slices;

  std::vector<double> weak, ito, l1;
  std::vector<std::string> modes;
  for (int n : levels) {
    const CauchyProblem p = problem_of(c, n, false);
    NoiseEnsemble ens = sample(p.level(), NoiseAlphabet::binary(), c.samples, c.seed);
    bool within = false;
    exhaustive_count(2, n, kDefaultEnumerationCap, within);
    if (c.mode == "exhaustive" && within) ens = enumerate(p.level(), NoiseAlphabet::binary());
    modes.push_back(ens.exhaustive() ? "exhaustive" : "sampled");
    weak.push_back(weak_form_residual(p, ens, phi, ctx.par()).residual);

    double ito_max = 0;
    if (is_zero(p.diffusion())) {
      ito_max = ito_residual(phi, solve_grid_ode(p), p).max_abs;
    } else {
      for (std::uint64_t s = 0; s < 5; ++s) {
        const NoiseEnsemble one = sample(p.level(), NoiseAlphabet::binary(), 1, c.seed + s);
        ito_max += ito_residual(phi, solve_grid_ode(p, one.path(0)), p).max_abs / 5.0;
      }
    }
    ito.push_back(ito_max);
    FPParams fp = fp_params_of(c, p.level(), levels.front());
    // binary walks sit 2/sqrt(n) apart; narrower FP cells would mostly be empty
    if (!c.dx) fp.dx = 2.0 * std::ceil(std::sqrt(static_cast<double>(n))) / n;
    l1.push_back(cross_validate(p, ens, fp, times, ctx.par()).max_l1);
  }

  std::ostringstream csv;
  csv << "n,mode,weakform_residual,ito_max_residual,fp_l1\n";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    csv << levels[i] << ',' << modes[i] << ',' << format_number(weak[i]) << ',' << format_number(ito[i]) << ','
        << format_number(l1[i]) << '\n';
  }
  const auto dir = out_dir(c);
  write_text(dir / "convergence.csv", csv.str());
  json j;
  j["config"] = to_json(c);
  j["levels"] = levels;
  j["modes"] = modes;
  j["weakform_residual"] = weak;
  j["ito_max_residual"] = ito;
  j["fp_l1"] = l1;
  json ex;
  ex["weakform"] = decay_exponent(levels, weak);
  ex["ito"] = decay_exponent(levels, ito);
  ex["fp_l1"] = decay_exponent(levels, l1);
  j["exponents"] = ex;
  write_json(dir / "convergence.json", j);
  *ctx.out << csv.str() << "exponents: weakform " << format_number(ex["weakform"].get<double>()) << ", ito "
           << format_number(ex["ito"].get<double>()) << ", fp_l1 " << format_number(ex["fp_l1"].get<double>())
           << "\n";
  return kPass;
}

inline int cmd_fp_solve(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (!c.f) throw ConfigError("missing --f (drift expression)");
  if (!c.h) throw ConfigError("missing --h (diffusion expression)");
  FPParams fp;
  fp.halfwidth = c.window.value_or(GridLevel::kDefaultHalfwidth);
  fp.dx = c.dx.value_or(1.0 / 64);
  fp.dt = c.dt.value_or(0.0);
  fp.save_times = c.slices;
  fp.t_end = c.slices.empty() ? c.t_end : *std::max_element(c.slices.begin(), c.slices.end());
  const FPSolution s = fp_solve(parse_field(*c.f, "drift"), parse_field(*c.h, "diffusion"), c.x0, fp);
  const auto dir = out_dir(c);
  std::ostringstream csv;
  write_fp_csv(csv, s);
  write_text(dir / "fp.csv", csv.str());
  json j = fp_summary(s);
  j["config"] = to_json(c);
  write_json(dir / "fp.json", j);
  *ctx.out << "wrote " << (dir / "fp.csv").string() << " (" << s.cells() << " cells, dt " << format_number(s.dt)
           << ")\n";
  return kPass;
}

inline GridDistribution distribution_of(const std::string& kind, const GridLevel& level, double at) {
  if (kind == "dirac") return dirac(level, at);
  if (kind == "split-dirac") return split_dirac(level, at);
  if (kind == "dirac-derivative") return dirac_derivative(level, at);
  if (kind == "n2-dirac") return scaled(dirac(level, at), level.n());
  throw ConfigError("unknown distribution '" + kind + "' (dirac, split-dirac, dirac-derivative, n2-dirac)");
}

inline int cmd_pair(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (!c.phi) throw ConfigError("missing --phi (test function)");
  const GridLevel level = level_of(c, c.n);
  const TestFunction phi = phi_of(c);
  const double v = pair(distribution_of(c.dist, level, c.at), phi);
  json j;
  j["config"] = to_json(c);
  j["pairing"] = v;
  j["phi_at"] = phi(0.0, c.at);
  j["minus_dphi_at"] = -phi.d_x(0.0, c.at);
  *ctx.out << j.dump(2) << "\n";
  return kPass;
}

inline int cmd_equivalent(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const GridLevel level = level_of(c, c.n);
  const double tol = c.tol.value_or(1e-2);
  const EquivalenceReport r = equivalent(distribution_of(c.dist, level, c.at), distribution_of(c.dist2, level, c.at),
                                         default_test_family(), tol);
  json entries = json::array();
  double worst = 0;
  for (const auto& e : r.entries) {
    json x;
    x["phi"] = e.phi_index;
    x["first"] = e.first;
    x["second"] = e.second;
    x["difference"] = e.difference;
    entries.push_back(x);
    worst = std::max(worst, e.difference);
  }
  json j;
  j["config"] = to_json(c);
  j["equivalent"] = r.equivalent;
  j["tolerance"] = tol;
  j["max_difference"] = worst;
  j["entries"] = entries;
  *ctx.out << j.dump(2) << "\n";
  if (!r.equivalent) {
    *ctx.err << "tolerance failure: max pairing difference " << format_number(worst) << " exceeds "
             << format_number(tol) << "\n";
    return kToleranceFailure;
  }
  return kPass;
}

}  // namespace detail

/// Runs the front end with argv-style arguments (args[0] is the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Hyperfinite-grid stochastic simulation and verification"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help message and exit");
  app.set_help_all_flag("--help-all", "print help for every subcommand");

  std::map<std::string, std::string> raw;
  std::vector<std::string> list_slices, list_levels;
  std::string config_path;
  std::string which;

  auto add_common = [&](CLI::App* s, bool levels) {
    // "-h" would clash with the diffusion flag --h
    s->set_help_flag("--help", "print this help message and exit");
    s->add_option("--config", config_path, "flat JSON config file; flags override its keys");
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"n", "grid level n (step 1/n)"},
        {"mode", "exhaustive | sampled"},
        {"samples", "number of sampled paths M"},
        {"seed", "seed of the sampled ensemble"},
        {"f", "drift expression f(t, x)"},
        {"h", "diffusion expression h(t, x)"},
        {"phi", "test function expression phi(t, x)"},
        {"x0", "initial value"},
        {"window", "spatial halfwidth of the density window"},
        {"out", "output directory"},
        {"threads", "worker threads (results do not depend on it)"},
        {"dx", "FP cell width"},
        {"dt", "FP time step"},
        {"t-end", "FP final time"},
        {"tol", "tolerance override"},
        {"dist", "distribution: dirac | split-dirac | dirac-derivative | n2-dirac"},
        {"dist2", "second distribution for 'equivalent'"},
        {"at", "distribution center"},
    };
    for (const auto& [name, help] : flags) s->add_option("--" + name, raw[name], help);
    s->add_option("--slices", list_slices, "saved time slices (comma separated)")->delimiter(',');
    if (levels) s->add_option("--levels", list_levels, "grid levels (comma separated, at least 3)")->delimiter(',');
  };

  CLI::App* sim = app.add_subcommand("simulate", "simulate the ensemble and write the density CSV + JSON sidecar");
  CLI::App* ver = app.add_subcommand("verify", "run a verification: ito | weakform | crossval | lemmas");
  CLI::App* conv = app.add_subcommand("convergence", "residuals and L1 distance across grid levels");
  CLI::App* fps = app.add_subcommand("fp-solve", "finite-volume Fokker-Planck solution as CSV");
  CLI::App* pr = app.add_subcommand("pair", "pair a grid distribution with a test function");
  CLI::App* eq = app.add_subcommand("equivalent", "macroscopic equivalence of two grid distributions");
  ver->add_option("which", which, "ito | weakform | crossval | lemmas")
      ->required()
      ->check(CLI::IsMember({"ito", "weakform", "crossval", "lemmas"}));
  for (CLI::App* s : {sim, ver, fps, pr, eq}) add_common(s, false);
  add_common(conv, true);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    json merged = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      try {
        merged = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
      }
      if (!merged.is_object()) throw ConfigError("config file must be a flat JSON object");
    }
    for (const auto& [name, value] : raw) {
      if (active->count("--" + name) > 0) merged[name == "t-end" ? "t_end" : name] = value;
    }
    if (active->count("--slices") > 0) {
      json arr = json::array();
      for (const auto& s : list_slices) arr.push_back(detail::number_from(json(s), "slices"));
      merged["slices"] = arr;
    }
    if (active->get_option_no_throw("--levels") && active->count("--levels") > 0) {
      json arr = json::array();
      for (const auto& s : list_levels) arr.push_back(detail::number_from(json(s), "levels"));
      merged["levels"] = arr;
    }
    // verify lemmas runs at n = 8 unless told otherwise
    if (active == ver && which == "lemmas" && !merged.contains("n")) merged["n"] = 8;

    detail::Context ctx{config_from_json(merged), &out, &err};
    if (active == sim) return detail::cmd_simulate(ctx);
    if (active == conv) return detail::cmd_convergence(ctx);
    if (active == fps) return detail::cmd_fp_solve(ctx);
    if (active == pr) return detail::cmd_pair(ctx);
    if (active == eq) return detail::cmd_equivalent(ctx);
    if (which == "ito") return detail::verify_ito(ctx);
    if (which == "weakform") return detail::verify_weakform(ctx);
    if (which == "crossval") return detail::verify_crossval(ctx);
    return detail::verify_lemmas(ctx);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const EvalError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kUsage;
  }
}

inline int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace hgrid::cli
