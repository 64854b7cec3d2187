#include "fracsaddle/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/parallel.hpp"
#include "fracsaddle/special_functions.hpp"

namespace fracsaddle {

namespace pt = boost::property_tree;
using nlohmann::json;

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::solve: return "solve";
    case RunMode::stability: return "stability";
    case RunMode::optimize: return "optimize";
    case RunMode::constants: return "constants";
    case RunMode::selftest: return "selftest";
  }
  return "?";
}

RunMode parse_run_mode(const std::string& name) {
  for (auto m : {RunMode::solve, RunMode::stability, RunMode::optimize, RunMode::constants,
                 RunMode::selftest}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown mode '" + name + "' (solve, stability, optimize, constants, selftest)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  try {
    return parse_double(t);
  } catch (const IoError&) {
    throw ValidationError("config " + key + ": expected a number, got '" + text + "'");
  }
}

long long to_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0') throw ValidationError("config " + key + ": expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ValidationError("config " + key + ": expected true/false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(key, item));
  }
  return out;
}

// "lo:hi, lo:hi"
std::vector<std::pair<double, double>> to_box(const std::string& key, const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("config " + key + ": expected lo:hi, got '" + item + "'");
    out.emplace_back(to_double(key, item.substr(0, colon)), to_double(key, item.substr(colon + 1)));
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"run",
       {{"mode", [](ExperimentConfig& c, const std::string& v) { c.mode = parse_run_mode(trim(v)); }},
        {"seed", [](ExperimentConfig& c, const std::string& v) {
           const auto s = to_int("run.seed", v);
           if (s < 0) throw ValidationError("config run.seed: must be >= 0");
           c.seed = static_cast<std::uint64_t>(s);
         }},
        {"threads", [](ExperimentConfig& c, const std::string& v) { c.threads = static_cast<int>(to_int("run.threads", v)); }},
        {"out", [](ExperimentConfig& c, const std::string& v) { c.out = trim(v); }}}},
      {"domain",
       {{"n", [](ExperimentConfig& c, const std::string& v) { c.domain.dim = static_cast<int>(to_int("domain.n", v)); }},
        {"side", [](ExperimentConfig& c, const std::string& v) {
           c.domain.side = trim(v) == "pi" ? std::numbers::pi : to_double("domain.side", v);
         }},
        {"alpha", [](ExperimentConfig& c, const std::string& v) { c.alpha = to_double("domain.alpha", v); }},
        {"cutoff", [](ExperimentConfig& c, const std::string& v) { c.cutoff = static_cast<int>(to_int("domain.cutoff", v)); }},
        {"grid", [](ExperimentConfig& c, const std::string& v) { c.grid = static_cast<int>(to_int("domain.grid", v)); }}}},
      {"controls",
       {{"box", [](ExperimentConfig& c, const std::string& v) { c.controls.box = to_box("controls.box", v); }},
        {"p", [](ExperimentConfig& c, const std::string& v) { c.controls.p = to_double("controls.p", v); }},
        {"value", [](ExperimentConfig& c, const std::string& v) { c.control_value = to_list("controls.value", v); }}}},
      {"solver",
       {{"method", [](ExperimentConfig& c, const std::string& v) { c.solver.method = parse_solver_method(trim(v)); }},
        {"step", [](ExperimentConfig& c, const std::string& v) { c.solver.step = to_double("solver.step", v); }},
        {"tol", [](ExperimentConfig& c, const std::string& v) { c.solver.tol = to_double("solver.tol", v); }},
        {"max_iters", [](ExperimentConfig& c, const std::string& v) { c.solver.max_iters = static_cast<int>(to_int("solver.max_iters", v)); }},
        {"backtrack", [](ExperimentConfig& c, const std::string& v) { c.solver.backtrack = to_double("solver.backtrack", v); }},
        {"lipschitz_factor", [](ExperimentConfig& c, const std::string& v) { c.solver.lipschitz_factor = to_double("solver.lipschitz_factor", v); }},
        {"divergence_window", [](ExperimentConfig& c, const std::string& v) { c.solver.divergence_window = static_cast<int>(to_int("solver.divergence_window", v)); }},
        {"random_init", [](ExperimentConfig& c, const std::string& v) { c.solver.random_init = to_bool("solver.random_init", v); }},
        {"init_scale", [](ExperimentConfig& c, const std::string& v) { c.solver.init_scale = to_double("solver.init_scale", v); }},
        {"certify_probes", [](ExperimentConfig& c, const std::string& v) { c.solver.certify_probes = static_cast<int>(to_int("solver.certify_probes", v)); }},
        {"certify_tol", [](ExperimentConfig& c, const std::string& v) { c.solver.certify_tol = to_double("solver.certify_tol", v); }},
        {"override_validation", [](ExperimentConfig& c, const std::string& v) {
           c.solver.override_validation = to_bool("solver.override_validation", v);
           c.optimizer.override_validation = c.solver.override_validation;
         }}}},
      {"sequence",
       {{"mode", [](ExperimentConfig& c, const std::string& v) { c.sequence.mode = parse_sequence_mode(trim(v)); }},
        {"base", [](ExperimentConfig& c, const std::string& v) { c.sequence.base = to_list("sequence.base", v); }},
        {"length", [](ExperimentConfig& c, const std::string& v) { c.sequence.length = static_cast<int>(to_int("sequence.length", v)); }},
        {"amplitude", [](ExperimentConfig& c, const std::string& v) { c.sequence.amplitude = to_double("sequence.amplitude", v); }},
        {"decay", [](ExperimentConfig& c, const std::string& v) { c.sequence.decay = to_double("sequence.decay", v); }},
        {"frequency_scale", [](ExperimentConfig& c, const std::string& v) { c.sequence.frequency_scale = to_double("sequence.frequency_scale", v); }},
        {"pattern", [](ExperimentConfig& c, const std::string& v) { c.sequence.pattern = trim(v); }},
        {"solution_tol", [](ExperimentConfig& c, const std::string& v) { c.thresholds.solution_tol = to_double("sequence.solution_tol", v); }},
        {"value_tol", [](ExperimentConfig& c, const std::string& v) { c.thresholds.value_tol = to_double("sequence.value_tol", v); }},
        {"weak_solution_tol", [](ExperimentConfig& c, const std::string& v) { c.thresholds.weak_solution_tol = to_double("sequence.weak_solution_tol", v); }},
        {"monotone_tail", [](ExperimentConfig& c, const std::string& v) { c.thresholds.monotone_tail = static_cast<int>(to_int("sequence.monotone_tail", v)); }}}},
      {"optimizer",
       {{"method", [](ExperimentConfig& c, const std::string& v) { c.optimizer.method = parse_optimizer_method(trim(v)); }},
        {"cells", [](ExperimentConfig& c, const std::string& v) { c.cells = static_cast<int>(to_int("optimizer.cells", v)); }},
        {"init", [](ExperimentConfig& c, const std::string& v) { c.init = to_list("optimizer.init", v); }},
        {"initial_step", [](ExperimentConfig& c, const std::string& v) { c.optimizer.initial_step = to_double("optimizer.initial_step", v); }},
        {"step_tol", [](ExperimentConfig& c, const std::string& v) { c.optimizer.step_tol = to_double("optimizer.step_tol", v); }},
        {"shrink", [](ExperimentConfig& c, const std::string& v) { c.optimizer.shrink = to_double("optimizer.shrink", v); }},
        {"max_evaluations", [](ExperimentConfig& c, const std::string& v) { c.optimizer.max_evaluations = static_cast<int>(to_int("optimizer.max_evaluations", v)); }},
        {"max_failure_fraction", [](ExperimentConfig& c, const std::string& v) { c.optimizer.max_failure_fraction = to_double("optimizer.max_failure_fraction", v); }},
        {"fd_step", [](ExperimentConfig& c, const std::string& v) { c.optimizer.fd_step = to_double("optimizer.fd_step", v); }},
        {"max_iters", [](ExperimentConfig& c, const std::string& v) { c.optimizer.max_iters = static_cast<int>(to_int("optimizer.max_iters", v)); }},
        {"baseline_samples", [](ExperimentConfig& c, const std::string& v) { c.baseline_samples = static_cast<int>(to_int("optimizer.baseline_samples", v)); }}}},
  };
  return table;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream is(ini_text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ValidationError("config: key '" + section + "' outside any section");
    if (section == "nonlinearity" || section == "cost") {
      auto& name = section == "cost" ? cfg.cost : cfg.nonlinearity;
      auto& params = section == "cost" ? cfg.cost_params : cfg.nonlinearity_params;
      for (const auto& [key, leaf] : body) {
        if (key == "name") {
          name = trim(leaf.data());
        } else {
          params[key] = trim(leaf.data());
        }
      }
      continue;
    }
    const auto sec = setters().find(section);
    if (sec == setters().end()) throw ValidationError("config: unknown section [" + section + "]");
    for (const auto& [key, leaf] : body) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) {
        throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
      }
      it->second(cfg, leaf.data());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path));
}

void ExperimentConfig::validate() const {
  domain.validate();
  if (!(alpha > 1.0 && alpha < 2.0)) throw ValidationError("config domain.alpha: must lie in (1,2)");
  if (cutoff < 1) throw ValidationError("config domain.cutoff: must be >= 1");
  if (grid < cutoff) {
    throw ValidationError("config domain.grid: N = " + std::to_string(grid) +
                          " must be >= the cutoff K = " + std::to_string(cutoff));
  }
  controls.validate();
  const auto m = static_cast<std::size_t>(controls.dim());
  auto in_box = [&](const std::vector<double>& v, const std::string& key) {
    if (v.empty()) return;
    if (v.size() != m) {
      throw ValidationError("config " + key + ": expected " + std::to_string(m) + " values");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!(v[i] >= controls.box[i].first && v[i] <= controls.box[i].second)) {
        throw ValidationError("config " + key + ": value outside the control box");
      }
    }
  };
  in_box(control_value, "controls.value");
  solver.validate();
  if (mode == RunMode::stability) {
    sequence.validate();
    in_box(sequence.base, "sequence.base");
    if (sequence.mode == SequenceMode::weak_lp && std::isinf(controls.p)) {
      throw ValidationError("config: weak_lp needs a finite controls.p; use weak_star for p = inf");
    }
    if (sequence.mode == SequenceMode::weak_star && !std::isinf(controls.p)) {
      throw ValidationError("config: weak_star is the p = inf topology; set controls.p = inf");
    }
  }
  if (mode == RunMode::optimize) {
    optimizer.validate();
    if (cells < 1) throw ValidationError("config optimizer.cells: must be >= 1");
    if (baseline_samples < 0) throw ValidationError("config optimizer.baseline_samples: must be >= 0");
    in_box(init, "optimizer.init");
  }
}

std::string config_reference() {
  const ExperimentConfig d;
  std::ostringstream os;
  os << "Config file keys (INI) and defaults:\n"
     << "  [run]        mode = solve | stability | optimize | constants | selftest (solve)\n"
     << "               seed = " << d.seed << "   threads = " << d.threads << " (0: hardware)   out = (default dir)\n"
     << "  [domain]     n = " << d.domain.dim << "   side = pi   alpha = " << d.alpha
     << "   cutoff = " << d.cutoff << " (K)   grid = " << d.grid << " (N >= K)\n"
     << "  [nonlinearity] name = " << d.nonlinearity << "; other keys are passed as parameters\n"
     << "               linear_coupled: beta1 beta2 l1 l2 (mode lists \"k1,k2,k3:c; ...\")\n"
     << "               power_coupled: a b s   quadratic_split: beta1 beta2 kappa l1 l2 mu nu\n"
     << "               single_equation: beta quartic l\n"
     << "  [controls]   box = 0:1, 0:1   p = " << fmt(d.controls.p) << " (inf allowed)   value = (centre)\n"
     << "  [solver]     method = extragradient | direct_linear | min_only   step = " << fmt(d.solver.step)
     << "   tol = " << fmt(d.solver.tol) << "\n"
     << "               max_iters = " << d.solver.max_iters << "   backtrack = " << fmt(d.solver.backtrack)
     << "   lipschitz_factor = " << fmt(d.solver.lipschitz_factor)
     << "   divergence_window = " << d.solver.divergence_window << "\n"
     << "               random_init = false   init_scale = " << fmt(d.solver.init_scale)
     << "   certify_probes = " << d.solver.certify_probes << "   certify_tol = " << fmt(d.solver.certify_tol)
     << "\n"
     << "               override_validation = false\n"
     << "  [sequence]   mode = strong_lp | weak_lp | weak_star   base = (centre)   length = "
     << d.sequence.length << "   amplitude = " << fmt(d.sequence.amplitude) << "\n"
     << "               decay = " << fmt(d.sequence.decay) << "   frequency_scale = "
     << fmt(d.sequence.frequency_scale) << "   pattern = sin | square\n"
     << "               solution_tol = " << fmt(d.thresholds.solution_tol) << "   value_tol = "
     << fmt(d.thresholds.value_tol) << "   weak_solution_tol = " << fmt(d.thresholds.weak_solution_tol)
     << "   monotone_tail = " << d.thresholds.monotone_tail << "\n"
     << "  [cost]       name = " << d.cost << " | example2_cost; other keys are parameters (s)\n"
     << "  [optimizer]  method = pattern | projected_gradient   cells = " << d.cells
     << " (per axis)   init = (centre)\n"
     << "               initial_step = " << fmt(d.optimizer.initial_step) << "   step_tol = "
     << fmt(d.optimizer.step_tol) << "   shrink = " << fmt(d.optimizer.shrink)
     << "   max_evaluations = " << d.optimizer.max_evaluations << "\n"
     << "               max_failure_fraction = " << fmt(d.optimizer.max_failure_fraction)
     << "   fd_step = " << fmt(d.optimizer.fd_step) << "   max_iters = " << d.optimizer.max_iters
     << "   baseline_samples = " << d.baseline_samples << "\n";
  return os.str();
}

std::filesystem::path default_output_dir(RunMode mode) {
  const char* root = std::getenv("FRACSADDLE_OUTPUT_ROOT");
  const std::filesystem::path base = root && *root ? root : "fracsaddle_out";
  return base / to_string(mode);
}

ProblemPtr build_problem(const ExperimentConfig& cfg) {
  auto basis = enumerate_modes(cfg.domain, cfg.cutoff);
  auto grid = std::make_shared<const QuadratureGrid>(cfg.domain, cfg.grid);
  auto nl = make_nonlinearity(cfg.nonlinearity, cfg.nonlinearity_params, basis, cfg.alpha);
  if (cfg.mode == RunMode::stability && cfg.sequence.mode != SequenceMode::strong_lp && !nl->has_split()) {
    throw ValidationError("weak-topology runs need a nonlinearity linear in the control; '" +
                          cfg.nonlinearity + "' has no split");
  }
  return std::make_shared<const ActionProblem>(basis, grid, cfg.alpha, nl, cfg.controls);
}

std::vector<SelftestLine> run_selftest(double alpha, std::uint64_t seed) {
  std::vector<SelftestLine> out;
  auto add = [&](const std::string& name, bool ok, const std::string& detail) {
    out.push_back({name, ok, detail});
  };
  const BoxDomain cube{3, std::numbers::pi};
  {
    auto b = enumerate_modes(cube, 1);
    const auto phi = SpectralField::mode(b, {1, 1, 1}, 1.0);
    const double got = apply_frac_power(phi, alpha / 2).coeffs[0];
    const double want = std::pow(3.0, alpha / 2);
    add("eigen_structure", b->eigenvalue(0) == 3.0 && std::abs(got - want) < 1e-12,
        "rho1 = " + fmt(b->eigenvalue(0)) + ", coefficient " + fmt(got));
  }
  {
    auto b = enumerate_modes(cube, 3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 200; ++t) {
      SpectralField f(b);
      for (double& c : f.coeffs) c = g(rng);
      worst = std::min(worst, poincare_ratio(f, alpha));
    }
    const double eq = poincare_ratio(SpectralField::mode(b, {1, 1, 1}, 1.0), alpha);
    const double bound = std::pow(3.0, alpha / 2);
    add("poincare", worst >= bound - 1e-12 && std::abs(eq - bound) < 1e-12,
        "min ratio " + fmt(worst) + " vs " + fmt(bound));
  }
  {
    const double g = gamma_fn(0.5);
    add("gamma_half", std::abs(g - std::sqrt(std::numbers::pi)) < 1e-12, "Gamma(1/2) = " + fmt(g));
  }
  auto b = enumerate_modes(cube, 3);
  auto grid = std::make_shared<const QuadratureGrid>(cube, 7);
  auto nl = make_linear_coupled(1.0, 1.0, SpectralField::mode(b, {1, 1, 1}, 1.0),
                                SpectralField::mode(b, {2, 1, 1}, 0.5), alpha);
  const ActionProblem p(b, grid, alpha, nl, ControlSet{{{0.0, 1.0}, {0.0, 1.0}}, 2.0});
  const auto w = p.constant_control(std::vector<double>{0.3, 0.6});
  {
    const auto r = gradient_check(p, p.zero_field(), p.zero_field(), w, 10, seed + 1);
    add("gradient", r.passed(1e-9), "worst relative error " + fmt(r.worst_relative_error));
  }
  SolverConfig sc;
  sc.seed = seed;
  const auto eg = solve(p, w, sc);
  {
    SolverConfig dc = sc;
    dc.method = SolverMethod::direct_linear;
    const auto d = solve(p, w, dc);
    const double dist = state_distance(p, eg.u, eg.v, d.u, d.v);
    add("oracle_equivalence", eg.converged && dist < 1e-8, "distance " + fmt(dist));
  }
  {
    const double res = std::max(eg.residual_u, eg.residual_v);
    add("certification", eg.converged && eg.certificate.passed && eg.certificate.probes == 100 && res < 1e-10,
        "residual " + fmt(res) + ", " + std::to_string(eg.certificate.violations.size()) + " violations");
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["domain"] = {{"n", c.domain.dim}, {"side", c.domain.side}, {"alpha", c.alpha},
                 {"cutoff", c.cutoff}, {"grid", c.grid}};
  j["nonlinearity"] = {{"name", c.nonlinearity}, {"params", c.nonlinearity_params}};
  json box = json::array();
  for (const auto& [lo, hi] : c.controls.box) box.push_back({lo, hi});
  j["controls"] = {{"box", box}, {"p", format_double(c.controls.p)}, {"value", c.control_value}};
  j["solver"] = {{"method", to_string(c.solver.method)}, {"tol", c.solver.tol},
                 {"max_iters", c.solver.max_iters}, {"certify_probes", c.solver.certify_probes}};
  j["sequence"] = {{"mode", to_string(c.sequence.mode)}, {"length", c.sequence.length},
                   {"amplitude", c.sequence.amplitude}, {"decay", c.sequence.decay}};
  j["cost"] = {{"name", c.cost}, {"params", c.cost_params}};
  j["optimizer"] = {{"method", to_string(c.optimizer.method)}, {"cells", c.cells},
                    {"baseline_samples", c.baseline_samples}};
  return j;
}

struct Run {
  const ExperimentConfig& cfg;
  const std::filesystem::path& dir;
  std::ostream& out;
  std::ostream& err;
  bool verbose;
  std::vector<std::string> files;
  std::vector<std::string> warnings;

  void csv(const std::string& name, const CsvTable& t) {
    write_csv(dir / name, t);
    files.push_back(name);
  }
  void text(const std::string& name, const std::string& t) {
    write_text(dir / name, t);
    files.push_back(name);
  }
  void warn(const std::string& msg) {
    warnings.push_back(msg);
    err << "warning: " << msg << "\n";
  }

  SolverConfig solver() const {
    SolverConfig s = cfg.solver;
    s.seed = cfg.seed;
    return s;
  }

  int solve_mode() {
    auto problem = build_problem(cfg);
    const auto w = cfg.control_value.empty()
                       ? problem->constant_control(cfg.controls.center())
                       : problem->constant_control(cfg.control_value);
    SolverConfig s = solver();
    s.record_log = true;
    const auto r = solve(*problem, w, s);
    text("result.json", saddle_json(r));
    csv("iterations.csv", iteration_table(r));
    csv("fields.csv", field_table(r));
    out << "solve: " << r.status << " after " << r.iterations << " iterations, m = " << fmt(r.action)
        << ", residual " << fmt(std::max(r.residual_u, r.residual_v)) << ", certificate "
        << (r.certificate.passed ? "passed" : "failed") << " (" << r.certificate.probes << " probes)\n";
    if (!r.converged) {
      err << "solver did not converge: " << r.status << "\n";
      return kExitSolver;
    }
    if (r.certificate.probes > 0 && !r.certificate.passed) {
      err << "saddle certification failed\n";
      return kExitSolver;
    }
    return kExitOk;
  }

  int stability_mode() {
    auto problem = build_problem(cfg);
    const auto rep = run_dependence(*problem, cfg.sequence, solver(), cfg.thresholds, cfg.threads);
    csv("dependence.csv", dependence_table(rep));
    text("verdicts.json", dependence_json(rep));
    for (const auto& i : rep.issues) warn(i);
    const auto& v = rep.verdicts;
    out << "stability (" << to_string(rep.spec.mode) << "): overall " << to_string(v.overall)
        << "; strong " << to_string(v.strong_dependence) << ", value " << to_string(v.value_continuity)
        << ", weak contrast " << to_string(v.weak_contrast) << ", inclusion " << to_string(v.set_inclusion)
        << "\n";
    if (verbose) {
      for (const auto& r : rep.rows) {
        out << "  k=" << r.k << " |w_k-w_0|=" << fmt(r.control_distance) << " dist=" << fmt(r.solution_distance)
            << " gap=" << fmt(r.value_gap) << "\n";
      }
      for (const auto& n : v.notes) out << "  note: " << n << "\n";
    }
    return kExitOk;
  }

  int optimize_mode() {
    auto problem = build_problem(cfg);
    const auto cost = make_cost(cfg.cost, cfg.cost_params);
    const auto fill = cfg.init.empty() ? cfg.controls.center() : cfg.init;
    const ControlParametrization init(problem->grid(), cfg.controls, cfg.cells, fill);
    OptimizerConfig oc = cfg.optimizer;
    oc.threads = cfg.threads;
    const auto r = optimize_control(*problem, cost, init, solver(), oc);
    std::optional<BaselineResult> base;
    if (cfg.baseline_samples > 0) {
      base = random_search_baseline(*problem, cost, init, solver(), cfg.baseline_samples, cfg.seed,
                                    cfg.threads);
    }
    text("optimal.json", optimal_json(r, base ? &*base : nullptr));
    csv("trace.csv", trace_table(r));
    csv("fields.csv", field_table(r.state));
    out << "optimize: J* = " << fmt(r.cost) << " (" << r.status << ", " << r.evaluations
        << " evaluations, " << r.failures << " failed), admissible "
        << (r.admissibility.passed ? "yes" : "no") << "\n";
    if (base) out << "baseline: best of " << base->samples << " = " << fmt(base->best_cost) << "\n";
    for (const auto& s : r.rejected) warn("rejected candidate: " + s);
    if (!r.admissibility.passed) {
      err << "final triple is not admissible (residual " << fmt(std::max(r.admissibility.residual_u, r.admissibility.residual_v))
          << ")\n";
      return kExitSolver;
    }
    return kExitOk;
  }

  int constants_mode() {
    BasisPtr b = enumerate_modes(cfg.domain, 1);
    const double rho = b->principal_eigenvalue();
    const double lam = std::pow(rho, cfg.alpha / 2);
    const auto crit = critical_exponent(cfg.alpha, cfg.domain.dim);
    json j;
    j["alpha"] = cfg.alpha;
    j["n"] = cfg.domain.dim;
    j["side"] = cfg.domain.side;
    j["rho1"] = rho;
    j["rho1_pow_half_alpha"] = lam;
    out << "alpha = " << fmt(cfg.alpha) << ", n = " << cfg.domain.dim << "\n"
        << "rho1^(alpha/2)   = " << fmt(lam) << "\n";
    if (crit) {
      const double s = sobolev_constant(cfg.alpha, cfg.domain.dim);
      j["critical_exponent"] = *crit;
      j["sobolev_constant"] = s;
      out << "2*_alpha         = " << fmt(*crit) << "\n"
          << "S(alpha, n)      = " << fmt(s) << "\n";
    } else {
      j["critical_exponent"] = nullptr;
      j["sobolev_constant"] = nullptr;
      out << "2*_alpha         = none (n <= alpha)\n";
    }
    text("constants.json", j.dump(2) + "\n");
    return kExitOk;
  }

  int selftest_mode() {
    const auto lines = run_selftest(cfg.alpha, cfg.seed);
    json j = json::array();
    bool all = true;
    for (const auto& l : lines) {
      out << (l.passed ? "PASS " : "FAIL ") << l.name << ": " << l.detail << "\n";
      j.push_back({{"name", l.name}, {"passed", l.passed}, {"detail", l.detail}});
      all = all && l.passed;
    }
    text("selftest.json", j.dump(2) + "\n");
    out << (all ? "selftest passed" : "selftest FAILED") << "\n";
    return all ? kExitOk : kExitSolver;
  }
};

}  // namespace

int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                   std::ostream& err, bool verbose) {
  Run run{cfg, out_dir, out, err, verbose, {}, {}};
  int code = kExitOk;
  std::string message;
  try {
    cfg.validate();
    if (cfg.threads > 0) set_default_threads(cfg.threads);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    switch (cfg.mode) {
      case RunMode::solve: code = run.solve_mode(); break;
      case RunMode::stability: code = run.stability_mode(); break;
      case RunMode::optimize: code = run.optimize_mode(); break;
      case RunMode::constants: code = run.constants_mode(); break;
      case RunMode::selftest: code = run.selftest_mode(); break;
    }
  } catch (const ValidationError& e) {
    code = kExitValidation;
    message = e.what();
  } catch (const IoError& e) {
    code = kExitIo;
    message = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    code = kExitIo;
    message = e.what();
  } catch (const std::exception& e) {
    // SolverError, NonFiniteError and anything else from the numerics
    code = kExitSolver;
    message = e.what();
  }
  if (!message.empty()) {
    const char* kind = code == kExitValidation ? "validation error" : code == kExitIo ? "i/o error" : "solver failure";
    err << kind << ": " << message << "\n";
  }
  if (code != kExitIo && code != kExitValidation) {
    try {
      json info;
      info["timestamp"] = utc_timestamp();
      info["exit_code"] = code;
      info["files"] = run.files;
      info["warnings"] = run.warnings;
      if (!message.empty()) info["error"] = message;
      info["config"] = config_json(cfg);
      write_text(out_dir / "run_info.json", info.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "i/o error: " << e.what() << "\n";
      code = kExitIo;
    }
  }
  return code;
}

}  // namespace fracsaddle
