// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/experiment.hpp"
#include "fracsaddle/special_functions.hpp"

namespace fs = fracsaddle;
using std::numbers::pi;
using clk = std::chrono::steady_clock;

namespace {

const fs::BoxDomain kCube{3, pi};
const fs::ControlSet kUnitBox{{{0.0, 1.0}, {0.0, 1.0}}, 2.0};

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

fs::SpectralField random_field(const fs::BasisPtr& b, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g;
  fs::SpectralField f(b);
  for (std::size_t i = 0; i < f.size(); ++i) f.coeffs[i] = scale * g(rng) / b->eigenvalue(i);
  return f;
}

fs::ProblemPtr example1(int n, double beta1, double beta2, fs::SpectralField l1, fs::SpectralField l2,
                        fs::ControlSet controls = kUnitBox, double alpha = 1.5) {
  auto b = l1.basis;
  auto grid = std::make_shared<const fs::QuadratureGrid>(kCube, n);
  auto nl = fs::make_linear_coupled(beta1, beta2, std::move(l1), std::move(l2), alpha);
  return std::make_shared<const fs::ActionProblem>(b, grid, alpha, nl, std::move(controls));
}

fs::ProblemPtr example1_forced(int k, int n, double p = 2.0) {
  auto b = fs::enumerate_modes(kCube, k);
  return example1(n, 1.0, 1.0, fs::SpectralField::mode(b, {1, 1, 1}, 1.0),
                  fs::SpectralField::mode(b, {2, 1, 1}, 0.5), {{{0.0, 1.0}, {0.0, 1.0}}, p});
}

Outcome eigen_structure() {
  Outcome o;
  auto b = fs::enumerate_modes(kCube, 3);
  o.require(b->eigenvalue(0) == 3.0, "rho_1 = 3");
  double worst = 0.0;
  for (double alpha : {1.1, 1.5, 1.9}) {
    const auto phi = fs::SpectralField::mode(b, {1, 1, 1}, 1.0);
    const auto out = fs::apply_frac_power(phi, alpha / 2);
    double err = std::abs(out.coeffs[0] - std::pow(3.0, alpha / 2));
    for (std::size_t i = 1; i < out.size(); ++i) err = std::max(err, std::abs(out.coeffs[i]));
    worst = std::max(worst, err);
  }
  o.require(worst <= 1e-12, "coefficient error <= 1e-12");
  o.detail << "rho_1 = " << b->eigenvalue(0) << ", worst coefficient error " << sci(worst);
  return o;
}

Outcome poincare() {
  Outcome o;
  auto b = fs::enumerate_modes(kCube, 4);
  std::mt19937_64 rng(2024);
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_eq = 0.0;
  for (double alpha : {1.1, 1.5, 1.9}) {
    const double bound = std::pow(3.0, alpha / 2);
    std::normal_distribution<double> g;
    for (int t = 0; t < 1000; ++t) {
      fs::SpectralField f(b);
      for (double& c : f.coeffs) c = g(rng);
      if (t % 2 == 1) f.coeffs[0] *= 1e3;  // near the principal mode too
      worst_margin = std::min(worst_margin, fs::poincare_ratio(f, alpha) - bound);
    }
    const double eq = fs::poincare_ratio(fs::SpectralField::mode(b, {1, 1, 1}, 2.5), alpha);
    worst_eq = std::max(worst_eq, std::abs(eq - bound));
  }
  o.require(worst_margin >= -1e-12, "ratio >= 3^{alpha/2} - 1e-12");
  o.require(worst_eq <= 1e-12, "equality at phi_1 within 1e-12");
  o.detail << "3x1000 fields, min(ratio - bound) " << sci(worst_margin) << ", |ratio(phi_1) - bound| "
           << sci(worst_eq);
  return o;
}

Outcome sobolev() {
  using big = boost::multiprecision::cpp_bin_float_50;
  Outcome o;
  double worst = 0.0;
  for (double alpha : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    const big a = alpha;
    const big n = 3;
    const big bpi = boost::math::constants::pi<big>();
    using boost::math::tgamma;
    using boost::multiprecision::pow;
    const big num = 2 * pow(bpi, a / 2) * tgamma((n + a) / 2) * tgamma((2 - a) / 2) * pow(tgamma(n / 2), a / n);
    const big den = tgamma(a / 2) * tgamma((n - a) / 2) * pow(tgamma(n), a / 2);
    const double oracle = static_cast<double>(num / den);
    worst = std::max(worst, std::abs(fs::sobolev_constant(alpha, 3) - oracle) / oracle);
  }
  const double g = std::abs(fs::gamma_fn(0.5) - std::sqrt(pi));
  o.require(worst <= 1e-10, "relative error <= 1e-10");
  o.require(g <= 1e-12, "Gamma(1/2) = sqrt(pi) to 1e-12");
  o.detail << "5 alphas, worst relative error " << sci(worst) << ", |Gamma(1/2) - sqrt(pi)| " << sci(g);
  return o;
}

Outcome gradients() {
  Outcome o;
  auto b = fs::enumerate_modes(kCube, 3);
  auto grid = std::make_shared<const fs::QuadratureGrid>(kCube, 7);
  struct Case {
    std::string name;
    fs::ParamMap params;
    double tol;
    double scale;
  };
  const std::vector<Case> cases = {
      {"linear_coupled", {{"beta1", "1.0"}, {"beta2", "0.5"}, {"l1", "1,1,1:1.0; 2,1,1:0.3"}, {"l2", "1,2,1:0.5"}}, 1e-9, 1.0},
      {"quadratic_split", {{"beta1", "0.8"}, {"beta2", "1.2"}, {"kappa", "0.4"}, {"l1", "1,1,1:1.0"}}, 1e-9, 1.0},
      {"power_coupled", {{"a", "1.0"}, {"b", "1.0"}, {"s", "3"}}, 1e-6, 0.5},
      {"single_equation", {{"beta", "0.5"}, {"quartic", "1.0"}, {"l", "1,1,1:1.0"}}, 1e-6, 0.5},
  };
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& c : cases) {
    auto nl = fs::make_nonlinearity(c.name, c.params, b, 1.5);
    const fs::ActionProblem p(b, grid, 1.5, nl, kUnitBox);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto u = random_field(b, rng, c.scale);
      const auto v = random_field(b, rng, c.scale);
      const auto w = p.constant_control(std::vector<double>{unit(rng), unit(rng)});
      const auto r = fs::gradient_check(p, u, v, w, 1, 1000 + static_cast<std::uint64_t>(t));
      worst = std::max(worst, r.worst_relative_error);
    }
    o.require(worst < c.tol, c.name + " below " + sci(c.tol));
    o.detail << c.name << " " << sci(worst) << " (tol " << sci(c.tol) << ") ";
  }
  return o;
}

// criteria 5 and 6 share the same 20 solves
struct OracleStats {
  int draws = 0;
  int redraws = 0;
  double worst_distance = 0.0;
  double worst_seconds = 0.0;
  int converged = 0;
  int certified = 0;
  double worst_residual = 0.0;
  int probes_min = 1 << 30;
};

OracleStats oracle_runs() {
  OracleStats s;
  auto b = fs::enumerate_modes(kCube, 8);
  const double lam1 = std::pow(3.0, 0.75);
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (s.draws < 20) {
    const double beta1 = lam1 * (0.05 + 0.9 * unit(rng));
    const double beta2 = lam1 * (0.05 + 0.9 * unit(rng));
    const auto w = std::vector<double>{unit(rng), unit(rng)};
    auto p = example1(17, beta1, beta2, random_field(b, rng, 1.0), random_field(b, rng, 1.0));
    if (!p->report().passed()) {
      ++s.redraws;
      continue;
    }
    ++s.draws;
    const auto wf = p->constant_control(w);
    fs::SolverConfig cfg;
    const auto t0 = clk::now();
    const auto eg = fs::solve(*p, wf, cfg);
    const double secs = std::chrono::duration<double>(clk::now() - t0).count();
    fs::SolverConfig dc;
    dc.method = fs::SolverMethod::direct_linear;
    dc.certify_probes = 0;
    const auto d = fs::solve(*p, wf, dc);
    s.worst_distance = std::max(s.worst_distance, fs::state_distance(*p, eg.u, eg.v, d.u, d.v));
    s.worst_seconds = std::max(s.worst_seconds, secs);
    if (eg.converged) {
      ++s.converged;
      s.certified += eg.certificate.passed ? 1 : 0;
      s.probes_min = std::min(s.probes_min, eg.certificate.probes);
      s.worst_residual = std::max({s.worst_residual, eg.residual_u, eg.residual_v});
    }
  }
  return s;
}

Outcome oracle_equivalence(const OracleStats& s) {
  Outcome o;
  o.require(s.worst_distance < 1e-8, "H^{alpha/2} distance < 1e-8");
  o.require(s.worst_seconds < 1.0, "solve under 1 s at K = 8");
  o.require(s.converged == s.draws, "every extragradient solve converged");
  o.detail << s.draws << " draws (" << s.redraws << " rejected by validators), K = 8, N = 17, worst distance "
           << sci(s.worst_distance) << ", slowest solve " << sci(s.worst_seconds) << " s";
  return o;
}

Outcome certification(const OracleStats& s) {
  Outcome o;
  o.require(s.certified == s.converged, "every converged solve certified");
  o.require(s.probes_min == 100, "100 probes");
  o.require(s.worst_residual < 1e-10, "weak residual < 1e-10");
  o.detail << s.certified << "/" << s.converged << " certified with " << s.probes_min
           << " probes at tol 1e-8, worst residual " << sci(s.worst_residual);
  return o;
}

Outcome strong_dependence() {
  Outcome o;
  auto p = example1_forced(3, 7);
  fs::ControlSequenceSpec spec;
  spec.base = {0.5, 0.5};
  const auto rep = fs::run_dependence(*p, spec, {});
  const auto& rows = rep.rows;
  o.require(rows.size() == 20, "20 terms");
  bool tail = true;
  for (std::size_t k = rows.size() - 5; k < rows.size(); ++k) {
    tail = tail && rows[k].solution_distance <= rows[k - 1].solution_distance;
  }
  o.require(rows.back().solution_distance < 1e-6, "final distance < 1e-6");
  o.require(rows.back().value_gap < 1e-8, "|m_k - m_0| < 1e-8");
  o.require(tail, "nonincreasing over the last 5 terms");
  o.require(rep.verdicts.overall == fs::Verdict::pass, "harness verdict pass");
  o.detail << "decay " << spec.decay << ", A " << spec.amplitude << ", final distance "
           << sci(rows.back().solution_distance) << ", value gap " << sci(rows.back().value_gap);
  return o;
}

Outcome weak_dependence() {
  Outcome o;
  auto p = example1_forced(3, 31, 4.0);
  fs::ControlSequenceSpec spec;
  spec.mode = fs::SequenceMode::weak_lp;
  spec.base = {0.5, 0.5};
  const auto rep = fs::run_dependence(*p, spec, {});
  const double floor = 0.1 * spec.amplitude * std::pow(pi * pi * pi, 1.0 / 4.0);
  double min_control = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.rows) min_control = std::min(min_control, r.control_distance);
  o.require(rep.rows.size() == 20, "20 terms");
  o.require(min_control > floor, "||w_k - w_0||_p > 0.1 A vol^{1/p}");
  o.require(rep.rows.back().solution_distance < 1e-4, "solution distance < 1e-4 at k = 20");
  o.detail << "p = 4, A = " << spec.amplitude << ", min ||w_k - w_0|| " << sci(min_control) << " > " << sci(floor)
           << ", distance at k = 20 " << sci(rep.rows.back().solution_distance);
  return o;
}

Outcome optimal_control() {
  Outcome o;
  const auto cost = fs::example1_cost(2.0);
  fs::SolverConfig sc;
  {
    auto b = fs::enumerate_modes(kCube, 2);
    auto p = example1(7, 1.0, 1.0, fs::SpectralField(b), fs::SpectralField(b));
    const fs::ControlParametrization init(p->grid(), p->controls(), 2, std::vector<double>{0.5, 0.5});
    const auto r = fs::optimize_control(*p, cost, init, sc);
    bool zero = true;
    for (double x : r.w_star.values()) zero = zero && x == 0.0;
    o.require(r.cost < 1e-10 && zero, "homogeneous J* < 1e-10 with w* = 0");
    o.detail << "homogeneous J* " << sci(r.cost) << "; ";
  }
  {
    auto b = fs::enumerate_modes(kCube, 2);
    auto p = example1(7, 1.0, 1.0, fs::SpectralField(b), fs::SpectralField(b), {{{0.5, 1.0}, {0.5, 1.0}}, 2.0});
    const fs::ControlParametrization init(p->grid(), p->controls(), 2, std::vector<double>{0.75, 0.75});
    const auto r = fs::optimize_control(*p, cost, init, sc);
    const double err = std::abs(r.cost - 0.5 * pi * pi * pi);
    o.require(err <= 1e-8, "shifted box J* = 0.5 pi^3 +- 1e-8");
    o.detail << "shifted |J* - pi^3/2| " << sci(err) << "; ";
  }
  {
    auto b = fs::enumerate_modes(kCube, 4);
    auto p = example1(9, 1.0, 1.0, fs::SpectralField::mode(b, {1, 1, 1}, 1.0), fs::SpectralField(b));
    const fs::ControlParametrization init(p->grid(), p->controls(), 2, std::vector<double>{0.5, 0.5});
    const auto r = fs::optimize_control(*p, cost, init, sc);
    const auto base = fs::random_search_baseline(*p, cost, init, sc, 200, 1);
    o.require(r.cost <= base.best_cost, "forced J* <= 200-sample baseline");
    o.require(r.admissibility.passed, "forced triple admissible");
    o.detail << "forced J* " << sci(r.cost) << " vs baseline " << sci(base.best_cost);
  }
  return o;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

Outcome determinism() {
  Outcome o;
  namespace sfs = std::filesystem;
  const sfs::path root = sfs::temp_directory_path() / "fracsaddle_acceptance";
  sfs::remove_all(root);
  int files = 0;
  for (auto mode : {fs::RunMode::solve, fs::RunMode::stability, fs::RunMode::optimize}) {
    fs::ExperimentConfig c;
    c.mode = mode;
    c.seed = 42;
    c.solver.random_init = true;
    c.nonlinearity_params = {{"l1", "1,1,1:1.0"}, {"l2", "2,1,1:0.5"}};
    c.sequence.length = 8;
    c.baseline_samples = 20;
    c.optimizer.step_tol = 1e-2;
    c.cutoff = 2;
    c.grid = 5;
    const auto a = root / (fs::to_string(mode) + "_a");
    const auto b = root / (fs::to_string(mode) + "_b");
    std::ostringstream sink;
    const int ra = fs::run_experiment(c, a, sink, sink);
    const int rb = fs::run_experiment(c, b, sink, sink);
    o.require(ra == 0 && rb == 0, fs::to_string(mode) + " runs succeed");
    for (const auto& e : sfs::directory_iterator(a)) {
      if (e.path().filename() == "run_info.json") continue;
      ++files;
      o.require(fs::read_text(e.path()) == fs::read_text(b / e.path().filename()),
                e.path().filename().string() + " identical");
    }
    if (mode == fs::RunMode::solve) {
      const auto t = fs::read_csv(a / "fields.csv");
      const auto path = root / "rt.csv";
      fs::write_csv(path, t);
      const auto back = fs::read_csv(path);
      bool exact = back.rows.size() == t.rows.size();
      for (std::size_t i = 0; exact && i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < t.rows[i].size(); ++j) exact = exact && same_bits(back.rows[i][j], t.rows[i][j]);
      }
      o.require(exact, "csv round trip");
      auto p = fs::build_problem(c);
      const auto r = fs::parse_saddle_json(fs::read_text(a / "result.json"), p->basis());
      o.require(fs::saddle_json(r) == fs::read_text(a / "result.json"), "json round trip");
      bool fields = true;
      const auto col_u = t.column("u");
      for (std::size_t i = 0; i < r.u.size(); ++i) fields = fields && same_bits(r.u.coeffs[i], t.rows[i][col_u]);
      o.require(fields, "json and csv agree bit for bit");
    }
  }
  std::mt19937_64 rng(9);
  int bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const double x = std::bit_cast<double>(rng());
    if (!std::isnan(x) && !same_bits(fs::parse_double(fs::format_double(x)), x)) ++bad;
  }
  o.require(bad == 0, "format/parse of random bit patterns");
  o.detail << files << " data files byte-identical across repeated runs, 1e5 random doubles round-tripped ("
           << bad << " mismatches)";
  sfs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    const auto t0 = clk::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(clk::now() - t0).count();
    if (!o.passed) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  };
  report(1, "eigen-structure", eigen_structure);
  report(2, "fractional Poincare", poincare);
  report(3, "Sobolev constant", sobolev);
  report(4, "gradient correctness", gradients);
  OracleStats stats;
  report(5, "oracle equivalence", [&] {
    stats = oracle_runs();
    return oracle_equivalence(stats);
  });
  report(6, "saddle certification", [&] { return certification(stats); });
  report(7, "strong continuous dependence", strong_dependence);
  report(8, "weak continuous dependence contrast", weak_dependence);
  report(9, "optimal control sanity", optimal_control);
  report(10, "determinism and round trip", determinism);
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
