#include "fracsaddle/optimal_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/parallel.hpp"

namespace fracsaddle {

CostIntegrand example1_cost(double s) {
  if (!(s > 1.0)) throw ValidationError("example1_cost: s must exceed 1");
  CostIntegrand c;
  c.name = "example1_cost";
  c.growth = s;
  c.theta = [s](const CostPoint& pt) {
    double w2 = 0.0;
    for (double wi : pt.w) w2 += wi * wi;
    return abs_pow(pt.u, s) + abs_pow(pt.v, s) + w2;
  };
  // theta >= 0
  c.eta = [](const std::array<double, 3>&) { return 0.0; };
  c.eta_constant = 0.0;
  return c;
}

CostIntegrand example2_cost(double s) {
  if (!(s > 1.0)) throw ValidationError("example2_cost: s must exceed 1");
  CostIntegrand c;
  c.name = "example2_cost";
  c.growth = s;
  c.theta = [s](const CostPoint& pt) {
    double w2 = 0.0;
    for (double wi : pt.w) w2 += wi * wi;
    const double r = std::sqrt(pt.x[0] * pt.x[0] + pt.x[1] * pt.x[1] + pt.x[2] * pt.x[2]);
    const double w1 = pt.w.size() > 0 ? pt.w[0] : 0.0;
    const double w_2 = pt.w.size() > 1 ? pt.w[1] : 0.0;
    return abs_pow(pt.u, s) + pt.p * pt.p * w1 + pt.q * pt.q * w_2 - r * pt.p + w2;
  };
  return c;
}

namespace {

std::mutex& cost_registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, CostFactory>& cost_registry() {
  static std::map<std::string, CostFactory> r = [] {
    std::map<std::string, CostFactory> out;
    out["example1_cost"] = [](const std::map<std::string, std::string>& p) {
      return example1_cost(param_double(p, "s", 2.0));
    };
    out["example2_cost"] = [](const std::map<std::string, std::string>& p) {
      return example2_cost(param_double(p, "s", 3.0));
    };
    return out;
  }();
  return r;
}

}  // namespace

void register_cost(const std::string& name, CostFactory factory) {
  std::lock_guard lock(cost_registry_mutex());
  cost_registry()[name] = std::move(factory);
}

CostIntegrand make_cost(const std::string& name, const std::map<std::string, std::string>& params) {
  CostFactory f;
  {
    std::lock_guard lock(cost_registry_mutex());
    const auto it = cost_registry().find(name);
    if (it == cost_registry().end()) throw ValidationError("unknown cost '" + name + "'");
    f = it->second;
  }
  return f(params);
}

std::vector<std::string> registered_costs() {
  std::lock_guard lock(cost_registry_mutex());
  std::vector<std::string> out;
  for (const auto& [k, v] : cost_registry()) out.push_back(k);
  return out;
}

namespace {

struct HalfPowers {
  std::vector<double> u;
  std::vector<double> p;
  std::vector<double> v;
  std::vector<double> q;
};

HalfPowers sample_states(const ActionProblem& problem, const SpectralField& u, const SpectralField& v) {
  const auto& tr = problem.transform();
  const double sigma = problem.alpha() / 4.0;
  HalfPowers h;
  h.u = tr.synthesize(u);
  h.p = tr.synthesize(apply_frac_power(u, sigma));
  h.v = tr.synthesize(v);
  h.q = tr.synthesize(apply_frac_power(v, sigma));
  return h;
}

}  // namespace

double eval_cost(const ActionProblem& problem, const CostIntegrand& cost, const SpectralField& u,
                 const SpectralField& v, const ControlField& w) {
  if (!cost.theta) throw ValidationError("eval_cost: cost has no integrand");
  const auto& grid = *problem.grid();
  if (w.nodes() != grid.size()) throw ValidationError("eval_cost: control not on the problem grid");
  const HalfPowers h = sample_states(problem, u, v);
  const auto weights = grid.weights();
  double sum = 0.0;
  CostPoint pt;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    pt.x = grid.coords(j);
    pt.u = h.u[j];
    pt.p = h.p[j];
    pt.v = h.v[j];
    pt.q = h.q[j];
    pt.w = w.at(j);
    const double t = cost.theta(pt);
    if (!std::isfinite(t)) {
      throw NonFiniteError("eval_cost: non-finite integrand at node " + std::to_string(j));
    }
    sum += weights[j] * t;
  }
  return sum;
}

CostCheck check_cost_convexity(const CostIntegrand& cost, const ControlSet& controls,
                               const BoxDomain& domain, int samples, std::uint64_t seed) {
  CostCheck out;
  out.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int m = controls.dim();
  std::vector<double> w1(m), w2(m), wm(m);
  for (int t = 0; t < samples; ++t) {
    CostPoint pt;
    for (int d = 0; d < domain.dim; ++d) pt.x[d] = domain.side * unit(rng);
    pt.u = 4.0 * unit(rng) - 2.0;
    pt.p = 4.0 * unit(rng) - 2.0;
    pt.v = 4.0 * unit(rng) - 2.0;
    pt.q = 4.0 * unit(rng) - 2.0;
    for (int c = 0; c < m; ++c) {
      const auto [lo, hi] = controls.box[c];
      w1[c] = lo + (hi - lo) * unit(rng);
      w2[c] = lo + (hi - lo) * unit(rng);
      wm[c] = 0.5 * (w1[c] + w2[c]);
    }
    pt.w = w1;
    const double a = cost.theta(pt);
    pt.w = w2;
    const double b = cost.theta(pt);
    pt.w = wm;
    const double mid = cost.theta(pt);
    const double gap = mid - 0.5 * (a + b);
    out.worst_midpoint_gap = std::max(out.worst_midpoint_gap, gap);
    if (gap > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) out.convex_ok = false;
  }
  return out;
}

double a7_lower_bound(const ActionProblem& problem, const CostIntegrand& cost, const SpectralField& u,
                      const SpectralField& v, const ControlField& w) {
  if (!cost.eta) throw ValidationError("a7_lower_bound: cost declares no eta");
  const auto& grid = *problem.grid();
  const HalfPowers h = sample_states(problem, u, v);
  const auto weights = grid.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double wn = 0.0;
    for (double c : w.at(j)) wn += c * c;
    const double l1 = std::abs(h.u[j]) + std::abs(h.p[j]) + std::abs(h.v[j]) + std::abs(h.q[j]) +
                      std::sqrt(wn);
    sum += weights[j] * (cost.eta(grid.coords(j)) - cost.eta_constant * l1);
  }
  return sum;
}

ControlParametrization::ControlParametrization(GridPtr grid, ControlSet controls,
                                               int cells_per_axis, std::span<const double> fill)
    : grid_(std::move(grid)), controls_(std::move(controls)), cells_(cells_per_axis) {
  controls_.validate();
  if (cells_ < 1) throw ValidationError("parametrization: cells per axis must be >= 1");
  const int n = grid_->dim();
  const int m = controls_.dim();
  cell_count_ = 1;
  for (int d = 0; d < n; ++d) cell_count_ *= static_cast<std::size_t>(cells_);
  if (fill.size() == static_cast<std::size_t>(m)) {
    values_.resize(cell_count_ * m);
    for (std::size_t i = 0; i < cell_count_; ++i) {
      std::copy(fill.begin(), fill.end(), values_.begin() + static_cast<std::ptrdiff_t>(i * m));
    }
  } else if (fill.size() == cell_count_ * m) {
    values_.assign(fill.begin(), fill.end());
  } else {
    throw ValidationError("parametrization: expected " + std::to_string(m) + " or " +
                          std::to_string(cell_count_ * m) + " values");
  }
  assign(std::vector<double>(values_));

  // cells touching each node, from exact integer position j c / (N + 1)
  const int intervals = grid_->interior_nodes_per_axis() + 1;
  std::vector<std::vector<int>> axis_cells(static_cast<std::size_t>(intervals + 1));
  for (int j = 0; j <= intervals; ++j) {
    const int q = j * cells_ / intervals;
    const int r = j * cells_ % intervals;
    if (r == 0 && q > 0 && q < cells_) {
      axis_cells[j] = {q - 1, q};
    } else {
      axis_cells[j] = {std::min(q, cells_ - 1)};
    }
  }
  node_begin_.reserve(grid_->size() + 1);
  for (std::size_t node = 0; node < grid_->size(); ++node) {
    node_begin_.push_back(cells_of_.size());
    const auto idx = grid_->axis_indices(node);
    std::vector<std::uint32_t> acc{0};
    for (int d = 0; d < n; ++d) {
      std::vector<std::uint32_t> next;
      for (std::uint32_t base : acc) {
        for (int c : axis_cells[idx[d]]) {
          next.push_back(base * static_cast<std::uint32_t>(cells_) + static_cast<std::uint32_t>(c));
        }
      }
      acc.swap(next);
    }
    cells_of_.insert(cells_of_.end(), acc.begin(), acc.end());
  }
  node_begin_.push_back(cells_of_.size());
}

double ControlParametrization::value(std::size_t cell, int c) const {
  return values_.at(cell * static_cast<std::size_t>(components()) + static_cast<std::size_t>(c));
}

void ControlParametrization::assign(std::span<const double> values) {
  if (values.size() != values_.size()) throw ValidationError("parametrization: size mismatch");
  std::copy(values.begin(), values.end(), values_.begin());
  const auto m = static_cast<std::size_t>(components());
  for (std::size_t i = 0; i < cell_count_; ++i) {
    controls_.project(std::span<double>(values_).subspan(i * m, m));
  }
}

void ControlParametrization::set(std::size_t index, double value) {
  const auto m = static_cast<std::size_t>(components());
  const auto [lo, hi] = controls_.box.at(index % m);
  values_.at(index) = std::clamp(value, lo, hi);
}

ControlField ControlParametrization::to_field() const {
  const int m = components();
  ControlField f;
  f.components = m;
  f.values.assign(grid_->size() * static_cast<std::size_t>(m), 0.0);
  for (std::size_t node = 0; node < grid_->size(); ++node) {
    const std::size_t b = node_begin_[node];
    const std::size_t e = node_begin_[node + 1];
    for (int c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = b; i < e; ++i) s += values_[cells_of_[i] * m + c];
      const auto [lo, hi] = controls_.box[static_cast<std::size_t>(c)];
      f.values[node * m + c] = e - b == 1 ? s : std::clamp(s / static_cast<double>(e - b), lo, hi);
    }
  }
  return f;
}

std::string to_string(OptimizerMethod m) {
  return m == OptimizerMethod::pattern ? "pattern" : "projected_gradient";
}

OptimizerMethod parse_optimizer_method(const std::string& name) {
  if (name == "pattern") return OptimizerMethod::pattern;
  if (name == "projected_gradient") return OptimizerMethod::projected_gradient;
  throw ValidationError("unknown optimizer method '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(initial_step > 0.0 && initial_step <= 1.0)) {
    throw ValidationError("optimizer: initial_step must lie in (0,1]");
  }
  if (!(step_tol > 0.0)) throw ValidationError("optimizer: step_tol must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("optimizer: shrink must lie in (0,1)");
  if (max_evaluations < 1) throw ValidationError("optimizer: max_evaluations must be >= 1");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    throw ValidationError("optimizer: max_failure_fraction must lie in [0,1]");
  }
  if (!(fd_step > 0.0)) throw ValidationError("optimizer: fd_step must be positive");
  if (max_iters < 1) throw ValidationError("optimizer: max_iters must be >= 1");
}

AdmissibilityVerdict admissibility_check(const ActionProblem& problem, const SpectralField& u,
                                         const SpectralField& v, const ControlField& w, double tol) {
  AdmissibilityVerdict out;
  out.tol = tol;
  const auto r = weak_residual(problem, u, v, w);
  out.residual_u = r.norm_u;
  out.residual_v = r.norm_v;
  out.passed = r.norm_u < tol && r.norm_v < tol;
  return out;
}

CostEvaluation evaluate_control(const ActionProblem& problem, const CostIntegrand& cost,
                                const ControlParametrization& w, const SolverConfig& solver,
                                const SaddleResult* warm) {
  CostEvaluation out;
  try {
    const ControlField field = w.to_field();
    out.state = solve(problem, field, solver, warm);
    if (!out.state.converged) {
      out.reason = "saddle solve did not converge: " + out.state.status;
      return out;
    }
    out.cost = eval_cost(problem, cost, out.state.u, out.state.v, field);
    out.ok = true;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    out.reason = e.what();
  }
  return out;
}

namespace {

std::vector<double> widths(const ControlParametrization& w) {
  std::vector<double> out(w.size());
  const auto m = static_cast<std::size_t>(w.components());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [lo, hi] = w.controls().box[i % m];
    out[i] = hi - lo;
  }
  return out;
}

void check_preconditions(const ActionProblem& problem, const CostIntegrand& cost,
                         const OptimizerConfig& cfg) {
  cfg.validate();
  if (cfg.override_validation) return;
  if (!problem.report().passed()) {
    throw ValidationError("assumption check failed:\n" + problem.report().summary());
  }
  if (!cost.convex_in_w) throw ValidationError("cost '" + cost.name + "' is not declared convex in w");
  const auto cc = check_cost_convexity(cost, problem.controls(), problem.grid()->domain());
  if (!cc.convex_ok) {
    std::ostringstream os;
    os << "cost '" << cost.name << "' fails the midpoint convexity check (gap "
       << cc.worst_midpoint_gap << ")";
    throw ValidationError(os.str());
  }
}

void finalize(const ActionProblem& problem, const CostIntegrand& cost, const SolverConfig& solver,
              const CostEvaluation& inc, OptimalResult& res) {
  // certification is re-run at w* from the incumbent state
  SolverConfig s = solver;
  if (s.certify_probes == 0) s.certify_probes = 100;
  const ControlField field = res.w_star.to_field();
  res.state = solve(problem, field, s, &inc.state);
  res.cost = inc.cost;
  res.admissibility = admissibility_check(problem, res.state.u, res.state.v, field);
  (void)cost;
  if (!res.admissibility.passed && res.status == "converged") {
    res.status = "final state not admissible";
  }
}

OptimalResult pattern_search(const ActionProblem& problem, const CostIntegrand& cost,
                             const ControlParametrization& init, const SolverConfig& solver,
                             const OptimizerConfig& cfg) {
  OptimalResult res{init, {}, 0.0, {}, {}, {}, 0, 0, {}};
  SolverConfig inner = solver;
  inner.certify_probes = 0;
  const auto width = widths(init);
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  CostEvaluation inc = evaluate_control(problem, cost, init, inner);
  res.evaluations = 1;
  if (!inc.ok) throw SolverError("optimizer: initial control failed: " + inc.reason);
  ControlParametrization x = init;
  double step = cfg.initial_step;
  int iteration = 0;
  res.trace.push_back({0, 1, step, inc.cost, true, -1, 0});

  while (step >= cfg.step_tol && res.evaluations < cfg.max_evaluations) {
    ++iteration;
    std::vector<ControlParametrization> cands;
    std::vector<int> moves;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        ControlParametrization c = x;
        const double delta = (sgn == 0 ? 1.0 : -1.0) * step * width[i];
        c.set(i, x.values()[i] + delta);
        if (c.values()[i] == x.values()[i]) continue;
        cands.push_back(std::move(c));
        moves.push_back(static_cast<int>(2 * i) + sgn);
      }
    }
    int accepted = -1;
    int counted = 0;
    int failed = 0;
    CostEvaluation best;
    for (std::size_t start = 0; start < cands.size() && accepted < 0; start += threads) {
      const std::size_t stop = std::min(cands.size(), start + static_cast<std::size_t>(threads));
      std::vector<CostEvaluation> evals(stop - start);
      parallel_for(evals.size(), threads, [&](std::size_t i) {
        evals[i] = evaluate_control(problem, cost, cands[start + i], inner, &inc.state);
      });
      for (std::size_t i = 0; i < evals.size(); ++i) {
        ++counted;
        if (!evals[i].ok) {
          ++failed;
          res.rejected.push_back("iteration " + std::to_string(iteration) + " move " +
                                 std::to_string(moves[start + i]) + ": " + evals[i].reason);
          continue;
        }
        if (evals[i].cost < inc.cost) {
          accepted = static_cast<int>(start + i);
          best = std::move(evals[i]);
          break;
        }
      }
    }
    res.evaluations += counted;
    res.failures += failed;
    if (counted > 0 && static_cast<double>(failed) > cfg.max_failure_fraction * counted) {
      std::ostringstream os;
      os << "optimizer aborted: " << failed << " of " << counted
         << " candidate solves failed at iteration " << iteration;
      if (!res.rejected.empty()) os << " (last: " << res.rejected.back() << ")";
      throw SolverError(os.str());
    }
    if (accepted >= 0) {
      x = cands[static_cast<std::size_t>(accepted)];
      inc = std::move(best);
      res.trace.push_back({iteration, res.evaluations, step, inc.cost, true,
                           moves[static_cast<std::size_t>(accepted)], failed});
    } else {
      res.trace.push_back({iteration, res.evaluations, step, inc.cost, false, -1, failed});
      step *= cfg.shrink;
    }
  }
  res.status = step < cfg.step_tol ? "converged" : "max_evaluations reached";
  res.w_star = x;
  finalize(problem, cost, solver, inc, res);
  return res;
}

OptimalResult projected_gradient(const ActionProblem& problem, const CostIntegrand& cost,
                                 const ControlParametrization& init, const SolverConfig& solver,
                                 const OptimizerConfig& cfg) {
  OptimalResult res{init, {}, 0.0, {}, {}, {}, 0, 0, {}};
  SolverConfig inner = solver;
  inner.certify_probes = 0;
  const auto width = widths(init);
  const std::size_t n = init.size();

  CostEvaluation inc = evaluate_control(problem, cost, init, inner);
  res.evaluations = 1;
  if (!inc.ok) throw SolverError("optimizer: initial control failed: " + inc.reason);
  ControlParametrization x = init;
  double t = cfg.initial_step;
  res.trace.push_back({0, 1, t, inc.cost, true, -1, 0});
  res.status = "max_iters reached";

  for (int it = 1; it <= cfg.max_iters && res.evaluations < cfg.max_evaluations; ++it) {
    // gradient in variables scaled by the box width, one-sided at active bounds
    std::vector<double> g(n, 0.0);
    std::vector<CostEvaluation> plus(n), minus(n);
    std::vector<ControlParametrization> xp(n, x), xm(n, x);
    for (std::size_t i = 0; i < n; ++i) {
      xp[i].set(i, x.values()[i] + cfg.fd_step * width[i]);
      xm[i].set(i, x.values()[i] - cfg.fd_step * width[i]);
    }
    parallel_for(2 * n, cfg.threads, [&](std::size_t k) {
      const std::size_t i = k / 2;
      if (k % 2 == 0) {
        plus[i] = evaluate_control(problem, cost, xp[i], inner, &inc.state);
      } else {
        minus[i] = evaluate_control(problem, cost, xm[i], inner, &inc.state);
      }
    });
    res.evaluations += static_cast<int>(2 * n);
    int failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double hp = (xp[i].values()[i] - x.values()[i]) / width[i];
      const double hm = (x.values()[i] - xm[i].values()[i]) / width[i];
      const double fp = plus[i].ok ? plus[i].cost : inc.cost;
      const double fm = minus[i].ok ? minus[i].cost : inc.cost;
      if (!plus[i].ok || !minus[i].ok) ++failed;
      if (hp + hm > 0.0) g[i] = (fp - fm) / (hp + hm);
    }
    res.failures += failed;
    if (static_cast<double>(failed) > cfg.max_failure_fraction * static_cast<double>(n)) {
      throw SolverError("optimizer aborted: " + std::to_string(failed) +
                        " finite-difference probes failed at iteration " + std::to_string(it));
    }
    bool moved = false;
    while (t >= cfg.step_tol) {
      ControlParametrization y = x;
      double decrease = 0.0;
      double shift = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        y.set(i, x.values()[i] - t * g[i] * width[i]);
        const double dy = (x.values()[i] - y.values()[i]) / width[i];
        decrease += g[i] * dy;
        shift = std::max(shift, std::abs(dy));
      }
      if (shift < cfg.step_tol) break;
      CostEvaluation e = evaluate_control(problem, cost, y, inner, &inc.state);
      ++res.evaluations;
      if (!e.ok) {
        ++res.failures;
        res.rejected.push_back("iteration " + std::to_string(it) + ": " + e.reason);
      } else if (e.cost < inc.cost - 1e-4 * decrease) {
        x = y;
        inc = std::move(e);
        moved = true;
        res.trace.push_back({it, res.evaluations, t, inc.cost, true, -1, failed});
        t = std::min(1.0, t / cfg.shrink);
        break;
      }
      t *= cfg.shrink;
    }
    if (!moved) {
      res.trace.push_back({it, res.evaluations, t, inc.cost, false, -1, failed});
      res.status = "converged";
      break;
    }
  }
  res.w_star = x;
  finalize(problem, cost, solver, inc, res);
  return res;
}

}  // namespace

OptimalResult optimize_control(const ActionProblem& problem, const CostIntegrand& cost,
                               const ControlParametrization& init, const SolverConfig& solver,
                               const OptimizerConfig& cfg) {
  check_preconditions(problem, cost, cfg);
  if (init.grid() != problem.grid()) {
    throw ValidationError("optimizer: parametrization lives on a different grid");
  }
  if (cfg.method == OptimizerMethod::pattern) return pattern_search(problem, cost, init, solver, cfg);
  return projected_gradient(problem, cost, init, solver, cfg);
}

BaselineResult random_search_baseline(const ActionProblem& problem, const CostIntegrand& cost,
                                      const ControlParametrization& shape,
                                      const SolverConfig& solver, int samples, std::uint64_t seed,
                                      int threads) {
  if (samples < 1) throw ValidationError("baseline: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto m = static_cast<std::size_t>(shape.components());
  std::vector<ControlParametrization> draws;
  draws.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    std::vector<double> vals(shape.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const auto [lo, hi] = shape.controls().box[i % m];
      vals[i] = lo + (hi - lo) * unit(rng);
    }
    ControlParametrization c = shape;
    c.assign(vals);
    draws.push_back(std::move(c));
  }
  SolverConfig inner = solver;
  inner.certify_probes = 0;
  std::vector<CostEvaluation> evals(draws.size());
  parallel_for(draws.size(), threads,
               [&](std::size_t i) { evals[i] = evaluate_control(problem, cost, draws[i], inner); });
  BaselineResult out;
  out.samples = samples;
  out.best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!evals[i].ok) {
      ++out.failures;
      continue;
    }
    if (evals[i].cost < out.best_cost) {
      out.best_cost = evals[i].cost;
      out.best_values = draws[i].values();
    }
  }
  return out;
}

}  // namespace fracsaddle
