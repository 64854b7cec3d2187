#include "fracsaddle/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/parallel.hpp"

namespace fracsaddle {

std::string to_string(SequenceMode m) {
  switch (m) {
    case SequenceMode::strong_lp:
      return "strong_lp";
    case SequenceMode::weak_lp:
      return "weak_lp";
    case SequenceMode::weak_star:
      return "weak_star";
  }
  return "?";
}

SequenceMode parse_sequence_mode(const std::string& name) {
  if (name == "strong_lp" || name == "strong") return SequenceMode::strong_lp;
  if (name == "weak_lp" || name == "weak") return SequenceMode::weak_lp;
  if (name == "weak_star") return SequenceMode::weak_star;
  throw ValidationError("unknown sequence mode '" + name + "'");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

void ControlSequenceSpec::validate() const {
  if (length < 1) throw ValidationError("sequence: length must be >= 1");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ValidationError("sequence: amplitude must be finite and >= 0");
  }
  if (!(decay > 0.0 && decay < 1.0)) throw ValidationError("sequence: decay must lie in (0,1)");
  if (!(frequency_scale > 0.0)) throw ValidationError("sequence: frequency_scale must be positive");
  if (pattern != "sin" && pattern != "square") {
    throw ValidationError("sequence: pattern must be 'sin' or 'square'");
  }
}

std::array<std::vector<double>, kTestFunctions> test_functions(const QuadratureGrid& grid) {
  const int n = grid.dim();
  const double side = grid.domain().side;
  const double norm = std::pow(2.0 / side, n / 2.0);
  const double sigma = side / 4.0;
  std::array<std::vector<double>, kTestFunctions> out;
  for (auto& f : out) f.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto x = grid.coords(j);
    double p1 = norm;
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
      p1 *= std::sin(std::numbers::pi * x[d] / side);
      r2 += (x[d] - side / 2) * (x[d] - side / 2);
    }
    const double s1 = std::sin(std::numbers::pi * x[0] / side);
    out[0][j] = 1.0;
    out[1][j] = p1;
    out[2][j] = x[0] / side;
    out[3][j] = s1 == 0.0 ? 0.0 : p1 / s1 * std::sin(2.0 * std::numbers::pi * x[0] / side);
    out[4][j] = std::exp(-r2 / (2 * sigma * sigma));
  }
  return out;
}

namespace {

double sequence_exponent(const ActionProblem& problem, SequenceMode mode) {
  const double p = problem.controls().p;
  switch (mode) {
    case SequenceMode::strong_lp:
      return p;
    case SequenceMode::weak_lp:
      if (!std::isfinite(p)) {
        throw ValidationError("weak_lp needs a finite p; use weak_star for L^inf");
      }
      return p;
    case SequenceMode::weak_star:
      return std::numeric_limits<double>::infinity();
  }
  return p;
}

}  // namespace

ControlSequence make_sequence(const ActionProblem& problem, const ControlSequenceSpec& spec) {
  const auto& cs = problem.controls();
  const std::vector<double> w0 = spec.base.empty() ? cs.center() : spec.base;
  if (static_cast<int>(w0.size()) != cs.dim()) {
    throw ValidationError("sequence: base control has " + std::to_string(w0.size()) +
                          " components, expected " + std::to_string(cs.dim()));
  }
  if (!cs.contains(w0)) throw ValidationError("sequence: base control is outside M");
  return make_sequence(problem, spec, ControlField::constant(*problem.grid(), w0));
}

ControlSequence make_sequence(const ActionProblem& problem, const ControlSequenceSpec& spec,
                              const ControlField& base) {
  spec.validate();
  const auto& grid = *problem.grid();
  const auto& cs = problem.controls();
  const int m = cs.dim();
  problem.check_control(base);

  const bool weak = spec.mode != SequenceMode::strong_lp;
  if (weak) {
    // sin(omega x1) phi_a phi_b carries x1 frequencies up to omega + 2K; the grid
    // represents sine frequencies up to N without aliasing
    const double top = spec.frequency_scale * spec.length + 2.0 * problem.basis()->cutoff();
    const int resolved = grid.interior_nodes_per_axis();
    if (!(top <= resolved)) {
      std::ostringstream os;
      os << "sequence: top frequency " << top << " exceeds the grid resolution " << resolved
         << "; raise grid N";
      throw ValidationError(os.str());
    }
  }

  ControlSequence seq;
  seq.p = sequence_exponent(problem, spec.mode);
  seq.base = base;
  const auto tests = test_functions(grid);
  const double side = grid.domain().side;
  const std::size_t nodes = grid.size();
  const auto weights = grid.weights();

  std::vector<double> shape(nodes);
  for (int k = 1; k <= spec.length; ++k) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const auto x = grid.coords(j);
      double s = 1.0;
      if (!weak) {
        for (int d = 0; d < grid.dim(); ++d) s *= std::sin(std::numbers::pi * x[d] / side);
        s *= spec.amplitude * std::pow(spec.decay, k);
      } else {
        s = std::sin(spec.frequency_scale * k * std::numbers::pi * x[0] / side);
        if (spec.pattern == "square") s = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
        s *= spec.amplitude;
      }
      shape[j] = s;
    }
    ControlField w = seq.base;
    std::size_t clipped = 0;
    for (std::size_t j = 0; j < nodes; ++j) {
      auto cell = std::span<double>(w.values).subspan(j * m, m);
      for (int c = 0; c < m; ++c) cell[c] += shape[j];
      cs.project(cell);
      for (int c = 0; c < m; ++c) {
        if (cell[c] != base.values[j * m + c] + shape[j]) ++clipped;
      }
    }
    std::vector<double> diff(w.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = w.values[i] - seq.base.values[i];
    std::array<double, kTestFunctions> pair{};
    for (std::size_t t = 0; t < kTestFunctions; ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < nodes; ++j) {
        double local = 0.0;
        for (int c = 0; c < m; ++c) local += diff[j * m + c];
        s += weights[j] * local * tests[t][j];
      }
      pair[t] = s;
    }
    seq.distance.push_back(lp_norm_on_grid(diff, m, grid, seq.p));
    seq.pairings.push_back(pair);
    seq.clipped_fraction.push_back(static_cast<double>(clipped) /
                                   static_cast<double>(nodes * static_cast<std::size_t>(m)));
    seq.terms.push_back(std::move(w));
  }

  const bool all_zero =
      std::all_of(seq.distance.begin(), seq.distance.end(), [](double d) { return d == 0.0; });
  if (!weak && !all_zero) {
    for (std::size_t k = 1; k < seq.distance.size(); ++k) {
      if (!(seq.distance[k] < seq.distance[k - 1])) {
        seq.issues.push_back("clipping destroys the strict decay at term " + std::to_string(k + 1));
        break;
      }
    }
  }
  const double worst_clip =
      *std::max_element(seq.clipped_fraction.begin(), seq.clipped_fraction.end());
  if (weak && worst_clip > 0.0) {
    std::ostringstream os;
    os << "clipping onto M changed up to " << 100.0 * worst_clip
       << "% of node values; the perturbation is no longer exactly zero-mean";
    seq.issues.push_back(os.str());
  }
  return seq;
}

namespace {

Verdict combine(std::initializer_list<Verdict> vs) {
  bool unsure = false;
  for (Verdict v : vs) {
    if (v == Verdict::fail) return Verdict::fail;
    if (v == Verdict::inconclusive) unsure = true;
  }
  return unsure ? Verdict::inconclusive : Verdict::pass;
}

bool tail_nonincreasing(const std::vector<DependenceRow>& rows, int tail,
                        double DependenceRow::*field) {
  const std::size_t n = rows.size();
  const std::size_t start = n > static_cast<std::size_t>(tail) ? n - tail : 0;
  for (std::size_t k = start + 1; k < n; ++k) {
    if (rows[k].*field > rows[k - 1].*field) return false;
  }
  return true;
}

}  // namespace

DependenceVerdicts assess(const DependenceReport& report) {
  DependenceVerdicts v;
  const auto& rows = report.rows;
  const auto& th = report.thresholds;
  const bool weak = report.spec.mode != SequenceMode::strong_lp;
  const bool solved = report.base_converged && !rows.empty() &&
                      std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.converged; });
  if (!solved) v.notes.push_back("at least one solve did not converge");

  if (solved) {
    const auto& last = rows.back();
    if (!weak) {
      const bool small = last.solution_distance < th.solution_tol;
      const bool mono = tail_nonincreasing(rows, th.monotone_tail, &DependenceRow::solution_distance);
      v.strong_dependence = small && mono ? Verdict::pass : Verdict::fail;
      if (!small) v.notes.push_back("final solution distance above tolerance");
      if (!mono) v.notes.push_back("solution distance increases in the tail");
    }
    const bool vsmall = last.value_gap < (weak ? th.weak_solution_tol : th.value_tol);
    const bool vmono = weak || tail_nonincreasing(rows, th.monotone_tail, &DependenceRow::value_gap);
    v.value_continuity = vsmall && vmono ? Verdict::pass : Verdict::fail;
    if (!vsmall) v.notes.push_back("final minimax gap above tolerance");
    if (!vmono) v.notes.push_back("minimax gap increases in the tail");

    if (weak) {
      const double floor = th.contrast_factor * report.spec.amplitude *
                           (std::isfinite(report.p) ? std::pow(report.volume, 1.0 / report.p) : 1.0);
      double least = std::numeric_limits<double>::infinity();
      for (const auto& r : rows) least = std::min(least, r.control_distance);
      const bool bounded_away = least > floor;
      const bool converges = last.solution_distance < th.weak_solution_tol;
      v.weak_contrast = bounded_away && converges ? Verdict::pass : Verdict::fail;
      if (!bounded_away) v.notes.push_back("control distance falls below the contrast floor");
      if (!converges) v.notes.push_back("final solution distance above the weak tolerance");
    }
  } else {
    v.notes.push_back("dependence verdicts withheld");
  }

  if (weak && !rows.empty()) {
    const std::size_t w = std::min<std::size_t>(5, rows.size());
    double head = 0.0;
    double tail = 0.0;
    for (std::size_t k = 0; k < w; ++k) head = std::max(head, rows[k].max_pairing);
    for (std::size_t k = rows.size() - w; k < rows.size(); ++k) tail = std::max(tail, rows[k].max_pairing);
    if (rows.size() < 2 * w) {
      v.weak_null_evidence = Verdict::inconclusive;
    } else {
      v.weak_null_evidence = tail <= 0.5 * head || tail < 1e-14 ? Verdict::pass : Verdict::fail;
    }
  }

  const auto& inc = report.inclusion;
  if (!inc.attempted) {
    v.set_inclusion = Verdict::inconclusive;
  } else {
    v.set_inclusion = inc.converged && inc.certified && inc.residual < th.membership_tol
                          ? Verdict::pass
                          : Verdict::fail;
  }

  if (weak) {
    v.overall = combine({v.weak_contrast, v.set_inclusion});
  } else {
    v.overall = combine({v.strong_dependence, v.value_continuity, v.set_inclusion});
  }
  if (!report.issues.empty()) v.notes.insert(v.notes.end(), report.issues.begin(), report.issues.end());
  return v;
}

DependenceReport run_dependence(const ActionProblem& problem, const ControlSequenceSpec& spec,
                                const SolverConfig& cfg, const DependenceThresholds& thresholds,
                                int threads) {
  cfg.validate();
  if (spec.mode != SequenceMode::strong_lp) {
    if (!problem.nonlinearity().has_split()) {
      throw ValidationError("weak control convergence needs a nonlinearity linear in the control");
    }
    if (!problem.report().split_passed() && !cfg.override_validation) {
      throw ValidationError("split hypotheses failed:\n" + problem.report().summary());
    }
  }
  const ControlSequence seq = make_sequence(problem, spec);

  DependenceReport rep;
  rep.spec = spec;
  rep.thresholds = thresholds;
  rep.p = seq.p;
  rep.volume = problem.grid()->domain().volume();
  rep.issues = seq.issues;

  const std::size_t count = seq.terms.size() + 1;
  std::vector<SaddleResult> results(count);
  std::vector<std::string> errors(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const ControlField& w = i == 0 ? seq.base : seq.terms[i - 1];
    try {
      results[i] = solve(problem, w, cfg);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  const SaddleResult& base = results[0];
  rep.base_converged = errors[0].empty() && base.converged;
  rep.base_action = base.action;
  for (std::size_t k = 1; k < count; ++k) {
    DependenceRow row;
    row.k = static_cast<int>(k);
    row.control_distance = seq.distance[k - 1];
    for (double pv : seq.pairings[k - 1]) row.max_pairing = std::max(row.max_pairing, std::abs(pv));
    if (!errors[k].empty()) {
      row.status = errors[k];
    } else {
      const auto& r = results[k];
      row.converged = r.converged;
      row.certified = r.certificate.passed;
      row.status = r.status;
      row.action = r.action;
      row.residual = std::hypot(r.residual_u, r.residual_v);
      if (errors[0].empty()) {
        row.solution_distance = state_distance(problem, r.u, r.v, base.u, base.v);
        row.value_gap = std::abs(r.action - base.action);
      }
    }
    rep.rows.push_back(std::move(row));
  }

  // upper-limit proxy: restart at w0 from the last term and check membership in S_0
  const SaddleResult& last = results.back();
  if (errors.back().empty() && errors[0].empty()) {
    SolverConfig c = cfg;
    if (c.certify_probes == 0) c.certify_probes = 100;
    try {
      const SaddleResult again = solve(problem, seq.base, c, &last);
      rep.inclusion.attempted = true;
      rep.inclusion.converged = again.converged;
      rep.inclusion.certified = again.certificate.passed;
      rep.inclusion.residual = std::hypot(again.residual_u, again.residual_v);
      rep.inclusion.distance_to_base = state_distance(problem, again.u, again.v, base.u, base.v);
      rep.inclusion.iterations = again.iterations;
    } catch (const std::exception& e) {
      rep.inclusion.attempted = true;
      rep.issues.push_back(std::string("restart at w0 failed: ") + e.what());
    }
  }
  if (cfg.override_validation && !problem.report().passed()) {
    rep.issues.push_back("assumption check failed and was overridden; selection continuity is reported, not asserted");
  }
  rep.base = base;
  rep.last = last;
  rep.verdicts = assess(rep);
  return rep;
}

ClusterVerdict cluster_check(const std::vector<SaddleResult>& solutions, const SaddleResult& candidate,
                             const ActionProblem& problem, const ControlField& w0, double eps,
                             double tol) {
  ClusterVerdict out;
  if (solutions.empty()) {
    out.detail = "empty solution list";
    return out;
  }
  const std::size_t tail = std::min<std::size_t>(3, solutions.size());
  out.min_distance = std::numeric_limits<double>::infinity();
  bool tail_converged = true;
  for (std::size_t i = solutions.size(); i-- > 0;) {
    const auto& s = solutions[i];
    const double d = state_distance(problem, s.u, s.v, candidate.u, candidate.v);
    out.min_distance = std::min(out.min_distance, d);
    if (solutions.size() - i <= tail) {
      if (!s.converged) tail_converged = false;
      if (d < eps && out.close_tail == static_cast<int>(solutions.size() - i - 1)) ++out.close_tail;
    }
  }
  out.residual = weak_residual(problem, candidate.u, candidate.v, w0).norm();
  const bool clusters = out.close_tail == static_cast<int>(tail);
  std::ostringstream os;
  os << "tail " << out.close_tail << "/" << tail << " within " << eps << ", residual at w0 "
     << out.residual;
  out.detail = os.str();
  if (!tail_converged) {
    out.verdict = Verdict::inconclusive;
    out.detail += "; unconverged terms in the tail";
  } else if (clusters && out.residual < tol) {
    out.verdict = Verdict::pass;
  } else if (!clusters || out.residual >= 100.0 * tol) {
    out.verdict = Verdict::fail;
  } else {
    out.verdict = Verdict::inconclusive;
  }
  return out;
}

}  // namespace fracsaddle
