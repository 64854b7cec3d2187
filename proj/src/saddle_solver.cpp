#include "fracsaddle/saddle_solver.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fracsaddle/errors.hpp"

namespace fracsaddle {

std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::extragradient:
      return "extragradient";
    case SolverMethod::direct_linear:
      return "direct_linear";
    case SolverMethod::min_only:
      return "min_only";
  }
  return "unknown";
}

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "extragradient") return SolverMethod::extragradient;
  if (name == "direct_linear") return SolverMethod::direct_linear;
  if (name == "min_only") return SolverMethod::min_only;
  throw ValidationError("unknown solver method '" + name + "'");
}

void SolverConfig::validate() const {
  if (!(step > 0.0)) throw ValidationError("solver: step must be positive");
  if (!(tol > 0.0)) throw ValidationError("solver: tol must be positive");
  if (max_iters < 1) throw ValidationError("solver: max_iters must be >= 1");
  if (!(backtrack > 0.0 && backtrack < 1.0)) {
    throw ValidationError("solver: backtrack factor must lie in (0,1)");
  }
  if (!(lipschitz_factor > 0.0 && lipschitz_factor < 1.0)) {
    throw ValidationError("solver: lipschitz_factor must lie in (0,1)");
  }
  if (certify_probes < 0) throw ValidationError("solver: certify_probes must be >= 0");
}

namespace {

void require_valid(const ActionProblem& problem, const SolverConfig& cfg) {
  cfg.validate();
  if (!problem.report().passed() && !cfg.override_validation) {
    throw ValidationError("assumption check failed:\n" + problem.report().summary());
  }
}

struct State {
  std::vector<double> u;
  std::vector<double> v;
};

State initial_state(const ActionProblem& problem, const SolverConfig& cfg,
                    const SaddleResult* warm) {
  const std::size_t n = problem.basis()->size();
  State z{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (warm != nullptr && warm->u.size() == n && warm->v.size() == n) {
    z.u = warm->u.coeffs;
    z.v = warm->v.coeffs;
  } else if (cfg.random_init) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto sym = problem.symbol();
    for (std::size_t i = 0; i < n; ++i) {
      z.u[i] = cfg.init_scale * gauss(rng) / sym[i];
      z.v[i] = cfg.init_scale * gauss(rng) / sym[i];
    }
  }
  if (!problem.nonlinearity().traits().depends_on_u) std::fill(z.u.begin(), z.u.end(), 0.0);
  return z;
}

void finish(const ActionProblem& problem, const ControlField& w, const SolverConfig& cfg,
            const State& z, const Evaluation& ev, SaddleResult& res) {
  res.u = SpectralField(problem.basis(), z.u);
  res.v = SpectralField(problem.basis(), z.v);
  res.action = ev.action;
  res.residual_u = ev.residual.norm_u;
  res.residual_v = ev.residual.norm_v;
  res.converged = res.residual_u < cfg.tol && res.residual_v < cfg.tol;
  if (res.converged && cfg.certify_probes > 0) {
    res.certificate =
        certify_saddle(problem, w, res.u, res.v, cfg.certify_probes, cfg.certify_tol, cfg.seed + 7);
  }
}

// Update direction in the preconditioned metric: z <- z - tau d(z).
void direction(const ActionProblem& problem, const WeakResidual& r, State& d) {
  const auto sym = problem.symbol();
  d.u.resize(sym.size());
  d.v.resize(sym.size());
  for (std::size_t i = 0; i < sym.size(); ++i) {
    d.u[i] = -r.r_u[i] / sym[i];
    d.v[i] = r.r_v[i] / sym[i];
  }
}

double h_norm_diff(const ActionProblem& problem, const State& a, const State& b) {
  const auto sym = problem.symbol();
  double s = 0.0;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const double du = a.u[i] - b.u[i];
    const double dv = a.v[i] - b.v[i];
    s += sym[i] * (du * du + dv * dv);
  }
  return std::sqrt(s);
}

}  // namespace

SaddleResult solve(const ActionProblem& problem, const ControlField& w, const SolverConfig& cfg,
                   const SaddleResult* warm) {
  switch (cfg.method) {
    case SolverMethod::extragradient:
      return solve_saddle(problem, w, cfg, warm);
    case SolverMethod::direct_linear:
      return solve_direct_linear(problem, w, cfg);
    case SolverMethod::min_only:
      return solve_min_only(problem, w, cfg, warm);
  }
  throw SolverError("unknown solver method");
}

SaddleResult solve_saddle(const ActionProblem& problem, const ControlField& w,
                          const SolverConfig& cfg, const SaddleResult* warm) {
  require_valid(problem, cfg);
  problem.check_control(w);

  SaddleResult res;
  res.method = SolverMethod::extragradient;
  State z = initial_state(problem, cfg, warm);
  Evaluation ev = evaluate(problem, z.u, z.v, w);

  State best = z;
  Evaluation best_ev = ev;
  double tau = cfg.step;
  int rising = 0;
  State d;
  State d_half;
  State z_half;
  State z_next;
  const std::size_t n = z.u.size();

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    if (cfg.record_log) {
      res.log.push_back({iter, ev.action, ev.residual.norm_u, ev.residual.norm_v, tau});
    }
    if (ev.residual.norm_u < cfg.tol && ev.residual.norm_v < cfg.tol) break;

    direction(problem, ev.residual, d);
    const double d_norm = std::hypot(ev.residual.norm_u, ev.residual.norm_v);
    bool accepted = false;
    while (!accepted) {
      if (tau < 1e-14) {
        res.status = "step size collapsed";
        break;
      }
      z_half.u.resize(n);
      z_half.v.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        z_half.u[i] = z.u[i] - tau * d.u[i];
        z_half.v[i] = z.v[i] - tau * d.v[i];
      }
      try {
        const Evaluation half = evaluate(problem, z_half.u, z_half.v, w);
        direction(problem, half.residual, d_half);
      } catch (const NonFiniteError&) {
        tau *= cfg.backtrack;
        continue;
      }
      if (h_norm_diff(problem, d_half, d) <= cfg.lipschitz_factor * d_norm) {
        accepted = true;
      } else {
        tau *= cfg.backtrack;
      }
    }
    if (!accepted) break;

    z_next.u.resize(n);
    z_next.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      z_next.u[i] = z.u[i] - tau * d_half.u[i];
      z_next.v[i] = z.v[i] - tau * d_half.v[i];
    }
    Evaluation next_ev;
    try {
      next_ev = evaluate(problem, z_next.u, z_next.v, w);
    } catch (const NonFiniteError&) {
      tau *= cfg.backtrack;
      continue;
    }
    rising = next_ev.residual.norm() > ev.residual.norm() ? rising + 1 : 0;
    z.u.swap(z_next.u);
    z.v.swap(z_next.v);
    ev = std::move(next_ev);
    if (ev.residual.norm() < best_ev.residual.norm()) {
      best = z;
      best_ev = ev;
    }
    if (rising >= cfg.divergence_window) {
      res.status = "diverged: residual grew for " + std::to_string(rising) + " iterations";
      break;
    }
  }
  res.iterations = iter;

  const bool done = ev.residual.norm_u < cfg.tol && ev.residual.norm_v < cfg.tol;
  if (done) {
    finish(problem, w, cfg, z, ev, res);
    res.status = "converged";
  } else {
    finish(problem, w, cfg, best, best_ev, res);
    if (res.status.empty()) res.status = "max_iters reached";
  }
  return res;
}

SaddleResult solve_direct_linear(const ActionProblem& problem, const ControlField& w,
                                 const SolverConfig& cfg) {
  const auto* lin = dynamic_cast<const LinearCoupled*>(&problem.nonlinearity());
  if (lin == nullptr) throw SolverError("direct_linear: nonlinearity is not linear_coupled");
  std::vector<double> wc;
  if (!w.is_constant(&wc)) throw SolverError("direct_linear: control must be spatially constant");
  problem.check_control(w);
  cfg.validate();

  const double c = wc[0] + wc[1];
  const auto sym = problem.symbol();
  const auto& basis = *problem.basis();
  State z{std::vector<double>(sym.size()), std::vector<double>(sym.size())};
  for (std::size_t k = 0; k < sym.size(); ++k) {
    // [b1 - lam, c; c, lam - b2] (u, v) = -(l1, l2)
    const double a11 = lin->beta1() - sym[k];
    const double a22 = sym[k] - lin->beta2();
    const double det = a11 * a22 - c * c;
    if (std::abs(det) < 1e-14) {
      const auto& m = basis.mode(k);
      std::ostringstream os;
      os << "direct_linear: singular 2x2 block at mode (" << m[0];
      for (int d = 1; d < basis.dim(); ++d) os << "," << m[d];
      os << "), det=" << det;
      throw SolverError(os.str());
    }
    const double r1 = -lin->l1().coeffs[k];
    const double r2 = -lin->l2().coeffs[k];
    z.u[k] = (r1 * a22 - c * r2) / det;
    z.v[k] = (a11 * r2 - c * r1) / det;
  }
  SaddleResult res;
  res.method = SolverMethod::direct_linear;
  const Evaluation ev = evaluate(problem, z.u, z.v, w);
  SolverConfig c2 = cfg;
  c2.tol = std::max(cfg.tol, 1e-12);
  finish(problem, w, c2, z, ev, res);
  res.iterations = 1;
  res.status = res.converged ? "converged" : "direct solve residual above tolerance";
  return res;
}

SaddleResult solve_min_only(const ActionProblem& problem, const ControlField& w,
                            const SolverConfig& cfg, const SaddleResult* warm) {
  if (problem.nonlinearity().traits().depends_on_u) {
    throw SolverError("min_only: nonlinearity depends on u");
  }
  require_valid(problem, cfg);
  problem.check_control(w);

  SaddleResult res;
  res.method = SolverMethod::min_only;
  State z = initial_state(problem, cfg, warm);
  Evaluation ev = evaluate(problem, z.u, z.v, w);
  const auto sym = problem.symbol();
  const std::size_t n = sym.size();
  std::vector<double> trial(n);
  double tau = cfg.step;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    if (cfg.record_log) {
      res.log.push_back({iter, ev.action, ev.residual.norm_u, ev.residual.norm_v, tau});
    }
    if (ev.residual.norm_v < cfg.tol) break;
    const double g2 = ev.residual.norm_v * ev.residual.norm_v;
    bool accepted = false;
    while (tau >= 1e-14) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = z.v[i] - tau * ev.residual.r_v[i] / sym[i];
      Evaluation t;
      try {
        t = evaluate(problem, z.u, trial, w);
      } catch (const NonFiniteError&) {
        tau *= cfg.backtrack;
        continue;
      }
      const double decrease = ev.action - t.action;
      const bool armijo = decrease >= 1e-4 * tau * g2;
      // near convergence the action change is below round-off; fall back to the residual
      const bool roundoff = std::abs(decrease) < 1e-13 * (1.0 + std::abs(ev.action)) &&
                            t.residual.norm_v < ev.residual.norm_v;
      if (armijo || roundoff) {
        z.v.swap(trial);
        ev = std::move(t);
        accepted = true;
        tau = std::min(cfg.step, tau / cfg.backtrack);
        break;
      }
      tau *= cfg.backtrack;
    }
    if (!accepted) {
      res.status = "line search failed";
      break;
    }
  }
  res.iterations = iter;
  finish(problem, w, cfg, z, ev, res);
  if (res.converged) {
    res.status = "converged";
  } else if (res.status.empty()) {
    res.status = "max_iters reached";
  }
  return res;
}

SaddleCertificate certify_saddle(const ActionProblem& problem, const ControlField& w,
                                 const SpectralField& u, const SpectralField& v, int probes,
                                 double rel_tol, std::uint64_t seed) {
  if (probes < 1) throw ValidationError("certify_saddle: probes must be >= 1");
  SaddleCertificate cert;
  cert.probes = probes;
  const double f0 = eval_action(problem, u, v, w);
  cert.tol = rel_tol * (1.0 + std::abs(f0));
  const auto sym = problem.symbol();
  const std::size_t n = sym.size();
  const bool vary_u = problem.nonlinearity().traits().depends_on_u;
  const double scale =
      1.0 + std::sqrt(h_alpha_inner(u, u, problem.alpha()) + h_alpha_inner(v, v, problem.alpha()));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-4.0, 0.0);
  cert.worst_u_margin = std::numeric_limits<double>::infinity();
  cert.worst_v_margin = std::numeric_limits<double>::infinity();

  for (int p = 0; p < probes; ++p) {
    SpectralField ug = u;
    SpectralField vh = v;
    if (p > 0) {
      std::vector<double> g(n);
      std::vector<double> h(n);
      double gn = 0.0;
      double hn = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = gauss(rng);
        h[i] = gauss(rng);
        gn += sym[i] * g[i] * g[i];
        hn += sym[i] * h[i] * h[i];
      }
      const double tg = scale * std::pow(10.0, expo(rng)) / std::sqrt(gn);
      const double th = scale * std::pow(10.0, expo(rng)) / std::sqrt(hn);
      for (std::size_t i = 0; i < n; ++i) {
        if (vary_u) ug.coeffs[i] += tg * g[i];
        vh.coeffs[i] += th * h[i];
      }
    }
    const double fu = eval_action(problem, ug, v, w);
    const double fv = eval_action(problem, u, vh, w);
    const double mu = f0 + cert.tol - fu;
    const double mv = fv - f0 + cert.tol;
    cert.worst_u_margin = std::min(cert.worst_u_margin, mu);
    cert.worst_v_margin = std::min(cert.worst_v_margin, mv);
    if (mu < 0.0 || mv < 0.0) cert.violations.push_back(p);
  }
  cert.passed = cert.violations.empty();
  return cert;
}

}  // namespace fracsaddle
