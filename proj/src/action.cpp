#include "fracsaddle/action.hpp"

#include <cmath>
#include <random>

#include "fracsaddle/errors.hpp"

namespace fracsaddle {

ActionProblem::ActionProblem(BasisPtr basis, GridPtr grid, double alpha,
                             NonlinearityPtr nonlinearity, ControlSet controls)
    : transform_(std::move(basis), std::move(grid)),
      alpha_(alpha),
      nonlinearity_(std::move(nonlinearity)),
      controls_(std::move(controls)) {
  validate_alpha(alpha_);
  if (!nonlinearity_) throw ValidationError("ActionProblem: missing nonlinearity");
  controls_.validate();
  report_ = validate_assumptions(*nonlinearity_, controls_, alpha_, transform_.basis()->domain());

  const auto rho = transform_.basis()->eigenvalues();
  symbol_.resize(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) symbol_[i] = std::pow(rho[i], alpha_ / 2.0);

  const auto aux_fields = nonlinearity_->auxiliary_fields();
  aux_count_ = aux_fields.size();
  const std::size_t nodes = transform_.grid()->size();
  aux_.assign(nodes * aux_count_, 0.0);
  for (std::size_t i = 0; i < aux_count_; ++i) {
    SpectralField f = aux_fields[i];
    if (f.basis != transform_.basis()) {
      if (f.coeffs.size() != transform_.basis()->size()) {
        throw ValidationError("ActionProblem: forcing field lives on a different basis");
      }
      f.basis = transform_.basis();
    }
    const auto values = transform_.synthesize(f);
    for (std::size_t j = 0; j < nodes; ++j) aux_[j * aux_count_ + i] = values[j];
  }
}

double ActionProblem::principal_symbol() const {
  return std::pow(transform_.basis()->principal_eigenvalue(), alpha_ / 2.0);
}

void ActionProblem::check_control(const ControlField& w) const {
  if (w.components != controls_.dim()) {
    throw ValidationError("control has " + std::to_string(w.components) +
                          " components, expected " + std::to_string(controls_.dim()));
  }
  if (w.nodes() != grid()->size()) {
    throw ValidationError("control is not sampled on the problem grid");
  }
  for (std::size_t j = 0; j < w.nodes(); ++j) {
    if (!controls_.contains(w.at(j))) {
      throw ValidationError("control leaves the admissible set M at node " + std::to_string(j));
    }
  }
}

ControlField ActionProblem::constant_control(std::span<const double> w) const {
  ControlField f = ControlField::constant(*grid(), w);
  check_control(f);
  return f;
}

double WeakResidual::norm() const { return std::sqrt(norm_u * norm_u + norm_v * norm_v); }

double dual_norm(const ActionProblem& problem, std::span<const double> r) {
  const auto sym = problem.symbol();
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) sum += r[i] * r[i] / sym[i];
  return std::sqrt(sum);
}

Evaluation evaluate(const ActionProblem& problem, std::span<const double> u,
                    std::span<const double> v, const ControlField& w) {
  const auto& grid = *problem.grid();
  const auto& nl = problem.nonlinearity();
  const auto sym = problem.symbol();
  const std::size_t nodes = grid.size();
  if (w.nodes() != nodes || w.components != problem.controls().dim()) {
    throw ValidationError("evaluate: control does not match the problem grid");
  }

  std::vector<double> uv(nodes);
  std::vector<double> vv(nodes);
  problem.transform().synthesize(u, uv);
  problem.transform().synthesize(v, vv);

  std::vector<double> gu(nodes);
  std::vector<double> gv(nodes);
  const auto weights = grid.weights();
  double integral = 0.0;
  PointArgs args;
  for (std::size_t j = 0; j < nodes; ++j) {
    args.x = grid.coords(j);
    args.u = uv[j];
    args.v = vv[j];
    args.w = w.at(j);
    args.aux = problem.aux_at(j);
    const PointValue pv = eval_pointwise(nl, args);
    integral += weights[j] * pv.g;
    gu[j] = pv.g_u;
    gv[j] = pv.g_v;
  }

  Evaluation out;
  double quad = 0.0;
  for (std::size_t i = 0; i < sym.size(); ++i) quad += sym[i] * (v[i] * v[i] - u[i] * u[i]);
  out.action = 0.5 * quad + integral;
  if (!std::isfinite(out.action)) throw NonFiniteError("evaluate: non-finite action");

  auto& r = out.residual;
  r.r_u.resize(sym.size());
  r.r_v.resize(sym.size());
  problem.transform().analyze(gu, r.r_u);
  problem.transform().analyze(gv, r.r_v);
  for (std::size_t i = 0; i < sym.size(); ++i) {
    r.r_u[i] -= sym[i] * u[i];
    r.r_v[i] += sym[i] * v[i];
  }
  r.norm_u = dual_norm(problem, r.r_u);
  r.norm_v = dual_norm(problem, r.r_v);
  return out;
}

double eval_action(const ActionProblem& problem, const SpectralField& u, const SpectralField& v,
                   const ControlField& w) {
  const auto& grid = *problem.grid();
  const auto& nl = problem.nonlinearity();
  const auto sym = problem.symbol();
  const auto uv = problem.transform().synthesize(u);
  const auto vv = problem.transform().synthesize(v);
  const auto weights = grid.weights();
  double integral = 0.0;
  PointArgs args;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    args.x = grid.coords(j);
    args.u = uv[j];
    args.v = vv[j];
    args.w = w.at(j);
    args.aux = problem.aux_at(j);
    integral += weights[j] * eval_pointwise(nl, args).g;
  }
  double quad = 0.0;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    quad += sym[i] * (v.coeffs[i] * v.coeffs[i] - u.coeffs[i] * u.coeffs[i]);
  }
  const double value = 0.5 * quad + integral;
  if (!std::isfinite(value)) throw NonFiniteError("eval_action: non-finite action");
  return value;
}

WeakResidual weak_residual(const ActionProblem& problem, const SpectralField& u,
                           const SpectralField& v, const ControlField& w) {
  return evaluate(problem, u.coeffs, v.coeffs, w).residual;
}

double state_distance(const ActionProblem& problem, const SpectralField& u1, const SpectralField& v1,
                      const SpectralField& u2, const SpectralField& v2) {
  const auto sym = problem.symbol();
  double sum = 0.0;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const double du = u1.coeffs[i] - u2.coeffs[i];
    const double dv = v1.coeffs[i] - v2.coeffs[i];
    sum += sym[i] * (du * du + dv * dv);
  }
  return std::sqrt(sum);
}

GradientCheckReport gradient_check(const ActionProblem& problem, const SpectralField& u,
                                   const SpectralField& v, const ControlField& w, int trials,
                                   std::uint64_t seed) {
  if (trials < 1) throw ValidationError("gradient_check: trials must be >= 1");
  GradientCheckReport rep;
  rep.trials = trials;
  const std::size_t n = u.size();
  const bool vary_u = problem.nonlinearity().traits().depends_on_u;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Evaluation base = evaluate(problem, u.coeffs, v.coeffs, w);
  const double scale =
      1.0 + std::sqrt(h_alpha_inner(u, u, problem.alpha()) + h_alpha_inner(v, v, problem.alpha()));
  const auto sym = problem.symbol();

  for (int t = 0; t < trials; ++t) {
    std::vector<double> du(n, 0.0);
    std::vector<double> dv(n, 0.0);
    double hn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (vary_u) du[i] = gauss(rng);
      dv[i] = gauss(rng);
      hn += sym[i] * (du[i] * du[i] + dv[i] * dv[i]);
    }
    hn = std::sqrt(hn);
    for (std::size_t i = 0; i < n; ++i) {
      du[i] /= hn;
      dv[i] /= hn;
    }
    double analytic = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      analytic += base.residual.r_u[i] * du[i] + base.residual.r_v[i] * dv[i];
    }

    auto shifted = [&](double h) {
      SpectralField us = u;
      SpectralField vs = v;
      for (std::size_t i = 0; i < n; ++i) {
        us.coeffs[i] += h * du[i];
        vs.coeffs[i] += h * dv[i];
      }
      return eval_action(problem, us, vs, w);
    };
    // step ladder h = scale * 10^{-k}; keep the estimate whose neighbour agrees best
    std::vector<double> est;
    for (int k = 1; k <= 6; ++k) {
      const double h = scale * std::pow(10.0, -k);
      est.push_back((shifted(h) - shifted(-h)) / (2.0 * h));
    }
    std::size_t best = 1;
    double best_gap = std::abs(est[1] - est[0]);
    for (std::size_t k = 2; k < est.size(); ++k) {
      const double gap = std::abs(est[k] - est[k - 1]);
      if (gap < best_gap) {
        best_gap = gap;
        best = k;
      }
    }
    const double fd = est[best];
    const double floor = 1e-12 * (1.0 + std::abs(base.action));
    const double rel = std::abs(fd - analytic) / std::max(std::abs(analytic), floor);
    if (rel > rep.worst_relative_error || rep.worst_trial < 0) {
      rep.worst_relative_error = std::max(rel, rep.worst_relative_error);
      rep.worst_trial = t;
      rep.worst_direction_u = du;
      rep.worst_direction_v = dv;
    }
  }
  return rep;
}

}  // namespace fracsaddle
