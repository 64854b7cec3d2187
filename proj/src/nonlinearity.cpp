#include "fracsaddle/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

#include "fracsaddle/errors.hpp"
#include "fracsaddle/special_functions.hpp"

namespace fracsaddle {

// ---------------------------------------------------------------------------
// Controls

void ControlSet::validate() const {
  if (box.empty()) throw ValidationError("ControlSet: empty control dimension");
  for (const auto& [lo, hi] : box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
      throw ValidationError("ControlSet: each interval must be finite with lo <= hi");
    }
  }
  if (!(p >= 1.0)) throw ValidationError("ControlSet: exponent p must be >= 1");
}

bool ControlSet::contains(std::span<const double> w, double tol) const {
  if (w.size() != box.size()) return false;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (w[i] < box[i].first - tol || w[i] > box[i].second + tol) return false;
  }
  return true;
}

void ControlSet::project(std::span<double> w) const {
  for (std::size_t i = 0; i < box.size(); ++i) w[i] = std::clamp(w[i], box[i].first, box[i].second);
}

std::vector<double> ControlSet::center() const {
  std::vector<double> c;
  c.reserve(box.size());
  for (const auto& [lo, hi] : box) c.push_back(0.5 * (lo + hi));
  return c;
}

ControlField ControlField::constant(const QuadratureGrid& grid, std::span<const double> w) {
  ControlField f;
  f.components = static_cast<int>(w.size());
  f.values.resize(grid.size() * w.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::copy(w.begin(), w.end(), f.values.begin() + static_cast<std::ptrdiff_t>(j * w.size()));
  }
  return f;
}

bool ControlField::is_constant(std::vector<double>* value) const {
  const auto m = static_cast<std::size_t>(components);
  if (values.size() < m) return false;
  for (std::size_t i = m; i < values.size(); ++i) {
    if (values[i] != values[i % m]) return false;
  }
  if (value != nullptr) value->assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m));
  return true;
}

ControlField operator-(const ControlField& a, const ControlField& b) {
  if (a.components != b.components || a.values.size() != b.values.size()) {
    throw ValidationError("ControlField: shape mismatch");
  }
  ControlField d = a;
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= b.values[i];
  return d;
}

// ---------------------------------------------------------------------------
// Pointwise helpers

double Nonlinearity::eval_split(const PointArgs& /*args*/, std::span<double> /*g2*/) const {
  throw SolverError(name() + ": no linear-in-control split available");
}

PointValue eval_pointwise(const Nonlinearity& nl, const PointArgs& args) {
  const PointValue r = nl.eval(args);
  if (!std::isfinite(r.g) || !std::isfinite(r.g_u) || !std::isfinite(r.g_v)) {
    std::ostringstream msg;
    msg << nl.name() << ": non-finite value at u=" << args.u << " v=" << args.v;
    throw NonFiniteError(msg.str());
  }
  return r;
}

double abs_pow(double t, double s) { return std::pow(std::abs(t), s); }

double abs_pow_deriv(double t, double s) {
  if (t == 0.0) return 0.0;
  return s * std::copysign(std::pow(std::abs(t), s - 1.0), t);
}

namespace {

double norm_x(const std::array<double, 3>& x) {
  return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearCoupled

LinearCoupled::LinearCoupled(double beta1, double beta2, SpectralField l1, SpectralField l2)
    : beta1_(beta1), beta2_(beta2), l1_(std::move(l1)), l2_(std::move(l2)) {
  traits_.growth = 2.0;
  traits_.control_dim = 2;
  traits_.concavity_bound = beta1;
  traits_.convexity_bound = beta2;
  // G >= -(beta2/2) v^2 - (...) v for fixed u; G <= (beta1/2) u^2 + (...) u for fixed v
  traits_.lower_quadratic = beta2 / 2.0;
  traits_.upper_quadratic = beta1 / 2.0;
}

PointValue LinearCoupled::eval(const PointArgs& a) const {
  const double c = a.w[0] + a.w[1];
  const double l1 = a.aux[0];
  const double l2 = a.aux[1];
  return {0.5 * beta1_ * a.u * a.u - 0.5 * beta2_ * a.v * a.v + c * a.u * a.v + l1 * a.u + l2 * a.v,
          beta1_ * a.u + c * a.v + l1, -beta2_ * a.v + c * a.u + l2};
}

double LinearCoupled::eval_split(const PointArgs& a, std::span<double> g2) const {
  g2[0] = a.u * a.v;
  g2[1] = a.u * a.v;
  return 0.5 * beta1_ * a.u * a.u - 0.5 * beta2_ * a.v * a.v + a.aux[0] * a.u + a.aux[1] * a.v;
}

std::map<std::string, double> LinearCoupled::parameters() const {
  return {{"beta1", beta1_}, {"beta2", beta2_}};
}

// ---------------------------------------------------------------------------
// PowerCoupled

PowerCoupled::PowerCoupled(double a, double b, double s) : a_(a), b_(b), s_(s) {
  traits_.growth = std::max(2.0, s);
  traits_.control_dim = 2;
  traits_.concavity_bound = b;
  traits_.convexity_bound = a;
  traits_.lower_quadratic = a / 2.0;
  traits_.upper_quadratic = b / 2.0;
}

PointValue PowerCoupled::eval(const PointArgs& p) const {
  const double r = norm_x(p.x);
  const double r2 = r * r;
  const double w1 = p.w[0];
  const double w2 = p.w[1];
  const double g = 0.5 * b_ * p.u * p.u - 0.5 * a_ * p.v * p.v +
                   r2 * w1 * (abs_pow(p.v, s_) - abs_pow(p.u, s_)) - r * w2 * (p.u + p.v) + p.u * p.v;
  const double g_u = b_ * p.u - r2 * w1 * abs_pow_deriv(p.u, s_) - r * w2 + p.v;
  const double g_v = -a_ * p.v + r2 * w1 * abs_pow_deriv(p.v, s_) - r * w2 + p.u;
  return {g, g_u, g_v};
}

double PowerCoupled::eval_split(const PointArgs& p, std::span<double> g2) const {
  const double r = norm_x(p.x);
  g2[0] = r * r * (abs_pow(p.v, s_) - abs_pow(p.u, s_));
  g2[1] = -r * (p.u + p.v);
  return 0.5 * b_ * p.u * p.u - 0.5 * a_ * p.v * p.v + p.u * p.v;
}

std::map<std::string, double> PowerCoupled::parameters() const {
  return {{"a", a_}, {"b", b_}, {"s", s_}};
}

// ---------------------------------------------------------------------------
// QuadraticSplit

QuadraticSplit::QuadraticSplit(double beta1, double beta2, double kappa, SpectralField l1,
                               SpectralField l2, std::vector<double> mu, std::vector<double> nu)
    : beta1_(beta1),
      beta2_(beta2),
      kappa_(kappa),
      l1_(std::move(l1)),
      l2_(std::move(l2)),
      mu_(std::move(mu)),
      nu_(std::move(nu)) {
  if (mu_.size() != nu_.size() || mu_.empty()) {
    throw ValidationError("quadratic_split: mu and nu must have the same nonzero length");
  }
  traits_.growth = 2.0;
  traits_.control_dim = static_cast<int>(mu_.size());
  traits_.concavity_bound = beta1;
  traits_.convexity_bound = beta2;
  traits_.lower_quadratic = beta2 / 2.0;
  traits_.upper_quadratic = beta1 / 2.0;
}

PointValue QuadraticSplit::eval(const PointArgs& a) const {
  double su = a.aux[0];
  double sv = a.aux[1];
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    su += a.w[i] * mu_[i];
    sv += a.w[i] * nu_[i];
  }
  return {0.5 * beta1_ * a.u * a.u - 0.5 * beta2_ * a.v * a.v + kappa_ * a.u * a.v + su * a.u +
              sv * a.v,
          beta1_ * a.u + kappa_ * a.v + su, -beta2_ * a.v + kappa_ * a.u + sv};
}

double QuadraticSplit::eval_split(const PointArgs& a, std::span<double> g2) const {
  for (std::size_t i = 0; i < mu_.size(); ++i) g2[i] = mu_[i] * a.u + nu_[i] * a.v;
  return 0.5 * beta1_ * a.u * a.u - 0.5 * beta2_ * a.v * a.v + kappa_ * a.u * a.v +
         a.aux[0] * a.u + a.aux[1] * a.v;
}

std::map<std::string, double> QuadraticSplit::parameters() const {
  return {{"beta1", beta1_}, {"beta2", beta2_}, {"kappa", kappa_}};
}

// ---------------------------------------------------------------------------
// SingleEquation

SingleEquation::SingleEquation(double quartic, double beta, SpectralField l)
    : quartic_(quartic), beta_(beta), l_(std::move(l)) {
  traits_.growth = quartic != 0.0 ? 4.0 : 2.0;
  traits_.control_dim = 1;
  traits_.concavity_bound = 0.0;
  traits_.convexity_bound = beta;
  traits_.lower_quadratic = beta / 2.0;
  traits_.upper_quadratic = 0.0;
  traits_.depends_on_u = false;
}

PointValue SingleEquation::eval(const PointArgs& a) const {
  const double src = a.aux[0] + a.w[0];
  const double v2 = a.v * a.v;
  return {0.25 * quartic_ * v2 * v2 - 0.5 * beta_ * v2 - src * a.v, 0.0,
          quartic_ * v2 * a.v - beta_ * a.v - src};
}

double SingleEquation::eval_split(const PointArgs& a, std::span<double> g2) const {
  g2[0] = -a.v;
  const double v2 = a.v * a.v;
  return 0.25 * quartic_ * v2 * v2 - 0.5 * beta_ * v2 - a.aux[0] * a.v;
}

std::map<std::string, double> SingleEquation::parameters() const {
  return {{"quartic", quartic_}, {"beta", beta_}};
}

// ---------------------------------------------------------------------------
// FunctionNonlinearity

FunctionNonlinearity::FunctionNonlinearity(std::string name, NonlinearityTraits traits,
                                           EvalFn eval, SplitFn split,
                                           std::vector<SpectralField> aux)
    : name_(std::move(name)),
      traits_(traits),
      eval_(std::move(eval)),
      split_(std::move(split)),
      aux_(std::move(aux)) {
  if (!eval_) throw ValidationError("FunctionNonlinearity: evaluator required");
}

double FunctionNonlinearity::eval_split(const PointArgs& args, std::span<double> g2) const {
  if (!split_) return Nonlinearity::eval_split(args, g2);
  return split_(args, g2);
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed || c.split_only; });
}

bool ValidationReport::split_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed; });
}

std::vector<ValidationCheck> ValidationReport::failures() const {
  std::vector<ValidationCheck> out;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(out),
               [](const ValidationCheck& c) { return !c.passed; });
  return out;
}

const ValidationCheck* ValidationReport::find(const std::string& id) const {
  for (const auto& c : checks) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "[ok]   " : "[FAIL] ") << c.id << ": " << c.description;
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << '\n';
  }
  for (const auto& n : notes) os << "[note] " << n << '\n';
  return os.str();
}

namespace {

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

constexpr std::uint64_t kValidationSeed = 0x5eed'a11e'd0c5'2026ULL;

}  // namespace

ValidationReport validate_assumptions(const Nonlinearity& nl, const ControlSet& controls,
                                      double alpha, const BoxDomain& domain, int samples) {
  ValidationReport rep;
  const auto& tr = nl.traits();
  const int n = domain.dim;
  const double s = tr.growth;
  const double p = controls.p;

  auto add = [&rep](std::string id, std::string desc, bool ok, std::string detail = {},
                    bool split_only = false) {
    rep.checks.push_back({std::move(id), std::move(desc), ok, std::move(detail), split_only});
  };

  const bool alpha_ok = alpha > 1.0 && alpha < 2.0;
  add("alpha_range", "1 < alpha < 2", alpha_ok, "alpha=" + fmt_num(alpha));

  bool domain_ok = true;
  try {
    domain.validate();
  } catch (const ValidationError& e) {
    domain_ok = false;
    add("domain", "box domain valid", false, e.what());
  }

  bool controls_ok = true;
  try {
    controls.validate();
    if (controls.dim() != tr.control_dim) {
      controls_ok = false;
      add("control_dim", "control set dimension matches the nonlinearity", false,
          "m=" + std::to_string(controls.dim()) + " expected " + std::to_string(tr.control_dim));
    }
  } catch (const ValidationError& e) {
    controls_ok = false;
    add("control_set", "M nonempty, bounded box; p >= 1", false, e.what());
  }
  if (!alpha_ok || !domain_ok) return rep;

  const double rho1 = n * (std::numbers::pi / domain.side) * (std::numbers::pi / domain.side);
  const double lam1 = std::pow(rho1, alpha / 2.0);
  const auto crit = critical_exponent(alpha, n);

  // (A2) growth range
  if (n == 1) {
    add("A2_growth", "s > 1", s > 1.0, "s=" + fmt_num(s));
    rep.notes.push_back("n=1: critical exponent undefined for alpha in (1,2); Sobolev range unchecked");
  } else if (crit) {
    add("A2_growth", "s in (1, 2n/(n-alpha))", s > 1.0 && s < *crit,
        "s=" + fmt_num(s) + ", 2*_alpha=" + fmt_num(*crit));
  }

  // (A2') linear-in-control hypotheses
  if (nl.has_split()) {
    const double pmin = 2.0 * n / (n + alpha);
    add("A2prime_p", "p > 2n/(n+alpha)", p > pmin, "p=" + fmt_num(p) + ", bound=" + fmt_num(pmin),
        true);
    if (std::isfinite(p)) {
      const double smin = 1.0 + 1.0 / (p - 1.0);
      const bool upper = n == 1 || !crit || s < *crit;
      add("A2prime_growth", "s in (1 + 1/(p-1), 2*_alpha)", p > 1.0 && s > smin && upper,
          "s=" + fmt_num(s) + ", lower=" + fmt_num(smin), true);
    }
  } else {
    rep.notes.push_back("no linear-in-control split: weak-topology dependence not available");
  }

  // (A3)/(A4)
  add("A3", "rho_1^{alpha/2} > 2b", lam1 > 2.0 * tr.lower_quadratic,
      "2b=" + fmt_num(2.0 * tr.lower_quadratic) + ", rho_1^{alpha/2}=" + fmt_num(lam1));
  if (tr.depends_on_u) {
    add("A4", "rho_1^{alpha/2} > 2B", lam1 > 2.0 * tr.upper_quadratic,
        "2B=" + fmt_num(2.0 * tr.upper_quadratic) + ", rho_1^{alpha/2}=" + fmt_num(lam1));
    add("A5_certificate_u", "xi_1 < rho_1^{alpha/2}", tr.concavity_bound < lam1,
        "xi_1=" + fmt_num(tr.concavity_bound));
  }
  add("A5_certificate_v", "xi_2 < rho_1^{alpha/2}", tr.convexity_bound < lam1,
      "xi_2=" + fmt_num(tr.convexity_bound));

  if (!controls_ok || samples <= 0) return rep;

  // Sampled checks.
  std::mt19937_64 rng(kValidationSeed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto aux_fields = nl.auxiliary_fields();
  const std::size_t m = controls.box.size();
  std::vector<double> w(m);
  std::vector<double> aux(aux_fields.size());
  std::vector<double> g2(m);

  double worst_fd = 0.0;
  double worst_split = 0.0;
  double worst_concave = -std::numeric_limits<double>::infinity();
  double worst_convex = -std::numeric_limits<double>::infinity();
  bool curvature_ok = true;

  for (int t = 0; t < samples; ++t) {
    PointArgs a;
    for (int d = 0; d < n; ++d) a.x[d] = domain.side * unit(rng);
    for (std::size_t c = 0; c < m; ++c) {
      w[c] = controls.box[c].first + (controls.box[c].second - controls.box[c].first) * unit(rng);
    }
    for (std::size_t i = 0; i < aux_fields.size(); ++i) aux[i] = aux_fields[i].eval_at(a.x);
    a.u = tr.depends_on_u ? -2.0 + 4.0 * unit(rng) : 0.0;
    a.v = -2.0 + 4.0 * unit(rng);
    a.w = w;
    a.aux = aux;

    const PointValue g0 = nl.eval(a);
    auto at = [&](double du, double dv) {
      PointArgs b = a;
      b.u += du;
      b.v += dv;
      return nl.eval(b).g;
    };

    // derivative consistency
    const double hu = 1e-5 * (1.0 + std::abs(a.u));
    const double hv = 1e-5 * (1.0 + std::abs(a.v));
    if (tr.depends_on_u) {
      const double fd_u = (at(hu, 0.0) - at(-hu, 0.0)) / (2.0 * hu);
      worst_fd = std::max(worst_fd, std::abs(g0.g_u - fd_u) / (1.0 + std::abs(g0.g_u)));
    }
    const double fd_v = (at(0.0, hv) - at(0.0, -hv)) / (2.0 * hv);
    worst_fd = std::max(worst_fd, std::abs(g0.g_v - fd_v) / (1.0 + std::abs(g0.g_v)));

    // curvature surrogate: G_uu <= xi_1, G_vv >= -xi_2
    const double h2 = 1e-3;
    const double tol_curv = 1e-4 * (1.0 + std::abs(g0.g)) + 1e-6;
    if (tr.depends_on_u) {
      const double d2u = (at(h2, 0.0) - 2.0 * g0.g + at(-h2, 0.0)) / (h2 * h2);
      worst_concave = std::max(worst_concave, d2u - tr.concavity_bound);
      if (d2u > tr.concavity_bound + tol_curv) curvature_ok = false;
    }
    const double d2v = (at(0.0, h2) - 2.0 * g0.g + at(0.0, -h2)) / (h2 * h2);
    worst_convex = std::max(worst_convex, -d2v - tr.convexity_bound);
    if (-d2v > tr.convexity_bound + tol_curv) curvature_ok = false;

    if (nl.has_split()) {
      const double g1 = nl.eval_split(a, g2);
      double g = g1;
      for (std::size_t c = 0; c < m; ++c) g += g2[c] * w[c];
      worst_split = std::max(worst_split, std::abs(g - g0.g) / (1.0 + std::abs(g0.g)));
    }
  }

  add("derivative_consistency", "G_u, G_v match centered differences of G (rel < 1e-6)",
      worst_fd < 1e-6, "worst=" + fmt_num(worst_fd));
  add("A5_sampled", "sampled second differences respect the curvature certificates", curvature_ok,
      "worst excess u=" + fmt_num(worst_concave) + ", v=" + fmt_num(worst_convex));
  if (nl.has_split()) {
    add("split_consistency", "G = G1 + G2.w on samples (rel < 1e-12)", worst_split < 1e-12,
        "worst=" + fmt_num(worst_split));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Factories and registry

SpectralField parse_mode_list(const std::string& text, const BasisPtr& basis) {
  SpectralField f(basis);
  std::stringstream entries(text);
  std::string entry;
  while (std::getline(entries, entry, ';')) {
    if (entry.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = entry.find(':');
    if (colon == std::string::npos) {
      throw ValidationError("mode list entry '" + entry + "' lacks ':'");
    }
    MultiIndex k{0, 0, 0};
    std::stringstream idx(entry.substr(0, colon));
    std::string part;
    int d = 0;
    while (std::getline(idx, part, ',')) {
      if (d >= basis->dim()) throw ValidationError("mode list entry has too many indices");
      try {
        k[d++] = std::stoi(part);
      } catch (const std::exception&) {
        throw ValidationError("mode list: bad index '" + part + "'");
      }
    }
    if (d != basis->dim()) throw ValidationError("mode list entry has too few indices");
    double c = 0.0;
    try {
      c = std::stod(entry.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("mode list: bad coefficient in '" + entry + "'");
    }
    f.coeffs[basis->index_of(k)] += c;
  }
  return f;
}

NonlinearityPtr make_linear_coupled(double beta1, double beta2, SpectralField l1, SpectralField l2,
                                    double alpha) {
  validate_alpha(alpha);
  const double lam1 = std::pow(l1.basis->principal_eigenvalue(), alpha / 2.0);
  if (!(beta1 < lam1) || !(beta2 < lam1)) {
    throw ValidationError("linear_coupled: beta_i must be below rho_1^{alpha/2}=" + fmt_num(lam1));
  }
  return std::make_shared<LinearCoupled>(beta1, beta2, std::move(l1), std::move(l2));
}

NonlinearityPtr make_power_coupled(double a, double b, double s, const BoxDomain& domain,
                                   double alpha) {
  validate_alpha(alpha);
  const double rho1 =
      domain.dim * (std::numbers::pi / domain.side) * (std::numbers::pi / domain.side);
  const double lam1 = std::pow(rho1, alpha / 2.0);
  if (!(a < lam1) || !(b < lam1)) {
    throw ValidationError("power_coupled: a, b must be below rho_1^{alpha/2}=" + fmt_num(lam1));
  }
  if (!(s > 1.0)) throw ValidationError("power_coupled: s must exceed 1");
  if (const auto crit = critical_exponent(alpha, domain.dim); crit && domain.dim >= 2 && s >= *crit) {
    throw ValidationError("power_coupled: s must be below 2*_alpha=" + fmt_num(*crit));
  }
  return std::make_shared<PowerCoupled>(a, b, s);
}

double param_double(const ParamMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (it->second.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("parameter '" + key + "': not a number: " + it->second);
  }
}

namespace {

double get_double(const ParamMap& params, const std::string& key, double fallback) {
  return param_double(params, key, fallback);
}

std::vector<double> get_list(const ParamMap& params, const std::string& key,
                             std::vector<double> fallback) {
  const auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ValidationError("parameter '" + key + "': bad list entry '" + part + "'");
    }
  }
  return out;
}

SpectralField get_field(const ParamMap& params, const std::string& key, const BasisPtr& basis) {
  const auto it = params.find(key);
  if (it == params.end()) return SpectralField(basis);
  return parse_mode_list(it->second, basis);
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, NonlinearityFactory> factories;

  Registry() {
    factories["linear_coupled"] = [](const ParamMap& p, const BasisPtr& basis, double alpha) {
      return make_linear_coupled(get_double(p, "beta1", 1.0), get_double(p, "beta2", 1.0),
                                 get_field(p, "l1", basis), get_field(p, "l2", basis), alpha);
    };
    factories["power_coupled"] = [](const ParamMap& p, const BasisPtr& basis, double alpha) {
      return make_power_coupled(get_double(p, "a", 1.0), get_double(p, "b", 1.0),
                                get_double(p, "s", 3.0), basis->domain(), alpha);
    };
    factories["quadratic_split"] = [](const ParamMap& p, const BasisPtr& basis, double alpha) {
      const double b1 = get_double(p, "beta1", 1.0);
      const double b2 = get_double(p, "beta2", 1.0);
      const double lam1 = std::pow(basis->principal_eigenvalue(), alpha / 2.0);
      if (!(b1 < lam1) || !(b2 < lam1)) {
        throw ValidationError("quadratic_split: beta_i must be below rho_1^{alpha/2}");
      }
      return std::make_shared<QuadraticSplit>(b1, b2, get_double(p, "kappa", 0.0),
                                              get_field(p, "l1", basis), get_field(p, "l2", basis),
                                              get_list(p, "mu", {1.0, 0.0}),
                                              get_list(p, "nu", {0.0, 1.0}));
    };
    factories["single_equation"] = [](const ParamMap& p, const BasisPtr& basis, double alpha) {
      const double beta = get_double(p, "beta", 0.0);
      if (!(beta < std::pow(basis->principal_eigenvalue(), alpha / 2.0))) {
        throw ValidationError("single_equation: beta must be below rho_1^{alpha/2}");
      }
      const double q = get_double(p, "quartic", 0.0);
      if (q < 0.0) throw ValidationError("single_equation: quartic coefficient must be >= 0");
      return std::make_shared<SingleEquation>(q, beta, get_field(p, "l", basis));
    };
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_nonlinearity(const std::string& name, NonlinearityFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories[name] = std::move(factory);
}

NonlinearityPtr make_nonlinearity(const std::string& name, const ParamMap& params,
                                  const BasisPtr& basis, double alpha) {
  NonlinearityFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    const auto it = r.factories.find(name);
    if (it == r.factories.end()) throw ValidationError("unknown nonlinearity '" + name + "'");
    factory = it->second;
  }
  return factory(params, basis, alpha);
}

std::vector<std::string> registered_nonlinearities() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [k, v] : r.factories) names.push_back(k);
  return names;
}

}  // namespace fracsaddle
