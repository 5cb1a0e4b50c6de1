#include "kam/reduction.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>

#include "kam/errors.hpp"

namespace kam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double ipow(double x, int e) {
  double v = 1.0;
  for (int i = 0; i < e; ++i) v *= x;
  return v;
}

double monomial_value(std::span<const int> exps, std::span<const double> p) {
  double v = 1.0;
  for (std::size_t l = 0; l < exps.size(); ++l) v *= ipow(p[l], exps[l]);
  return v;
}

// d/dp_j of prod p_l^e_l
double monomial_derivative(std::span<const int> exps, std::span<const double> p, std::size_t j) {
  if (exps.empty() || exps[j] == 0) return 0.0;
  double v = exps[j];
  for (std::size_t l = 0; l < exps.size(); ++l) v *= ipow(p[l], l == j ? exps[l] - 1 : exps[l]);
  return v;
}

double monomial_second(std::span<const int> exps, std::span<const double> p, std::size_t i, std::size_t j) {
  if (exps.empty()) return 0.0;
  std::vector<int> e(exps.begin(), exps.end());
  if (e[i] == 0) return 0.0;
  double c = e[i];
  e[i] -= 1;
  if (e[j] == 0) return 0.0;
  c *= e[j];
  e[j] -= 1;
  return c * monomial_value(e, p);
}

// prod_l z_l^e_l on series, with cached powers
class PowerTable {
 public:
  PowerTable(std::vector<FourierTaylor> z, TruncationLog* log) : z_(std::move(z)), log_(log), pow_(z_.size()) {
    for (std::size_t l = 0; l < z_.size(); ++l) pow_[l].push_back(FourierTaylor::constant(z_[l].layout_ptr(), 1.0));
  }
  const FourierTaylor& power(std::size_t l, int e) {
    while (static_cast<int>(pow_[l].size()) <= e) pow_[l].push_back(multiply(pow_[l].back(), z_[l], log_));
    return pow_[l][static_cast<std::size_t>(e)];
  }
  FourierTaylor monomial(std::span<const int> exps, const LayoutPtr& L) {
    FourierTaylor v = FourierTaylor::constant(L, 1.0);
    for (std::size_t l = 0; l < exps.size(); ++l)
      if (exps[l] > 0) v = multiply(v, power(l, exps[l]), log_);
    return v;
  }

 private:
  std::vector<FourierTaylor> z_;
  TruncationLog* log_;
  std::vector<std::vector<FourierTaylor>> pow_;
};

FourierTaylor poly_series(const std::vector<Monomial>& h, PowerTable& tab, const LayoutPtr& L) {
  FourierTaylor v(L);
  for (const auto& m : h) v += tab.monomial(m.exps, L) * Complex(m.coeff);
  return v;
}

// grad_j h as monomials
std::vector<Monomial> gradient_monomials(const std::vector<Monomial>& h, int j) {
  std::vector<Monomial> out;
  for (const auto& m : h) {
    if (m.exps[static_cast<std::size_t>(j)] == 0) continue;
    Monomial d = m;
    d.coeff *= d.exps[static_cast<std::size_t>(j)];
    d.exps[static_cast<std::size_t>(j)] -= 1;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

void IntegrableSpec::validate() const {
  const auto n = static_cast<std::size_t>(dim());
  for (const auto& m : h)
    if (m.exps.size() != n) throw UsageError("h monomial exponent list must have " + std::to_string(n) + " entries");
  for (const auto& t : f) {
    if (t.k.size() != n) throw UsageError("f term wave vector must have " + std::to_string(n) + " entries");
    if (!t.p_exps.empty() && t.p_exps.size() != n)
      throw UsageError("f term p exponents must have " + std::to_string(n) + " entries");
  }
  for (const auto& m : h)
    for (int e : m.exps)
      if (e < 0) throw UsageError("negative exponent in h");
  if (!(eps >= 0.0)) throw UsageError("eps must be nonnegative");
  if (!(action_box > 0.0)) throw UsageError("action box must be positive");
}

double IntegrableSpec::h_value(std::span<const double> p) const {
  double v = 0.0;
  for (const auto& m : h) v += m.coeff * monomial_value(m.exps, p);
  return v;
}

void IntegrableSpec::h_gradient(std::span<const double> p, std::span<double> out) const {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = 0.0;
    for (const auto& m : h) out[j] += m.coeff * monomial_derivative(m.exps, p, j);
  }
}

std::vector<double> IntegrableSpec::h_hessian(std::span<const double> p) const {
  const auto n = static_cast<std::size_t>(dim());
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& m : h) H[i * n + j] += m.coeff * monomial_second(m.exps, p, i, j);
  return H;
}

double IntegrableSpec::f_value(std::span<const double> p, std::span<const double> q) const {
  double v = 0.0;
  for (const auto& t : f) {
    double kq = 0.0;
    for (std::size_t l = 0; l < q.size(); ++l) kq += t.k[l] * q[l];
    const double amp = t.p_exps.empty() ? 1.0 : monomial_value(t.p_exps, p);
    v += amp * (t.a * std::cos(kTwoPi * kq) + t.b * std::sin(kTwoPi * kq));
  }
  return v;
}

double IntegrableSpec::energy(std::span<const double> p, std::span<const double> q) const {
  return h_value(p) + eps * f_value(p, q);
}

void IntegrableSpec::vector_field(std::span<const double> p, std::span<const double> q, std::span<double> pdot,
                                  std::span<double> qdot) const {
  h_gradient(p, qdot);
  for (auto& v : pdot) v = 0.0;
  for (const auto& t : f) {
    double kq = 0.0;
    for (std::size_t l = 0; l < q.size(); ++l) kq += t.k[l] * q[l];
    const double c = std::cos(kTwoPi * kq), s = std::sin(kTwoPi * kq);
    const double trig = t.a * c + t.b * s;
    const double dtrig = kTwoPi * (-t.a * s + t.b * c);
    const double amp = t.p_exps.empty() ? 1.0 : monomial_value(t.p_exps, p);
    for (std::size_t l = 0; l < p.size(); ++l) {
      pdot[l] -= eps * amp * dtrig * t.k[l];
      if (!t.p_exps.empty()) qdot[l] += eps * monomial_derivative(t.p_exps, p, l) * trig;
    }
  }
}

ReducedSystem reduce_to_param_form(const IntegrableSpec& spec, const LayoutPtr& L, const DomainParams& hint,
                                   const ReductionConfig& cfg) {
  spec.validate();
  const int n = spec.dim();
  if (L->n() != n) throw UsageError("layout dimension differs from the Hamiltonian");
  const auto nz = static_cast<std::size_t>(n);
  ReductionRecipe rec;

  const std::vector<double> zero(nz, 0.0);
  std::vector<double> g0(nz);
  spec.h_gradient(zero, g0);
  for (std::size_t l = 0; l < nz; ++l)
    if (std::abs(g0[l] - spec.omega[static_cast<int>(l)]) > cfg.normalization_tol)
      throw ConditionError("nondegeneracy", "grad h(0) differs from omega0 in component " + std::to_string(l) +
                                                ": " + fmt(g0[l]) + " vs " + fmt(spec.omega[static_cast<int>(l)]));
  const auto hess = spec.h_hessian(zero);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = hess[static_cast<std::size_t>(i * n + j)];
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto sv = svd.singularValues();
  rec.hessian_cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : INFINITY;
  if (!(rec.hessian_cond <= cfg.cond_cap))
    throw ConditionError("nondegeneracy", "Hessian of h at 0 is singular or ill-conditioned (condition " +
                                              fmt(rec.hessian_cond) + ", cap " + fmt(cfg.cond_cap) + ")");
  const Eigen::MatrixXd Ainv = A.inverse();

  TruncationLog log{hint, 0.0, 0.0};
  std::vector<std::vector<Monomial>> grad;
  for (int j = 0; j < n; ++j) grad.push_back(gradient_monomials(spec.h, j));

  // g = A^-1 (x - N(g)), N(g) = grad h(g) - omega0 - A g; each pass gains one order in x.
  std::vector<FourierTaylor> g(nz, FourierTaylor(L)), xs;
  for (int l = 0; l < n; ++l) xs.push_back(FourierTaylor::parameter(L, l));
  auto residual = [&](const std::vector<FourierTaylor>& z, TruncationLog* lg) {
    PowerTable tab(z, lg);
    std::vector<FourierTaylor> r;
    for (int j = 0; j < n; ++j) r.push_back(poly_series(grad[static_cast<std::size_t>(j)], tab, L));
    return r;
  };
  for (int it = 0; it <= L->deg_w() + 1; ++it) {
    const auto gh = residual(g, nullptr);
    std::vector<FourierTaylor> next(nz, FourierTaylor(L));
    for (int i = 0; i < n; ++i) {
      FourierTaylor Ni = gh[static_cast<std::size_t>(i)] - FourierTaylor::constant(L, spec.omega[i]);
      for (int j = 0; j < n; ++j) Ni -= g[static_cast<std::size_t>(j)] * Complex(A(i, j));
      const FourierTaylor rhs = xs[static_cast<std::size_t>(i)] - Ni;
      for (int k = 0; k < n; ++k) next[static_cast<std::size_t>(k)] += rhs * Complex(Ainv(k, i));
    }
    g = std::move(next);
  }
  {
    const auto gh = residual(g, nullptr);
    for (int j = 0; j < n; ++j) {
      const auto d = gh[static_cast<std::size_t>(j)] - FourierTaylor::constant(L, spec.omega[j]) -
                     xs[static_cast<std::size_t>(j)];
      rec.inverse_residual = std::max(rec.inverse_residual, majorant_norm(d, hint));
    }
  }

  PowerTable gtab(g, &log);
  FourierTaylor e = poly_series(spec.h, gtab, L);
  std::vector<FourierTaylor> p;
  for (int l = 0; l < n; ++l) p.push_back(g[static_cast<std::size_t>(l)] + FourierTaylor::action(L, l));
  PowerTable ptab(p, &log);
  FourierTaylor Ph = poly_series(spec.h, ptab, L) - e;
  for (int l = 0; l < n; ++l)
    Ph -= multiply(FourierTaylor::constant(L, spec.omega[l]) + xs[static_cast<std::size_t>(l)],
                   FourierTaylor::action(L, l), &log);
  FourierTaylor f(L);
  for (const auto& t : spec.f) {
    FourierTaylor trig(L);
    if (t.a != 0.0) trig += FourierTaylor::cosine(L, t.k, t.a);
    if (t.b != 0.0) trig += FourierTaylor::sine(L, t.k, t.b);
    if (!t.p_exps.empty()) trig = multiply(trig, ptab.monomial(t.p_exps, L), &log);
    f += trig;
  }

  const DomainParams unit{1.0, hint.s, hint.h};
  rec.M = majorant_norm(Ph, unit);
  rec.F = majorant_norm(f, unit);
  if (!(rec.M > 0.0)) throw ConditionError("nondegeneracy", "P_h vanishes identically (M = 0)");
  rec.truncation_discard = log.discarded;

  ReducedSystem out{{spec.omega, e, Ph + f * Complex(spec.eps)}, hint, rec};
  auto& R = out.recipe;
  if (spec.eps > 0.0 && R.F > 0.0) {
    R.r = cfg.r_override > 0.0 ? cfg.r_override : std::sqrt(R.F * spec.eps / R.M);
    R.eps_param = R.M * R.r * R.r + R.F * spec.eps;
    R.smallness_lhs = R.eps_param / R.r;
    R.smallness_rhs = cfg.c_smallness * hint.h;
    R.eps_threshold = cfg.c_smallness * cfg.c_smallness * hint.h * hint.h / (4.0 * R.M * R.F);
    R.smallness_pass = R.smallness_lhs <= R.smallness_rhs;
    if (cfg.enforce && !R.smallness_pass)
      throw ConditionError("epsilon-too-large", "eps = " + fmt(spec.eps) + " exceeds the threshold c^2 h^2 / (4 M F) = " +
                                                    fmt(R.eps_threshold));
  } else {
    // no perturbation: any radius works; keep the hint
    R.r = cfg.r_override > 0.0 ? cfg.r_override : hint.r;
    R.eps_param = R.M * R.r * R.r;
    R.smallness_pass = true;
  }
  out.domain.r = R.r;
  return out;
}

PlacedTorus place_torus(const TorusResult& result, const IntegrableSpec& spec, double newton_tol) {
  const int n = spec.dim();
  const auto nz = static_cast<std::size_t>(n);
  if (result.omega_tilde.size() != nz) throw UsageError("frequency dimension differs from the Hamiltonian");
  Eigen::VectorXd I = Eigen::VectorXd::Zero(n), target(n), grad(n);
  for (int l = 0; l < n; ++l) target(l) = result.omega_tilde[static_cast<std::size_t>(l)];
  PlacedTorus out;
  std::vector<double> pv(nz), gv(nz);
  bool done = false;
  for (int it = 0; it < 100; ++it) {
    for (int l = 0; l < n; ++l) pv[static_cast<std::size_t>(l)] = I(l);
    spec.h_gradient(pv, gv);
    for (int l = 0; l < n; ++l) grad(l) = gv[static_cast<std::size_t>(l)];
    const Eigen::VectorXd res = grad - target;
    out.newton_iterations = it;
    if (res.lpNorm<Eigen::Infinity>() <= newton_tol) {
      done = true;
      break;
    }
    const auto hess = spec.h_hessian(pv);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Hm(hess.data(), n, n);
    I -= Hm.fullPivLu().solve(res);
    if (!I.allFinite()) break;
  }
  if (!done) throw ConditionError("placement", "Newton for grad h(I) = omega~ did not converge");
  if (I.lpNorm<Eigen::Infinity>() > spec.action_box)
    throw ConditionError("placement", "action offset " + fmt(I.lpNorm<Eigen::Infinity>()) + " outside the action box " +
                                          fmt(spec.action_box));
  for (int l = 0; l < n; ++l) out.action_offset.push_back(I(l));
  out.embedding = result.embedding;
  out.embedding.base = out.action_offset;
  return out;
}

}  // namespace kam
