#include "kam/kam_step.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "kam/errors.hpp"
#include "kam/torus_algebra.hpp"

namespace kam {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ConditionCheck make_check(std::string name, double lhs, double rhs, bool enforced) {
  return {std::move(name), lhs, rhs, lhs <= rhs, enforced};
}

void require(const ConditionCheck& c, const char* kind) {
  if (c.enforced && !c.pass)
    throw ConditionError(kind, c.name + " violated: " + fmt(c.lhs) + " > " + fmt(c.rhs));
}

double max_norm(const std::vector<FourierTaylor>& fs, const DomainParams& d) {
  return majorant_norm(std::span<const FourierTaylor>(fs), d);
}

// |W (D Phi - Id) W^-1| with W = Diag(r^-1, sigma^-1), as the max row sum.
double weighted_jacobian_defect(const Transformation& T, const DomainParams& d, double r, double sigma) {
  const int n = T.dim();
  double worst = 0.0;
  for (int l = 0; l < n; ++l) {
    const auto& u = T.U[static_cast<std::size_t>(l)];
    const auto& v = T.d[static_cast<std::size_t>(l)];
    double row_u = 0.0, row_v = 0.0;
    for (int m = 0; m < n; ++m) {
      auto du = d_action(u, m);
      if (m == l) du -= FourierTaylor::constant(u.layout_ptr(), 1.0);
      row_u += majorant_norm(du, d) + sigma / r * majorant_norm(d_theta(u, m), d);
      row_v += r / sigma * majorant_norm(d_action(v, m), d) + majorant_norm(d_theta(v, m), d);
    }
    worst = std::max({worst, row_u, row_v});
  }
  return worst;
}

FourierTaylor directional_action(const LayoutPtr& L, const RationalVector& v) {
  FourierTaylor out(L);
  for (int l = 0; l < L->n(); ++l) out += FourierTaylor::action(L, l) * Complex(v.value(l));
  return out;
}

}  // namespace

FourierTaylor detuning(const LayoutPtr& L, const FrequencyVector& omega, const RationalVector& v,
                       TruncationLog* log) {
  FourierTaylor out(L);
  for (int l = 0; l < L->n(); ++l) {
    const auto I = FourierTaylor::action(L, l);
    out += I * Complex(omega[l] - v.value(l));
    out += multiply(FourierTaylor::parameter(L, l), I, log);
  }
  return out;
}

// G = {S + P_j, F}, T_1 = G - R, T_m = {T_{m-1}, F} / m; the result is G + sum_{m >= 2} T_m.
SeriesSum stage_remainder(const FourierTaylor& s_plus_p, const FourierTaylor& R, const FourierTaylor& F,
                          const ExpansionControl& ctl, TruncationLog* log) {
  const FourierTaylor G = poisson_bracket(s_plus_p, F, log);
  auto higher = lie_tail(poisson_bracket(G - R, F, log) * Complex(0.5), 2, F, ctl, log);
  higher.value += G;
  return higher;
}

DomainParams step_output_domain(const DomainParams& d, double sigma, double eta) {
  return {eta * d.r, d.s - sigma, d.h / 4.0};
}

StepResult kam_step(const StepInput& in, const StepConfig& cfg) {
  const auto& d = in.domain;
  d.validate();
  const auto& L = in.P.layout_ptr();
  if (!L) throw domain_error("kam step needs a perturbation with a layout");
  const int n = L->n();
  if (in.omega.dim() != n) throw domain_error("frequency and series dimensions differ");
  if (static_cast<int>(in.basis.vectors.size()) != n) throw domain_error("basis size differs from dimension");
  if (std::llabs(in.basis.determinant) != 1)
    throw step_condition_error("basis is not unimodular (det " + std::to_string(in.basis.determinant) + ")");
  if (!(cfg.eta > 0.0 && cfg.eta < 0.5)) throw domain_error("eta must lie in (0, 1/2)");

  StepResult res;
  auto& rep = res.report;
  rep.r = d.r;
  rep.s = d.s;
  rep.h = d.h;
  rep.sigma = in.sigma;
  rep.Q = in.Q;
  rep.psi_Q = in.psi_Q;
  rep.eta = cfg.eta;
  rep.basis = in.basis;
  rep.input_norm = majorant_norm(in.P, d);
  const double eps = in.eps > 0.0 ? in.eps : rep.input_norm;
  rep.eps = eps;

  // Conditions of the step, with measured quantities.
  const auto& K = cfg.constants;
  rep.checks.push_back(make_check("0 < sigma < s", in.sigma, d.s, true));
  rep.checks.back().pass = in.sigma > 0.0 && in.sigma < d.s;
  rep.checks.push_back(make_check("eps r^-1 <= c_eps_r h", eps / d.r, K.c_eps_r * d.h, K.enforce));
  rep.checks.push_back(make_check("h <= c_h_delta (Q Psi(Q))^-1", d.h, K.c_h_delta / (in.Q * in.psi_Q), K.enforce));
  rep.checks.push_back(make_check("1 <= c_q_sigma Q sigma", 1.0, K.c_q_sigma * in.Q * in.sigma, K.enforce));
  rep.checks.push_back(make_check("|P|_{r,s,h} <= eps", rep.input_norm, eps * (1 + 1e-12), false));
  for (const auto& c : rep.checks) require(c, "step-condition");

  const double unit = cfg.eta * eps / 16.0;
  TruncationLog log{d, cfg.drop_factor * unit, 0.0};
  const ExpansionControl ctl{d, cfg.lie_tol_factor * unit, cfg.max_order};
  const double flow_budget = cfg.truncation_budget * unit;

  // 1. Linearization in I.
  const auto lin = linearize_in_i(in.P, d, 2.0 * cfg.eta);
  const FourierTaylor& Pbar = lin.affine;
  FourierTaylor transported = in.P - Pbar;
  rep.tail_norm = lin.tail_norm;
  rep.tail_lemma = lin.lemma_bound;
  rep.tail_bound = unit;
  rep.checks.push_back(make_check("|P - Pbar|_{2 eta r,s,h} <= eta eps/16", rep.tail_norm, rep.tail_bound, false));

  // 4. Successive averagings along the basis, 5. composition.
  FourierTaylor Pj = Pbar;
  FourierTaylor acc(L);
  Transformation Phi = Transformation::identity(L);
  double flow_discard = 0.0;
  for (int j = 1; j <= n; ++j) {
    const auto& v = in.basis.vectors[static_cast<std::size_t>(j - 1)];
    StageReport st;
    st.j = j;
    st.q = v.q;
    st.shift = in.basis.approx_error[static_cast<std::size_t>(j - 1)] + d.h;
    st.shift_ratio = st.shift * static_cast<double>(v.q) * in.Q;
    st.norm_P = majorant_norm(Pj, d);
    const DomainParams dj{d.r - j * d.r / (2.0 * n), d.s - j * in.sigma / n, d.h};

    const FourierTaylor Pnext = average_along(Pj, v);
    const FourierTaylor R = Pj - Pnext;
    if (R.empty()) {
      st.skipped = true;
      res.generators.emplace_back(L);
      rep.stages.push_back(st);
      Pj = Pnext;
      continue;
    }
    const FourierTaylor F = solve_homological(R, v);
    st.norm_F = majorant_norm(F, d);
    st.norm_F_bound = static_cast<double>(v.q) * st.norm_P;
    st.conjugacy_defect = majorant_norm(poisson_bracket(F, directional_action(L, v)) - R, d);

    for (int l = 0; l < n; ++l) {
      st.dtheta_F = std::max(st.dtheta_F, majorant_norm(d_theta(F, l), dj));
      st.daction_F = std::max(st.daction_F, majorant_norm(d_action(F, l), dj));
    }
    st.dtheta_bound = d.r / (2.0 * n);
    st.daction_bound = in.sigma / n;
    rep.checks.push_back(make_check("|d_theta F_" + std::to_string(j) + "|_{r_j,s_j} <= r/(2n)", st.dtheta_F,
                                    st.dtheta_bound, cfg.enforce_flow_bounds));
    require(rep.checks.back(), "flow-domain");
    rep.checks.push_back(make_check("|d_I F_" + std::to_string(j) + "|_{r_j,s_j} <= sigma/n", st.daction_F,
                                    st.daction_bound, cfg.enforce_flow_bounds));
    require(rep.checks.back(), "flow-domain");

    auto flow = time_one_flow(F, ctl);
    st.flow_discard = flow.discard;
    st.flow_order = flow.max_order;
    flow_discard += flow.discard;
    if (flow.discard > flow_budget)
      throw NumericalError("truncation-budget", "flow of F_" + std::to_string(j) + " discards " +
                                                    fmt(flow.discard) + " > budget " + fmt(flow_budget));

    const FourierTaylor Ptilde = stage_remainder(detuning(L, in.omega, v, &log) + Pj, R, F, ctl, &log).value;
    st.norm_Ptilde = majorant_norm(Ptilde, dj);
    st.ptilde_ratio = st.norm_Ptilde * in.Q * in.sigma / eps;

    acc = lie_transform(acc, F, ctl, &log).value + Ptilde;
    transported = lie_transform(transported, F, ctl, &log).value;
    Phi = compose_transforms(Phi, flow.map, ctl, &log);
    res.generators.push_back(F);
    rep.stages.push_back(st);
    Pj = Pnext;
  }

  // the n-fold average along a unimodular basis is the full average
  const FourierTaylor bracket = average_full(Pbar);
  const FourierTaylor leftover = Pj - bracket;
  FourierTaylor Praw = acc + transported + leftover;

  const DomainParams dout{cfg.eta * d.r, d.s - in.sigma, d.h};
  rep.norm_Pn_plus = majorant_norm(acc, dout);
  rep.norm_transport = majorant_norm(transported, dout);
  rep.w_phi_minus_id = weighted_distance_from_identity(Phi, dout, 1.0 / d.r, 1.0 / in.sigma);
  rep.w_dphi_minus_id = weighted_jacobian_defect(Phi, dout, d.r, in.sigma);

  // 6. [Pbar] = c(x) + nu(x).I and the inverse of f(x) = x + nu(x).
  std::vector<FourierTaylor::Term> c_terms;
  std::vector<std::vector<FourierTaylor::Term>> nu_terms(static_cast<std::size_t>(n));
  for (const auto& t : bracket.terms()) {
    const int deg = L->alpha_degree(t.alpha);
    if (deg == 0) {
      c_terms.push_back(t);
    } else if (deg == 1) {
      const auto& a = L->alpha(t.alpha);
      for (int l = 0; l < n; ++l)
        if (a[static_cast<std::size_t>(l)] == 1) nu_terms[static_cast<std::size_t>(l)].push_back({t.mode, 0, t.beta, t.c});
    }
  }
  const auto c = FourierTaylor::from_terms(L, c_terms, bracket.is_real());
  std::vector<FourierTaylor> nu;
  for (auto& terms : nu_terms) nu.push_back(FourierTaylor::from_terms(L, terms, bracket.is_real()));
  const DomainParams on_h{1.0, 0.0, d.h};
  rep.nu_norm = max_norm(nu, on_h);
  rep.nu_ratio = rep.nu_norm * d.r / eps;
  rep.checks.push_back(make_check("|nu|_h <= h/4", rep.nu_norm, d.h / 4.0, true));

  const auto inv = invert_frequency_map(nu, d.h, cfg.inversion);
  rep.inversion_iterations = inv.iterations;
  rep.phi_minus_id = inv.phi_minus_id;
  rep.dphi_minus_id = 4.0 * inv.dphi_minus_id;
  const ParamMap phi = inv.phi.relayout_to(L, &log);

  res.P_plus = substitute_param(Praw, phi, &log);
  res.e_plus = substitute_param(in.e + c, phi, &log);
  res.T.phi = phi;
  for (int l = 0; l < n; ++l) {
    res.T.U.push_back(substitute_param(Phi.U[static_cast<std::size_t>(l)], phi, &log));
    res.T.d.push_back(substitute_param(Phi.d[static_cast<std::size_t>(l)], phi, &log));
  }
  rep.symplecticity = symplecticity_defect(res.T, cfg.eta * d.r, cfg.sym_samples, cfg.seed);

  const DomainParams dplus = step_output_domain(d, in.sigma, cfg.eta);
  rep.norm_Pplus = majorant_norm(res.P_plus, dplus);
  rep.truncation_discard = log.discarded + flow_discard;
  rep.pplus_bound = cfg.eta * eps / 8.0;
  rep.checks.push_back(make_check("|P+|_{eta r,s-sigma,h/4} + discard <= eta eps/8",
                                  rep.norm_Pplus + rep.truncation_discard, rep.pplus_bound, false));
  const bool tail_ok = rep.tail_norm <= rep.tail_bound;
  const bool out_ok = rep.norm_Pplus + rep.truncation_discard <= rep.pplus_bound;
  rep.success = tail_ok && out_ok;
  return res;
}

}  // namespace kam
