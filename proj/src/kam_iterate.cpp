#include "kam/kam_iterate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kam/errors.hpp"

namespace kam {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ConditionCheck check(std::string name, double lhs, double rhs, bool enforced) {
  return {std::move(name), lhs, rhs, lhs <= rhs, enforced};
}

double param_distance(const ParamMap& a, const ParamMap& b, const DomainParams& d) {
  double worst = 0.0;
  for (int l = 0; l < a.dim(); ++l)
    worst = std::max(worst, majorant_norm(a.shift[static_cast<std::size_t>(l)] - b.shift[static_cast<std::size_t>(l)], d));
  return worst;
}

// max(wI |U_A - U_B|, wTheta |V_A - V_B|, wX |phi_A - phi_B|) on d.
double weighted_distance(const Transformation& A, const Transformation& B, const DomainParams& d, double w_action,
                         double w_angle, double w_param) {
  double worst = 0.0;
  for (int l = 0; l < A.dim(); ++l) {
    const auto k = static_cast<std::size_t>(l);
    worst = std::max(worst, w_action * majorant_norm(A.U[k] - B.U[k], d));
    worst = std::max(worst, w_angle * majorant_norm(A.d[k] - B.d[k], d));
  }
  return std::max(worst, w_param * param_distance(A.phi, B.phi, d));
}

[[noreturn]] void rethrow_at(const KamError& e, int i) {
  std::string msg = e.what();
  if (msg.rfind(e.kind() + ": ", 0) == 0) msg.erase(0, e.kind().size() + 2);
  const std::string what = "iteration " + std::to_string(i) + ": " + msg;
  switch (e.error_class()) {
    case ErrorClass::Usage:
      throw UsageError(what);
    case ErrorClass::Condition:
      throw ConditionError(e.kind(), what);
    case ErrorClass::Numerical:
    default:
      throw NumericalError(e.kind(), what);
  }
}

}  // namespace

Schedule build_schedule(const ArithmeticProfile& profile, const DomainParams& d, double eps,
                        const ScheduleConfig& cfg) {
  d.validate();
  if (!(eps > 0.0)) throw domain_error("schedule needs eps > 0");
  if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) throw domain_error("eta must lie in (0, 1)");
  if (cfg.max_iters < 0) throw UsageError("max_iters must be nonnegative");
  Schedule S;
  S.eta = cfg.eta;
  S.C = cfg.C;
  if (cfg.q0 > 0) {
    if (cfg.q0 > profile.qmax()) throw table_error("Q0 beyond the arithmetic profile");
    S.q0 = cfg.q0;
  } else {
    S.q0 = choose_q0(profile, d.s, cfg.C).q0;
  }
  S.tail = bruno_russmann_tail(profile, S.q0, profile.delta_max());

  const double delta0 = profile.delta(S.q0);
  double s_i = d.s;
  for (int i = 0; i <= cfg.max_iters; ++i) {
    S.eps.push_back(eps * std::pow(cfg.eta / 8.0, i));
    S.r.push_back(d.r * std::pow(cfg.eta, i));
    S.h.push_back(d.h * std::pow(0.25, i));
    S.s.push_back(s_i);
    const double delta_i = std::ldexp(delta0, i);
    S.delta.push_back(delta_i);
    const int Q = i == 0 ? S.q0 : delta_star(profile, delta_i);
    S.Q.push_back(Q);
    S.sigma.push_back(cfg.C / Q);
    if (i < cfg.max_iters) {
      S.sum_sigma += cfg.C / Q;
      s_i -= cfg.C / Q;
    }
  }
  S.s.push_back(s_i);

  const auto& K = cfg.constants;
  S.checks.push_back(check("eps r^-1 <= c_eps_r h", eps / d.r, K.c_eps_r * d.h, K.enforce));
  S.checks.push_back(check("h <= c_h_delta Delta(Q0)^-1", d.h, K.c_h_delta / delta0, K.enforce));
  S.checks.push_back(check("1 <= c_q_sigma Q0 sigma_0", 1.0, K.c_q_sigma * S.q0 * S.sigma[0], K.enforce));
  for (const auto& c : S.checks)
    if (c.enforced && !c.pass)
      throw schedule_error(c.name + " violated: " + fmt(c.lhs) + " > " + fmt(c.rhs));
  if (S.sum_sigma > d.s / 2.0)
    throw ConditionError("q0-too-small", "sum of sigma_i = " + fmt(S.sum_sigma) + " exceeds s/2 = " + fmt(d.s / 2.0) +
                                             " with Q0 = " + std::to_string(S.q0));
  return S;
}

TorusEmbedding TorusEmbedding::flat(const LayoutPtr& layout) {
  TorusEmbedding e;
  for (int l = 0; l < layout->n(); ++l) {
    e.base.push_back(0.0);
    e.action.emplace_back(layout);
    e.shift.emplace_back(layout);
  }
  return e;
}

void TorusEmbedding::evaluate(std::span<const double> theta, std::span<double> p, std::span<double> q) const {
  const std::vector<double> zero(theta.size(), 0.0);
  for (int l = 0; l < dim(); ++l) {
    const auto k = static_cast<std::size_t>(l);
    p[k] = base[k] + (action[k].empty() ? 0.0 : action[k].evaluate(zero, theta, zero).real());
    q[k] = theta[k] + (shift[k].empty() ? 0.0 : shift[k].evaluate(zero, theta, zero).real());
  }
}

TorusResult iterate(const ParamHamiltonian& H0, const ArithmeticProfile& profile, const Schedule& sched,
                    const IterateConfig& cfg) {
  const auto& L = H0.P.layout_ptr();
  if (!L) throw domain_error("iteration needs a perturbation with a layout");
  const int n = L->n();
  if (cfg.step.eta != sched.eta) throw UsageError("step eta differs from the schedule eta");
  if (sched.size() == 0) throw UsageError("empty schedule");

  TorusResult out;
  FourierTaylor e = H0.e.layout_ptr() ? relayout(H0.e, L) : FourierTaylor(L);
  FourierTaylor P = H0.P;
  Transformation F = Transformation::identity(L);
  const double eps0 = sched.eps[0], r0 = sched.r[0], h0 = sched.h[0], sigma0 = sched.sigma[0];
  double jac = 1.0;

  for (int i = 0;; ++i) {
    IterationRecord rec;
    rec.i = i;
    rec.eps = sched.eps[static_cast<std::size_t>(i)];
    rec.r = sched.r[static_cast<std::size_t>(i)];
    rec.h = sched.h[static_cast<std::size_t>(i)];
    rec.s = sched.s[static_cast<std::size_t>(i)];
    rec.sigma = sched.sigma[static_cast<std::size_t>(i)];
    rec.delta = sched.delta[static_cast<std::size_t>(i)];
    rec.Q = sched.Q[static_cast<std::size_t>(i)];
    const DomainParams di = sched.domain(i);
    rec.norm_P = majorant_norm(P, di);
    rec.envelope_ok = rec.norm_P <= rec.eps * (1.0 + 1e-12);
    rec.jacobian_product = jac;
    out.iterations = i;
    out.final_remainder = rec.norm_P;

    if (!rec.envelope_ok) {
      out.history.push_back(rec);
      out.reason = "envelope violated at iteration " + std::to_string(i) + ": |P_i| = " + fmt(rec.norm_P) +
                   " > eps_i = " + fmt(rec.eps);
      break;
    }
    if (rec.norm_P <= cfg.stop_tol * eps0) {
      out.history.push_back(rec);
      out.converged = true;
      out.reason = "remainder below stop tolerance";
      break;
    }
    if (i + 1 >= sched.size()) {
      out.history.push_back(rec);
      out.converged = true;
      out.reason = "reached max iterations";
      break;
    }
    const std::size_t hs = out.history.size();
    if (hs >= 2 && rec.norm_P >= out.history[hs - 1].norm_P && out.history[hs - 1].norm_P >= out.history[hs - 2].norm_P)
      throw NumericalError("divergence", "remainder did not decrease in two consecutive steps at iteration " +
                                             std::to_string(i));

    StepResult step;
    try {
      StepInput in{H0.omega, e, P, di, rec.sigma, static_cast<double>(rec.Q), profile.psi(rec.Q), rec.eps, {}};
      in.basis = rational_basis(H0.omega, rec.Q, cfg.basis, cfg.budget);
      step = kam_step(in, cfg.step);
    } catch (const KamError& err) {
      rethrow_at(err, i);
    }

    const DomainParams dn = sched.domain(i + 1);
    const double eps_next = sched.eps[static_cast<std::size_t>(i + 1)];
    TruncationLog log{dn, cfg.step.drop_factor * eps_next, 0.0};
    const ExpansionControl ctl{dn, cfg.compose_tol_factor * eps_next, cfg.step.max_order};
    Transformation Fn;
    try {
      Fn = compose_transforms(F, step.T, ctl, &log);
    } catch (const KamError& err) {
      rethrow_at(err, i);
    }
    rec.compose_discard = log.discarded;
    if (log.discarded > cfg.compose_budget * eps_next)
      throw budget_error("iteration " + std::to_string(i) + ": composition discarded " + fmt(log.discarded) +
                         " above " + fmt(cfg.compose_budget * eps_next));
    rec.telescope = weighted_distance(Fn, F, dn, 1.0 / r0, 1.0 / sigma0, 1.0 / h0);
    rec.telescope_scale = rec.eps / (rec.r * rec.h);
    rec.step_distance =
        weighted_distance(step.T, Transformation::identity(L), dn, 1.0 / rec.r, 1.0 / rec.sigma, 1.0 / rec.h);
    jac *= 1.0 + rec.step_distance;
    rec.jacobian_product = jac;
    rec.report = std::move(step.report);
    rec.has_step = true;
    out.telescope_sum += rec.telescope;
    out.history.push_back(std::move(rec));
    if (jac > cfg.jacobian_bound)
      throw NumericalError("jacobian-bound", "running product of (1 + step distance) = " + fmt(jac) +
                                                 " exceeds " + fmt(cfg.jacobian_bound));

    F = std::move(Fn);
    e = std::move(step.e_plus);
    P = std::move(step.P_plus);
  }

  // The torus: Phi restricted to I = 0 at the parameter x' = 0 (omega = omega0).
  out.embedding = TorusEmbedding::flat(L);
  for (int l = 0; l < n; ++l) {
    const auto k = static_cast<std::size_t>(l);
    out.embedding.action[k] = restrict_zero_param(restrict_zero_action(F.U[k]));
    out.embedding.shift[k] = restrict_zero_param(restrict_zero_action(F.d[k]));
  }
  const std::vector<Complex> zero(static_cast<std::size_t>(n), 0.0);
  const auto shift = F.phi.shift_at(zero);
  for (int l = 0; l < n; ++l) {
    const auto k = static_cast<std::size_t>(l);
    if (std::abs(shift[k].imag()) > cfg.reality_tol)
      throw NumericalError("reality", "frequency shift has imaginary part " + fmt(shift[k].imag()));
    out.omega_tilde.push_back(H0.omega[l] + shift[k].real());
    out.freq_shift = std::max(out.freq_shift, std::abs(shift[k].real()));
  }
  const DomainParams half{1.0, sched.s[0] / 2.0, 1.0};
  double wa = 0.0, wt = 0.0;
  for (int l = 0; l < n; ++l) {
    wa = std::max(wa, majorant_norm(out.embedding.action[static_cast<std::size_t>(l)], half));
    wt = std::max(wt, majorant_norm(out.embedding.shift[static_cast<std::size_t>(l)], half));
  }
  out.w_embedding = std::max(wa / r0, wt / sched.q0);
  out.w_embedding_sigma = std::max(wa / r0, wt / sigma0);
  out.c4_surrogate = out.w_embedding * r0 * h0 / eps0;
  out.c5_surrogate = out.freq_shift * r0 / eps0;
  out.transform = std::move(F);
  out.final_form = ParamHamiltonian{H0.omega, std::move(e), std::move(P)};
  return out;
}

}  // namespace kam
