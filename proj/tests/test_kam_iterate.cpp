#include <doctest.h>

#include <cmath>
#include <string>

#include "kam/errors.hpp"
#include "kam/kam_iterate.hpp"

using namespace kam;

namespace {

const ArithmeticProfile& golden_profile() {
  static const ArithmeticProfile p = [] {
    EnumerationBudget b;
    b.max_l1 = 1000;
    return ArithmeticProfile::build(FrequencyVector::preset("golden"), 1000, b);
  }();
  return p;
}

// H = omega0.x + |x|^2/2 + (omega0 + x).I + |I|^2/2 + eps f(theta), f = cos 2pi theta_1 + cos 2pi(theta_1 + theta_2)
struct Pendulum {
  LayoutPtr L;
  ParamHamiltonian H;
  DomainParams d;
  double eps = 0.0;
};

Pendulum pendulum(double eps_phys, int K) {
  const auto w = FrequencyVector::preset("golden");
  const auto L = SeriesLayout::get(2, K, 2, 2);
  const std::vector<int> k1{1, 0}, k2{1, 1};
  const auto f = FourierTaylor::cosine(L, k1, 1.0) + FourierTaylor::cosine(L, k2, 1.0);
  const double F = majorant_norm(f, {1.0, 0.4, 1.0});
  const auto I0 = FourierTaylor::action(L, 0), I1 = FourierTaylor::action(L, 1);
  const auto x0 = FourierTaylor::parameter(L, 0), x1 = FourierTaylor::parameter(L, 1);
  const auto P = (multiply(I0, I0) + multiply(I1, I1)) * Complex(0.5) + f * Complex(eps_phys);
  const auto e = x0 * Complex(w[0]) + x1 * Complex(w[1]) + (multiply(x0, x0) + multiply(x1, x1)) * Complex(0.5);
  return {L, {w, e, P}, {std::sqrt(F * eps_phys), 0.4, 2e-3}, 2 * F * eps_phys};
}

ScheduleConfig unenforced(int iters) {
  ScheduleConfig sc;
  sc.max_iters = iters;
  sc.constants.enforce = false;
  return sc;
}

IterateConfig quiet() {
  IterateConfig ic;
  ic.step.constants.enforce = false;
  ic.stop_tol = 0.0;
  ic.budget.max_l1 = 1000;
  return ic;
}

}  // namespace

TEST_CASE("schedule follows the geometric laws") {
  const auto& prof = golden_profile();
  const DomainParams d{0.01, 0.4, 1e-3};
  const auto S = build_schedule(prof, d, 1e-6, unenforced(6));
  REQUIRE(S.size() == 7);
  CHECK(S.eps[3] == doctest::Approx(1.7e-15).epsilon(0.02));
  CHECK(S.eps[3] == doctest::Approx(std::pow(1.0 / 528.0, 3) * 1e-6).epsilon(1e-13));
  CHECK(S.delta[5] == doctest::Approx(32.0 * prof.delta(S.q0)).epsilon(1e-15));
  for (int i = 0; i + 1 < S.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    CHECK((S.eps[k + 1] / S.r[k + 1]) / (S.eps[k] / S.r[k]) == doctest::Approx(0.125).epsilon(1e-13));
    CHECK(S.h[k + 1] / S.h[k] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(S.delta[k] / S.delta[k + 1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(S.s[k + 1] == doctest::Approx(S.s[k] - S.sigma[k]).epsilon(1e-15));
    CHECK(S.s[k + 1] < S.s[k]);
    CHECK(S.Q[k + 1] >= S.Q[k]);
  }
  // Q_i = Delta*(Delta_i) from a direct scan of the table
  for (int i = 1; i < S.size(); ++i) {
    int q = 0;
    for (int Q = 1; Q <= prof.qmax(); ++Q)
      if (prof.delta(Q) <= S.delta[static_cast<std::size_t>(i)]) q = Q;
    CHECK(S.Q[static_cast<std::size_t>(i)] == q);
  }
  CHECK(S.sum_sigma <= d.s / 2);
  CHECK(S.s.back() >= d.s / 2);
}

TEST_CASE("schedule errors") {
  const auto& prof = golden_profile();
  const DomainParams d{0.01, 0.4, 1e-3};
  ScheduleConfig sc;
  sc.max_iters = 3;
  try {
    build_schedule(prof, d, 1e-6, sc);
    FAIL("expected a schedule error");
  } catch (const ConditionError& e) {
    CHECK(e.kind() == "schedule");
  }
  auto small = unenforced(3);
  small.q0 = 2;
  try {
    build_schedule(prof, d, 1e-6, small);
    FAIL("expected q0-too-small");
  } catch (const ConditionError& e) {
    CHECK(e.kind() == "q0-too-small");
  }
}

TEST_CASE("zero perturbation converges at once to the flat torus") {
  auto p = pendulum(1e-6, 8);
  p.H.P = FourierTaylor(p.L);
  const auto S = build_schedule(golden_profile(), p.d, p.eps, unenforced(4));
  IterateConfig ic = quiet();
  ic.stop_tol = 1e-14;
  const auto res = iterate(p.H, golden_profile(), S, ic);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.omega_tilde[0] == 1.0);
  CHECK(res.omega_tilde[1] == p.H.omega[1]);
  for (int l = 0; l < 2; ++l) {
    CHECK(res.embedding.action[static_cast<std::size_t>(l)].empty());
    CHECK(res.embedding.shift[static_cast<std::size_t>(l)].empty());
  }
  CHECK(res.w_embedding == 0.0);
}

TEST_CASE("pendulum iteration stays inside the envelope") {
  const auto p = pendulum(1e-6, 10);
  const auto S = build_schedule(golden_profile(), p.d, p.eps, unenforced(5));
  const auto res = iterate(p.H, golden_profile(), S, quiet());
  CHECK(res.converged);
  REQUIRE(res.history.size() == 6);
  for (const auto& rec : res.history) {
    CHECK(rec.envelope_ok);
    CHECK(rec.norm_P <= rec.eps);
    if (!rec.has_step) continue;
    CHECK(rec.report.success);
    CHECK(rec.telescope <= rec.telescope_scale);
    CHECK(rec.jacobian_product <= 2.0);
  }
  // mean momentum of a Lagrangian graph over the torus is its frequency
  CHECK(res.freq_shift == 0.0);

  // |W0 (F^N - Id)| on the last domain is bounded by the sum of the increments
  const DomainParams last = S.domain(S.size() - 1);
  double whole = 0.0;
  const auto id = Transformation::identity(p.L);
  for (int l = 0; l < 2; ++l) {
    const auto k = static_cast<std::size_t>(l);
    whole = std::max(whole, majorant_norm(res.transform.U[k] - id.U[k], last) / S.r[0]);
    whole = std::max(whole, majorant_norm(res.transform.d[k], last) / S.sigma[0]);
  }
  CHECK(whole > 0.0);
  CHECK(whole <= res.telescope_sum * (1 + 1e-12));
}

TEST_CASE("envelope violation stops the iteration") {
  const auto p = pendulum(1e-6, 8);
  const auto S = build_schedule(golden_profile(), p.d, p.eps / 4, unenforced(3));
  const auto res = iterate(p.H, golden_profile(), S, quiet());
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.reason.find("envelope") != std::string::npos);
}

TEST_CASE("step errors carry the iteration index") {
  const auto p = pendulum(1e-6, 8);
  const auto S = build_schedule(golden_profile(), p.d, p.eps, unenforced(3));
  IterateConfig ic = quiet();
  ic.step.constants.enforce = true;
  try {
    iterate(p.H, golden_profile(), S, ic);
    FAIL("expected a step condition error");
  } catch (const ConditionError& e) {
    CHECK(e.kind() == "step-condition");
    CHECK(std::string(e.what()).find("iteration 0:") != std::string::npos);
  }
  ic.step.eta = 1.0 / 70.0;
  CHECK_THROWS_AS(iterate(p.H, golden_profile(), S, ic), UsageError);
}
