// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. argv[1] is the desk configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kam/diophantine.hpp"
#include "kam/errors.hpp"
#include "kam/param_map.hpp"
#include "kam/report_io.hpp"
#include "kam/run_config.hpp"
#include "kam/torus_algebra.hpp"
#include "test_support.hpp"

using namespace kam;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool pass, const std::string& what) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Runs fn, turning an escaping exception into a FAIL line.
void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    verdict(id, false, std::string("exception: ") + e.what());
  }
}

struct Brute {
  double value;
  std::vector<int> k;
};

// Full box enumeration, k canonicalized to first nonzero entry positive, ties lexicographic.
Brute brute_psi2(double w1, int Q) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> bk;
  for (int a = 0; a <= Q; ++a)
    for (int b = -Q; b <= Q; ++b) {
      if (a + std::abs(b) > Q || (a == 0 && b <= 0)) continue;
      const double d = std::abs(a + b * w1);
      std::vector<int> k{a, b};
      if (d < best || (d == best && k < bk)) {
        best = d;
        bk = k;
      }
    }
  return {1.0 / best, bk};
}

void criterion1() {
  const auto t0 = Clock::now();
  const auto w = FrequencyVector::preset("golden");
  const double w1 = (std::sqrt(5.0) - 1.0) / 2.0;
  bool ok = true;
  double worst = 0.0;
  for (int Q : {1, 2, 3, 5, 8, 13}) {
    const auto got = psi(w, Q);
    const auto ref = brute_psi2(w1, Q);
    auto k = got.minimizer;
    if (!k.empty() && (k[0] < 0 || (k[0] == 0 && k[1] < 0)))
      for (auto& c : k) c = -c;
    worst = std::max(worst, std::abs(got.value - ref.value));
    ok = ok && k == ref.k && std::abs(got.value - ref.value) <= 1e-14;
    std::printf("  Q=%-2d psi=%.17g brute=%.17g k=(%d,%d)\n", Q, got.value, ref.value, ref.k[0], ref.k[1]);
  }
  const double t = seconds_since(t0);
  verdict(1, ok && t < 1.0, fmt("psi vs brute force, max |diff| %.1e, %.3f s", worst, t));
}

void criterion2() {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst = 0.0;
  for (const char* name : {"golden", "sqrt2"}) {
    const auto w = FrequencyVector::preset(name);
    for (double Q : {5.0, 10.0, 20.0, 40.0}) {
      const auto b = rational_basis(w, Q);
      std::vector<std::int64_t> m;
      const int n = w.dim();
      for (int r = 0; r < n; ++r)
        for (const auto& v : b.vectors) m.push_back(v.numerators[static_cast<std::size_t>(r)]);
      const auto det = integer_determinant(m, n);
      double score = 0.0;
      for (const auto& v : b.vectors) score = std::max(score, static_cast<double>(v.q) * Q * v.distance(w));
      worst = std::max(worst, score);
      ok = ok && (det == 1 || det == -1) && det == b.determinant;
      std::printf("  %-6s Q=%-2g det=%lld q=(%lld,%lld) max q Q |w-v|=%.4f\n", name, Q, static_cast<long long>(det),
                  static_cast<long long>(b.vectors[0].q), static_cast<long long>(b.vectors[1].q), score);
    }
  }
  bool rejected = false;
  try {
    rational_basis(FrequencyVector({1.0, 0.5}), 10.0);
  } catch (const ConditionError& e) {
    rejected = e.kind() == "resonance";
    std::printf("  (1, 1/2): %s\n", e.what());
  }
  const double t = seconds_since(t0);
  verdict(2, ok && rejected && t < 5.0,
          fmt("determinants all +-1, max q Q |w-v| %.3f (<= 10: %s), resonance rejected: %s, %.3f s", worst,
              worst <= 10.0 ? "yes" : "no", rejected ? "yes" : "no", t));
}

void criterion3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  struct Case {
    LayoutPtr L;
    RationalBasis basis;
  };
  std::vector<Case> cases;
  for (double Q : {5.0, 10.0, 20.0}) {
    cases.push_back({SeriesLayout::get(2, 6, 1, 1), rational_basis(FrequencyVector::preset("golden"), Q)});
    cases.push_back({SeriesLayout::get(2, 6, 1, 1), rational_basis(FrequencyVector::preset("sqrt2"), Q)});
  }
  for (double Q : {5.0, 10.0})
    cases.push_back({SeriesLayout::get(3, 6, 1, 1), rational_basis(FrequencyVector::preset("cubic-root"), Q)});

  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& c = cases[static_cast<std::size_t>(trial) % cases.size()];
    const int K = 1 + trial % 6;
    const auto g = testing_support::random_series(c.L, rng, K, 1, 1, 30);
    auto a = g;
    for (const auto& v : c.basis.vectors) a = average_along(a, v);
    worst = std::max(worst, majorant_norm(a - average_full(g), {1, 0.0, 1}));
  }

  // det 2 family: v1 = (1, 1), v2 = (1, -1) in the plane, plus the analogous triple in space
  const std::vector<std::pair<LayoutPtr, std::vector<RationalVector>>> family{
      {SeriesLayout::get(2, 6, 1, 1), {{1, {1, 1}}, {1, {1, -1}}}},
      {SeriesLayout::get(3, 6, 1, 1), {{1, {1, 1, 0}}, {1, {1, -1, 0}}, {1, {1, 0, 1}}}}};
  double largest_gap = 0.0;
  for (const auto& [L, vs] : family) {
    std::vector<std::int64_t> m;
    const int n = L->n();
    for (int r = 0; r < n; ++r)
      for (const auto& v : vs) m.push_back(v.numerators[static_cast<std::size_t>(r)]);
    std::printf("  constructed family n=%d det=%lld\n", n, static_cast<long long>(integer_determinant(m, n)));
    for (int trial = 0; trial < 100; ++trial) {
      const auto g = testing_support::random_series(L, rng, 6, 1, 1, 30);
      auto a = g;
      for (const auto& v : vs) a = average_along(a, v);
      largest_gap = std::max(largest_gap, majorant_norm(a - average_full(g), {1, 0.0, 1}));
    }
  }
  const bool det2_fails = largest_gap > 1e-12;
  const double t = seconds_since(t0);
  std::printf("  unimodular cascades: max error %.1e; det 2 cascades: max error %.1e\n", worst, largest_gap);
  verdict(3, worst <= 1e-12 && det2_fails && t < 10.0,
          fmt("unimodular cascade error %.1e (<= 1e-12), det 2 mismatch found: %s, %.3f s", worst,
              det2_fails ? "yes" : "no", t));
}

void criterion4() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  const std::vector<std::pair<LayoutPtr, RationalBasis>> cases{
      {SeriesLayout::get(2, 8, 2, 2), rational_basis(FrequencyVector::preset("golden"), 20.0)},
      {SeriesLayout::get(2, 8, 2, 2), rational_basis(FrequencyVector::preset("sqrt2"), 10.0)},
      {SeriesLayout::get(3, 6, 1, 1), rational_basis(FrequencyVector::preset("cubic-root"), 8.0)}};
  const DomainParams d{0.3, 0.1, 0.2};
  double worst_rel = 0.0, worst_gain = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& [L, basis] = cases[static_cast<std::size_t>(trial) % cases.size()];
    const auto& v = basis.vectors[static_cast<std::size_t>(trial / 3) % basis.vectors.size()];
    const auto g = testing_support::random_series(L, rng, L->cutoff_k(), L->deg_i(), L->deg_w(), 40);
    const auto rhs = g - average_along(g, v);
    if (rhs.empty()) continue;
    const auto F = solve_homological(rhs, v);
    auto N = FourierTaylor(L);
    for (int l = 0; l < L->n(); ++l) N += FourierTaylor::action(L, l) * Complex(v.value(l));
    const double nr = majorant_norm(rhs, d);
    const double rel = majorant_norm(poisson_bracket(F, N) - rhs, d) / nr;
    const double gain = majorant_norm(F, d) / (static_cast<double>(v.q) * nr);
    worst_rel = std::max(worst_rel, rel);
    worst_gain = std::max(worst_gain, gain);
    ok = ok && rel <= 1e-10 && gain <= 1.0;
  }
  const double t = seconds_since(t0);
  verdict(4, ok && t < 10.0,
          fmt("max |{F, v.I} - rhs| / |rhs| %.1e, max |F| / (q |rhs|) %.4f, %.3f s", worst_rel, worst_gain, t));
}

void criterion7() {
  const auto t0 = Clock::now();
  const auto P = SeriesLayout::get(2, 0, 0, 2);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 0.02;
  auto random_nu = [&](double delta) {
    std::vector<FourierTaylor> nu;
    double top = 0.0;
    for (int l = 0; l < 2; ++l) {
      nu.push_back(testing_support::random_series(P, rng, 0, 0, 2, 6));
      top = std::max(top, majorant_norm(nu.back(), {1, 0, h}));
    }
    for (auto& f : nu) f *= Complex(delta / top);
    return nu;
  };
  bool ok = true;
  double worst_resid = 0.0, worst_ratio = 0.0;
  const std::vector<Complex> zero{0.0, 0.0};
  for (int trial = 0; trial < 100; ++trial) {
    const double delta = h / 4 * (0.02 + 0.98 * u(rng));
    const auto nu = random_nu(delta);
    const auto r = invert_frequency_map(nu, h);
    const double measured = majorant_norm(std::span<const FourierTaylor>(r.phi.shift), {1, 0, h / 4});
    worst_ratio = std::max(worst_ratio, measured / delta);
    ok = ok && measured <= delta * (1 + 1e-12);
    for (int s = 0; s < 20; ++s) {
      std::vector<Complex> x;
      for (int l = 0; l < 2; ++l) x.push_back(std::polar(h / 4 * u(rng), 6.283185307179586 * u(rng)));
      const auto y = r.phi.apply(x);
      for (int l = 0; l < 2; ++l) {
        const auto fy = y[static_cast<std::size_t>(l)] + nu[static_cast<std::size_t>(l)].evaluate(zero, zero, y);
        worst_resid = std::max(worst_resid, std::abs(fy - x[static_cast<std::size_t>(l)]));
      }
    }
  }
  ok = ok && worst_resid <= 1e-12;
  bool rejected = false;
  try {
    invert_frequency_map(random_nu(h / 4 * 1.05), h);
  } catch (const ConditionError&) {
    rejected = true;
  }
  const double t = seconds_since(t0);
  verdict(7, ok && rejected && t < 5.0,
          fmt("max |phi - Id|_{h/4} / delta %.4f, max |f(phi(w)) - w| %.1e, delta > h/4 rejected: %s, %.3f s",
              worst_ratio, worst_resid, rejected ? "yes" : "no", t));
}

void criterion9(const RunConfig& desk) {
  const auto t0 = Clock::now();
  const double s = 0.4, C = 1.0;
  const auto prof = build_profile(desk);
  const auto q0 = choose_q0(prof, s, C);
  ScheduleConfig sc = desk.schedule;
  sc.C = C;
  sc.max_iters = 12;
  sc.constants.enforce = false;
  const auto S = build_schedule(prof, {0.0128, s, 2e-3}, 3.3e-4, sc);
  double sum = 0.0;
  bool q_ok = true;
  for (int i = 0; i < sc.max_iters; ++i) {
    sum += C / S.Q[static_cast<std::size_t>(i)];
    const double target = std::ldexp(prof.delta(S.q0), i);
    int scan = 1;
    for (int Q = 1; Q <= prof.qmax(); ++Q)
      if (prof.delta(Q) <= target) scan = Q;
    q_ok = q_ok && scan == S.Q[static_cast<std::size_t>(i)] && std::abs(S.delta[static_cast<std::size_t>(i)] - target) <= 1e-12 * target;
  }
  const double xcut = prof.delta_max();
  const auto tail = bruno_russmann_tail(prof, q0.q0, xcut);
  const bool eq_ok = tail.value <= s / (2 * C) && (q0.q0 == 1 || bruno_russmann_tail(prof, q0.q0 - 1, xcut).value > s / (2 * C));
  const double t = seconds_since(t0);
  std::printf("  Q0=%d tail=%.6f threshold=%.3f Q_i:", q0.q0, tail.value, s / (2 * C));
  for (int i = 0; i < sc.max_iters; ++i) std::printf(" %d", S.Q[static_cast<std::size_t>(i)]);
  std::printf("\n");
  verdict(9, sum <= s / 2 && q_ok && eq_ok && t < 1.0,
          fmt("sum sigma %.4f (<= %.2f), Q_i match table scan: %s, Q0 inequality and minimality: %s, %.3f s", sum,
              s / 2, q_ok ? "yes" : "no", eq_ok ? "yes" : "no", t));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void desk_criteria(const RunConfig& desk, const fs::path& scratch) {
  std::optional<RunOutcome> first;
  guarded(5, [&] {
    const auto t0 = Clock::now();
    first = run_pipeline(desk);
    const double t = seconds_since(t0);
    write_run_outputs(desk, *first, scratch / "run1");
    const auto& r = first->result;
    bool envelope = true;
    const double eps_param = first->reduced.recipe.eps_param;
    const double eta = first->schedule.eta;
    for (const auto& rec : r.history) {
      const double bound = std::pow(eta / 8, rec.i) * eps_param;
      envelope = envelope && rec.norm_P <= bound;
      std::printf("  i=%d |P_i|=%.3e bound=%.3e Q_i=%d\n", rec.i, rec.norm_P, bound, rec.Q);
    }
    const auto& v = *first->verification;
    const bool ok = r.iterations >= 5 && envelope && v.grid == 32 && v.invariance_residual <= 1e-8 &&
                    v.t_max >= 100.0 && v.shadow_distance <= 1e-6 && t <= 300.0;
    verdict(5, ok,
            fmt("%d iterations, envelope %s, invariance residual %.2e on 32^2, shadowing %.2e over t=%.0f, %.2f s",
                r.iterations, envelope ? "held" : "violated", v.invariance_residual, v.shadow_distance, v.t_max, t));
  });

  guarded(6, [&] {
    if (!first) throw std::runtime_error("criterion 5 run unavailable");
    bool ok = true;
    int steps = 0;
    for (const auto& rec : first->result.history) {
      if (!rec.has_step) continue;
      const auto& s = rec.report;
      ++steps;
      ok = ok && s.norm_Pplus + s.truncation_discard <= s.pplus_bound && s.tail_norm <= s.tail_bound;
      std::printf("  step %d: |P+|=%.3e (+discard %.1e) <= %.3e, |P-Pbar|=%.3e <= %.3e\n", rec.i, s.norm_Pplus,
                  s.truncation_discard, s.pplus_bound,
                  s.tail_norm, s.tail_bound);
    }
    verdict(6, ok && steps > 0, fmt("%d step reports checked against eta eps/8 and eta eps/16", steps));
  });

  guarded(8, [&] {
    if (!first) throw std::runtime_error("criterion 5 run unavailable");
    const auto t0 = Clock::now();
    std::vector<double> ratios;
    for (double eps : {1e-6, 1e-7, 1e-8}) {
      double shift = 0.0, r = 0.0, ep = 0.0;
      if (eps == desk.eps) {
        shift = first->result.freq_shift;
        r = first->reduced.recipe.r;
        ep = first->reduced.recipe.eps_param;
      } else {
        RunConfig c = desk;
        c.eps = eps;
        c.verify = false;
        const auto o = run_pipeline(c);
        if (!o.result.converged) throw std::runtime_error("run at eps " + fmt("%g", eps) + " did not converge");
        shift = o.result.freq_shift;
        r = o.reduced.recipe.r;
        ep = o.reduced.recipe.eps_param;
      }
      ratios.push_back(shift * r / ep);
      std::printf("  eps=%.0e |w~ - w0|=%.3e r=%.4e eps_param=%.4e ratio=%.3e\n", eps, shift, r, ep, ratios.back());
    }
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double t = seconds_since(t0);
    verdict(8, hi <= 3.0 * lo && t <= 900.0,
            fmt("ratio band [%.3e, %.3e]%s, %.2f s", lo, hi, hi == 0.0 ? " (frequency shift exactly zero)" : "", t));
  });

  guarded(10, [&] {
    if (!first) throw std::runtime_error("criterion 5 run unavailable");
    const auto second = run_pipeline(desk);
    write_run_outputs(desk, second, scratch / "run2");
    bool same = true;
    for (const char* f : {"iterations.csv", "result.json"}) {
      const auto a = slurp(scratch / "run1" / f), b = slurp(scratch / "run2" / f);
      same = same && !a.empty() && a == b;
      std::printf("  %s: %zu bytes, identical: %s\n", f, a.size(), a == b ? "yes" : "no");
    }
    verdict(10, same, "two runs give byte-identical iterations.csv and result.json");
  });
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <desk.yaml> [scratch dir]\n");
    return 2;
  }
  const fs::path scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "kam_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  RunConfig desk;
  try {
    desk = load_run_config(argv[1]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  desk_criteria(desk, scratch);
  guarded(7, criterion7);
  guarded(9, [&] { criterion9(desk); });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
