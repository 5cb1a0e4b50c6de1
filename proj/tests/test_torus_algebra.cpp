#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kam/errors.hpp"
#include "kam/torus_algebra.hpp"
#include "test_support.hpp"

using namespace kam;

namespace {

constexpr double kPi = std::numbers::pi;

RationalVector rv(std::int64_t q, std::vector<std::int64_t> num) { return {q, std::move(num)}; }

// q * int_0^1 f(theta + t q v) t dt by composite Simpson in t.
Complex integral_formula(const FourierTaylor& f, const RationalVector& v, std::vector<double> theta) {
  const int N = 4000;
  const int n = v.dim();
  std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
  Complex s = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double t = static_cast<double>(i) / N;
    std::vector<double> th = theta;
    for (int l = 0; l < n; ++l) th[static_cast<std::size_t>(l)] += t * static_cast<double>(v.numerators[static_cast<std::size_t>(l)]);
    const double w = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * t * f.evaluate(zero, th, zero);
  }
  return static_cast<double>(v.q) * s / (3.0 * N);
}

}  // namespace

TEST_CASE("full average") {
  const auto L = SeriesLayout::get(2, 4, 1, 1);
  const auto f = FourierTaylor::cosine(L, std::vector<int>{1, 0}, 1.0) + FourierTaylor::constant(L, 3.0);
  const auto a = average_full(f);
  CHECK(a.size() == 1);
  CHECK(a.coeff(0, 0, 0) == Complex(3.0));
  std::mt19937_64 rng(1);
  const auto g = testing_support::random_series(L, rng, 4, 1, 1, 20);
  CHECK(majorant_norm(average_full(average_full(g)) - average_full(g), {1, 0.1, 1}) == 0.0);
  CHECK(average_full(FourierTaylor::cosine(L, std::vector<int>{0, 2}, 1.0)).empty());
}

TEST_CASE("directional average") {
  const auto L = SeriesLayout::get(2, 4, 1, 1);
  const auto v = rv(1, {1, 1});
  CHECK(average_along(FourierTaylor::cosine(L, std::vector<int>{1, 1}, 1.0), v).empty());
  const auto inv = FourierTaylor::cosine(L, std::vector<int>{1, -1}, 1.0);
  CHECK(majorant_norm(average_along(inv, v) - inv, {1, 0.1, 1}) == 0.0);
  // direct integral of cos(2 pi (c + 2 t)) over [0, 1]
  double s = 0.0;
  for (int i = 0; i < 1000; ++i) s += std::cos(2 * kPi * (0.3 + 2.0 * (i + 0.5) / 1000)) / 1000;
  CHECK(std::abs(s) < 1e-12);
  std::mt19937_64 rng(2);
  const auto g = testing_support::random_series(L, rng, 4, 1, 1, 30);
  const auto w = rv(5, {5, 3});
  CHECK(majorant_norm(average_along(average_along(g, w), w) - average_along(g, w), {1, 0.1, 1}) == 0.0);
}

TEST_CASE("averaging cascade along a unimodular basis gives the full average") {
  const auto w = FrequencyVector::preset("golden");
  const auto basis = rational_basis(w, 10);
  const auto L = SeriesLayout::get(2, 6, 1, 1);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = testing_support::random_series(L, rng, 6, 1, 1, 25);
    auto a = g;
    for (const auto& v : basis.vectors) a = average_along(a, v);
    CHECK(majorant_norm(a - average_full(g), {1, 0.0, 1}) <= 1e-12);
  }
}

TEST_CASE("homological solver") {
  const auto L = SeriesLayout::get(2, 6, 1, 1);
  const auto v = rv(1, {1, 0});
  const auto rhs = FourierTaylor::sine(L, std::vector<int>{1, 0}, 1.0);
  const auto F = solve_homological(rhs, v);
  const auto expect = FourierTaylor::cosine(L, std::vector<int>{1, 0}, -1.0 / (2 * kPi));
  CHECK(majorant_norm(F - expect, {1, 0.1, 1}) < 1e-15);
  CHECK(solve_homological(FourierTaylor(L), v).empty());
  // averaged mode present -> precondition error
  CHECK_THROWS_AS(solve_homological(FourierTaylor::cosine(L, std::vector<int>{0, 1}, 1.0), v), ConditionError);

  std::mt19937_64 rng(9);
  const auto w = rv(5, {5, 3});
  const std::vector<int> e{};
  for (int trial = 0; trial < 100; ++trial) {
    auto g = testing_support::random_series(L, rng, 6, 1, 1, 20);
    const auto r = g - average_along(g, w);
    const auto G = solve_homological(r, w);
    const DomainParams d{0.5, 0.05, 0.5};
    CHECK(majorant_norm(G, d) <= 5.0 * majorant_norm(r, d) * (1 + 1e-12));
    const auto N = FourierTaylor::action(L, 0) * Complex(w.value(0)) + FourierTaylor::action(L, 1) * Complex(w.value(1));
    CHECK(majorant_norm(poisson_bracket(G, N) - r, d) <= 1e-10 * majorant_norm(r, d));
    if (trial < 5) {
      const auto rt = restrict_zero_param(restrict_zero_action(r));
      const auto Gt = solve_homological(rt, w);
      for (int p = 0; p < 4; ++p) {
        const std::vector<double> th{0.1 + 0.2 * p, 0.37 * p};
        const std::vector<double> zero{0.0, 0.0};
        CHECK(std::abs(Gt.evaluate(zero, th, zero) - integral_formula(rt, w, th)) < 1e-9);
      }
    }
  }
}

TEST_CASE("linearization in the actions") {
  const auto L = SeriesLayout::get(1, 2, 6, 0);
  const auto I = FourierTaylor::action(L, 0);
  const auto sq = multiply(I, I);
  const auto lin = linearize_in_i(sq, {1.0, 0.1, 1.0}, 0.5);
  CHECK(lin.affine.empty());
  CHECK(lin.tail_norm == doctest::Approx(0.25));
  CHECK(lin.lemma_bound == doctest::Approx(0.5));
  CHECK(lin.within_bound);
  const auto aff = I + FourierTaylor::constant(L, 2.0);
  CHECK(linearize_in_i(aff, {1.0, 0.1, 1.0}, 0.5).tail_norm == 0.0);
  // geometric sum: f = sum_{m=2}^6 I^m at r = 0.8, c = 0.3
  FourierTaylor f(L);
  FourierTaylor p = sq;
  for (int m = 2; m <= 6; ++m) {
    f += p;
    if (m < 6) p = multiply(p, I);
  }
  const double r = 0.8, c = 0.3;
  double geo = 0.0, full = 0.0;
  for (int m = 2; m <= 6; ++m) {
    geo += std::pow(c * r, m);
    full += std::pow(r, m);
  }
  const auto lf = linearize_in_i(f, {r, 0.1, 1.0}, c);
  CHECK(lf.tail_norm == doctest::Approx(geo).epsilon(1e-15));
  CHECK(lf.lemma_bound == doctest::Approx(c * c / (1 - c) * full).epsilon(1e-15));
  CHECK(lf.within_bound);
}

TEST_CASE("Cauchy shrink bounds") {
  const auto L = SeriesLayout::get(2, 4, 2, 2);
  const auto c = FourierTaylor::cosine(L, std::vector<int>{1, 0}, 1.0);
  const DomainParams d{0.5, 0.2, 0.5};
  const auto b = shrink_cauchy_bound(c, d, ShrinkDirection::Angle, 0.1);
  CHECK(b.derivative_norm == doctest::Approx(2 * kPi * std::exp(2 * kPi * 0.1)).epsilon(1e-14));
  CHECK(b.cauchy_bound == doctest::Approx(std::exp(2 * kPi * 0.2) / 0.1));
  CHECK(b.holds);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing_support::random_series(L, rng, 4, 2, 2, 15);
    for (auto dir : {ShrinkDirection::Action, ShrinkDirection::Angle, ShrinkDirection::Param})
      CHECK(shrink_cauchy_bound(g, d, dir, 0.05).holds);
  }
  CHECK_THROWS_AS(shrink_cauchy_bound(c, d, ShrinkDirection::Angle, 0.3), ConditionError);
}
