#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "kam/diophantine.hpp"
#include "kam/errors.hpp"

using namespace kam;

namespace {

const double kGamma = (std::sqrt(5.0) - 1.0) / 2.0;

struct Brute {
  double value;
  std::vector<int> k;
};

// Independent enumeration over the full box, canonicalized to the half space
// with first nonzero entry positive, ties broken lexicographically.
Brute brute_psi2(double w1, int Q) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> bk;
  for (int a = -Q; a <= Q; ++a)
    for (int b = -Q; b <= Q; ++b) {
      if (std::abs(a) + std::abs(b) > Q || (a == 0 && b == 0)) continue;
      if (a < 0 || (a == 0 && b < 0)) continue;
      const double d = std::abs(a + b * w1);
      std::vector<int> k{a, b};
      if (d < best || (d == best && k < bk)) {
        best = d;
        bk = k;
      }
    }
  return {1.0 / best, bk};
}

std::vector<int> fibonacci(int upto) {
  std::vector<int> f{1, 2};
  while (f.back() < upto) f.push_back(f[f.size() - 1] + f[f.size() - 2]);
  return f;
}

// Trapezoid rule in u = ln x of 1/Delta*(x) over [Delta(Q0), xcut].
double trapezoid_tail(const ArithmeticProfile& p, int Q0, double xcut, int N) {
  const double a = std::log(p.delta(Q0)), b = std::log(xcut);
  auto dstar = [&](double x) {
    int q = 1;
    for (int Q = 1; Q <= p.qmax(); ++Q)
      if (p.delta(Q) <= x) q = Q;
    return static_cast<double>(q);
  };
  double s = 0.0;
  const double h = (b - a) / N;
  for (int i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 0.5 : 1.0;
    s += w / dstar(std::exp(a + i * h));
  }
  return 1.0 / Q0 + s * h / std::log(2.0);
}

EnumerationBudget wide() {
  EnumerationBudget b;
  b.max_l1 = 5000;
  return b;
}

}  // namespace

TEST_CASE("psi golden small Q matches brute force") {
  const auto w = FrequencyVector::preset("golden");
  for (int Q : {1, 2, 3, 5, 8, 13, 21}) {
    const auto r = psi(w, Q);
    const auto b = brute_psi2(kGamma, Q);
    CHECK(r.value == doctest::Approx(b.value).epsilon(1e-14));
    CHECK(r.minimizer == b.k);
  }
  CHECK(psi(w, 1).value == doctest::Approx(1.0 / kGamma).epsilon(1e-14));
  CHECK(psi(w, 2).value == doctest::Approx(1.0 / (kGamma * kGamma)).epsilon(1e-13));
  CHECK(psi(w, 2).minimizer == std::vector<int>{1, -1});
}

TEST_CASE("psi reciprocal identity and monotonicity") {
  const auto w = FrequencyVector::preset("sqrt2");
  double prev = 0.0;
  for (int Q = 1; Q <= 30; ++Q) {
    const auto r = psi(w, Q);
    CHECK(r.value >= prev);
    prev = r.value;
    double k_dot = 0.0;
    for (int j = 0; j < 2; ++j) k_dot += r.minimizer[static_cast<std::size_t>(j)] * w[j];
    CHECK(r.value * std::abs(k_dot) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("psi detects resonance and enforces the budget") {
  const FrequencyVector w({1.0, 0.5});
  CHECK(std::isinf(psi(w, 3).value));
  CHECK(psi(w, 3).resonant);
  CHECK_THROWS_AS(psi(FrequencyVector::preset("golden"), 0.5), ConditionError);
  EnumerationBudget tight;
  tight.max_l1 = 10;
  CHECK_THROWS_AS(psi(FrequencyVector::preset("golden"), 11, tight), NumericalError);
}

TEST_CASE("frequency vector validation and presets") {
  CHECK_THROWS_AS(FrequencyVector({0.9, 0.5}), UsageError);
  CHECK_THROWS_AS(FrequencyVector({1.0, 1.5}), UsageError);
  CHECK(FrequencyVector::parse("1, 0.25")[1] == 0.25);
  CHECK(FrequencyVector::parse("cubic-root").dim() == 3);
  CHECK_THROWS_AS(FrequencyVector::parse("1,abc"), UsageError);
}

TEST_CASE("profile tables and Delta* invariants") {
  const auto p = ArithmeticProfile::build(FrequencyVector::preset("golden"), 200);
  for (int Q = 1; Q <= 200; ++Q) {
    if (Q > 1) {
      CHECK(p.psi(Q) >= p.psi(Q - 1));
      CHECK(p.delta(Q) > p.delta(Q - 1));
    }
    CHECK(delta_star(p, p.delta(Q)) == Q);
  }
  for (double x = p.delta(1); x < p.delta_max(); x *= 1.37) {
    const int q = delta_star(p, x);
    CHECK(p.delta(q) <= x);
    if (q < p.qmax()) CHECK(p.delta(q + 1) > x);
    CHECK(delta_star(p, x * 1.1 < p.delta_max() ? x * 1.1 : x) >= q);
  }
  // table scan oracle at x = 5
  int scan = 0;
  for (int Q = 1; Q <= 10; ++Q)
    if (p.delta(Q) <= 5.0) scan = Q;
  CHECK(delta_star(p, 5.0) == scan);
  CHECK_THROWS_AS(delta_star(p, 1.0), ConditionError);
  CHECK_THROWS_AS(delta_star(p, p.delta_max() * 2), NumericalError);
}

TEST_CASE("truncated Bruno-Russmann tail") {
  const auto p = ArithmeticProfile::build(FrequencyVector::preset("golden"), 400, wide());
  CHECK(bruno_russmann_tail(p, 10, p.delta(10)).value == doctest::Approx(0.1).epsilon(1e-15));
  const double xcut = p.delta_max();
  const double t10 = bruno_russmann_tail(p, 10, xcut).value;
  const double t20 = bruno_russmann_tail(p, 20, xcut).value;
  CHECK(t20 < t10);
  const double coarse = trapezoid_tail(p, 10, xcut, 20000);
  const double fine = trapezoid_tail(p, 10, xcut, 40000);
  CHECK(std::abs(coarse - fine) < 1e-3);
  CHECK(t10 == doctest::Approx(fine).epsilon(1e-3));
  CHECK_THROWS_AS(bruno_russmann_tail(p, 10, p.delta_max() * 2), NumericalError);
}

TEST_CASE("choose_q0 satisfies its inequality and is monotone in C") {
  const auto p = ArithmeticProfile::build(FrequencyVector::preset("golden"), 400, wide());
  const auto c1 = choose_q0(p, 1.0, 1.0);
  CHECK(bruno_russmann_tail(p, c1.q0, p.delta_max()).value <= 0.5);
  if (c1.q0 > 1) CHECK(bruno_russmann_tail(p, c1.q0 - 1, p.delta_max()).value > 0.5);
  const auto c2 = choose_q0(p, 1.0, 2.0);
  CHECK(c2.q0 >= c1.q0);
  CHECK_THROWS_AS(choose_q0(p, 1e-4, 1.0), ConditionError);
}

TEST_CASE("integer determinant") {
  const std::vector<std::int64_t> a{3, 5, 2, 3};
  CHECK(integer_determinant(a, 2) == -1);
  const std::vector<std::int64_t> b{0, 1, 0, 0, 0, 1, 1, 0, 0};
  CHECK(integer_determinant(b, 3) == 1);
  const std::vector<std::int64_t> c{2, 0, 1, 0, 3, 1, 4, 1, 5};
  CHECK(integer_determinant(c, 3) == 2 * (15 - 1) - 0 + 1 * (0 - 12));
}

TEST_CASE("rational basis is unimodular with exact certificates") {
  for (const char* name : {"golden", "sqrt2", "cubic-root"}) {
    const auto w = FrequencyVector::preset(name);
    for (double Q : {5.0, 10.0, 20.0}) {
      const auto b = rational_basis(w, Q);
      CHECK(std::llabs(b.determinant) == 1);
      REQUIRE(b.vectors.size() == static_cast<std::size_t>(w.dim()));
      for (std::size_t j = 0; j < b.vectors.size(); ++j) {
        CHECK(b.vectors[j].numerators[0] == b.vectors[j].q);
        CHECK(b.approx_error[j] == b.vectors[j].distance(w));
        CHECK(b.score[j] == doctest::Approx(b.vectors[j].q * Q * b.approx_error[j]));
      }
    }
  }
  CHECK_THROWS_AS(rational_basis(FrequencyVector({1.0, 0.5}), 4), ConditionError);
}

TEST_CASE("golden basis denominators are Fibonacci numbers") {
  const auto w = FrequencyVector::preset("golden");
  const auto fib = fibonacci(100000);
  for (int Q : {3, 5, 8, 13, 21, 34, 55}) {
    const auto b = rational_basis(w, Q);
    for (const auto& v : b.vectors) {
      CHECK(std::find(fib.begin(), fib.end(), v.q) != fib.end());
      // continued fraction convergent: numerator is the nearest integer
      CHECK(v.numerators[1] == std::llround(static_cast<double>(v.q) * kGamma));
    }
  }
}
