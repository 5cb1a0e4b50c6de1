#include <doctest.h>

#include <cmath>
#include <random>

#include "kam/errors.hpp"
#include "kam/param_map.hpp"
#include "test_support.hpp"

using namespace kam;

namespace {

std::vector<FourierTaylor> random_nu(const LayoutPtr& P, std::mt19937_64& rng, double h, double delta) {
  std::vector<FourierTaylor> nu;
  double worst = 0.0;
  for (int l = 0; l < P->n(); ++l) {
    auto f = testing_support::random_series(P, rng, 0, 0, P->deg_w(), 6);
    nu.push_back(f);
    worst = std::max(worst, majorant_norm(f, {1, 0, h}));
  }
  for (auto& f : nu) f *= Complex(delta / worst);
  return nu;
}

}  // namespace

TEST_CASE("inverse of constant and zero corrections") {
  const auto P = SeriesLayout::get(2, 0, 0, 3);
  const double h = 0.01;
  std::vector<FourierTaylor> nu{FourierTaylor::constant(P, 1e-3), FourierTaylor::constant(P, -2e-3)};
  const auto r = invert_frequency_map(nu, h);
  const std::vector<Complex> x{0.001, -0.002};
  const auto y = r.phi.apply(x);
  CHECK(std::abs(y[0] - (x[0] - 1e-3)) < 1e-16);
  CHECK(std::abs(y[1] - (x[1] + 2e-3)) < 1e-16);
  std::vector<FourierTaylor> zero{FourierTaylor(P), FourierTaylor(P)};
  const auto z = invert_frequency_map(zero, h);
  CHECK(z.phi.shift[0].empty());
  CHECK(z.phi.shift[1].empty());
}

TEST_CASE("scalar closed form inverse") {
  const auto P = SeriesLayout::get(2, 0, 0, 2);
  const double h = 0.1, a = 0.05;
  std::vector<FourierTaylor> nu{FourierTaylor::parameter(P, 0) * Complex(a), FourierTaylor(P)};
  InversionConfig cfg;
  cfg.degree = 2;
  const auto r = invert_frequency_map(nu, h, cfg);
  for (double x1 : {-0.02, 0.0, 0.013}) {
    const std::vector<Complex> x{x1, 0.004};
    const auto y = r.phi.apply(x);
    CHECK(std::abs(y[0] - x1 / (1 + a)) < 1e-15);
    CHECK(std::abs(y[1] - 0.004) < 1e-18);
  }
}

TEST_CASE("random inversions satisfy the contraction certificates") {
  const auto P = SeriesLayout::get(2, 0, 0, 2);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 0.02;
  for (int trial = 0; trial < 20; ++trial) {
    const double delta = h / 4 * (0.05 + 0.95 * u(rng));
    const auto nu = random_nu(P, rng, h, delta);
    const auto r = invert_frequency_map(nu, h);
    CHECK(r.delta == doctest::Approx(delta).epsilon(1e-12));
    CHECK(r.certificates_hold);
    for (int s = 0; s < 10; ++s) {
      const double rad = h / 4 * u(rng);
      const double ang = 6.283185307179586 * u(rng);
      const std::vector<Complex> x{rad * std::cos(ang), rad * std::sin(ang) * Complex(0.0, 1.0)};
      const auto y = r.phi.apply(x);
      const auto fy0 = nu[0].evaluate(std::vector<Complex>{0.0, 0.0}, std::vector<Complex>{0.0, 0.0}, y);
      const auto fy1 = nu[1].evaluate(std::vector<Complex>{0.0, 0.0}, std::vector<Complex>{0.0, 0.0}, y);
      CHECK(std::abs(y[0] + fy0 - x[0]) < 1e-12);
      CHECK(std::abs(y[1] + fy1 - x[1]) < 1e-12);
    }
  }
  const auto big = random_nu(P, rng, h, h / 4 * 1.01);
  CHECK_THROWS_AS(invert_frequency_map(big, h), ConditionError);
}

TEST_CASE("parameter substitution matches pointwise evaluation") {
  const auto L = SeriesLayout::get(2, 3, 1, 3);
  std::mt19937_64 rng(8);
  const auto g = testing_support::random_series(L, rng, 3, 1, 3, 20);
  ParamMap phi = ParamMap::identity(L);
  phi.shift[0] = testing_support::random_series(L, rng, 0, 0, 1, 3) * Complex(0.01);
  phi.shift[1] = testing_support::random_series(L, rng, 0, 0, 1, 3) * Complex(0.01);
  // keep the substituted degree within the cap: g is cubic, shifts affine
  const auto s = substitute_param(g, phi);
  const std::vector<Complex> I{0.1, -0.2}, th{0.3, 0.8}, x{0.02, -0.01};
  const auto y = phi.apply(x);
  CHECK(std::abs(s.evaluate(I, th, x) - g.evaluate(I, th, y)) < 1e-13);

  ParamMap psi = ParamMap::identity(L);
  psi.shift[0] = FourierTaylor::constant(L, 0.003);
  const auto c = compose_params(phi, psi);
  const auto z1 = c.apply(x);
  const auto z2 = phi.apply(psi.apply(x));
  CHECK(std::abs(z1[0] - z2[0]) < 1e-15);
  CHECK(std::abs(z1[1] - z2[1]) < 1e-15);
}
