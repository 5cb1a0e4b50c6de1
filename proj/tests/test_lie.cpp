#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kam/lie.hpp"
#include "test_support.hpp"

using namespace kam;

namespace {

constexpr double kPi = std::numbers::pi;

ExpansionControl tight(const DomainParams& d) { return {d, 1e-18, 60}; }

}  // namespace

TEST_CASE("flow of zero and of a linear form") {
  const auto L = SeriesLayout::get(2, 4, 2, 1);
  const DomainParams d{0.5, 0.1, 0.1};
  const auto id = time_one_flow(FourierTaylor(L), tight(d));
  CHECK(id.discard == 0.0);
  CHECK(weighted_distance_from_identity(id.map, d, 1, 1) == 0.0);
  const auto F = FourierTaylor::action(L, 0) * Complex(0.3) + FourierTaylor::action(L, 1) * Complex(-0.1);
  const auto rot = time_one_flow(F, tight(d));
  CHECK(rot.map.d[0].coeff(0, 0, 0) == Complex(0.3));
  CHECK(rot.map.d[1].coeff(0, 0, 0) == Complex(-0.1));
  CHECK(majorant_norm(rot.map.U[0] - FourierTaylor::action(L, 0), d) == 0.0);
}

TEST_CASE("flow of a pure angle function") {
  const auto L = SeriesLayout::get(2, 4, 2, 1);
  const DomainParams d{0.5, 0.1, 0.1};
  const double a = 0.01;
  const auto F = FourierTaylor::sine(L, std::vector<int>{1, 0}, a);
  const auto fl = time_one_flow(F, tight(d));
  const auto expect = FourierTaylor::action(L, 0) - FourierTaylor::cosine(L, std::vector<int>{1, 0}, 2 * kPi * a);
  CHECK(majorant_norm(fl.map.U[0] - expect, d) < 1e-16);
  CHECK(fl.map.d[0].empty());
  CHECK(fl.map.is_affine_structure());
}

TEST_CASE("Lie transform agrees with composition by the flow") {
  const auto L = SeriesLayout::get(2, 10, 2, 2);
  const DomainParams d{0.2, 0.05, 0.05};
  std::mt19937_64 rng(31);
  auto F = testing_support::random_series(L, rng, 2, 1, 1, 6) * Complex(2e-3);
  const auto g = testing_support::random_series(L, rng, 2, 2, 1, 8);
  const auto lt = lie_transform(g, F, tight(d), nullptr);
  const auto fl = time_one_flow(F, tight(d));
  CHECK(fl.map.is_affine_structure());
  const auto cp = compose(g, fl.map, tight(d), nullptr);
  const std::vector<Complex> I{0.05, -0.03}, th{0.21, 0.64}, x{0.01, 0.02};
  const auto a = lt.value.evaluate(I, th, x);
  const auto b = cp.evaluate(I, th, x);
  // direct pointwise: evaluate g at the image point
  const auto p = fl.map.apply(I, th, x);
  const auto c = g.evaluate(p.action, p.angle, p.param);
  CHECK(std::abs(a - c) < 1e-10);
  CHECK(std::abs(b - c) < 1e-10);
  CHECK(symplecticity_defect(fl.map, 0.1, 100, 5) < 1e-9);
}

TEST_CASE("composition of transformations") {
  const auto L = SeriesLayout::get(2, 12, 2, 6);
  const DomainParams d{0.2, 0.05, 0.05};
  auto A = Transformation::identity(L);
  auto B = Transformation::identity(L);
  A.d[0] = FourierTaylor::constant(L, 0.1);
  B.d[0] = FourierTaylor::constant(L, 0.25);
  auto AB = compose_transforms(A, B, tight(d), nullptr);
  CHECK(AB.d[0].coeff(0, 0, 0).real() == doctest::Approx(0.35));
  const auto IB = compose_transforms(Transformation::identity(L), B, tight(d), nullptr);
  CHECK(majorant_norm(IB.d[0] - B.d[0], d) == 0.0);

  std::mt19937_64 rng(41);
  const auto FA = testing_support::random_series(L, rng, 2, 1, 1, 6) * Complex(1e-3);
  const auto FB = testing_support::random_series(L, rng, 2, 1, 1, 6) * Complex(1e-3);
  auto TA = time_one_flow(FA, tight(d)).map;
  auto TB = time_one_flow(FB, tight(d)).map;
  TB.phi.shift[0] = FourierTaylor::constant(L, 1e-3) + FourierTaylor::parameter(L, 1) * Complex(0.01);
  const auto C = compose_transforms(TA, TB, tight(d), nullptr);
  CHECK(C.is_affine_structure());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    const std::vector<Complex> I{0.1 * (u(rng) - 0.5), 0.1 * (u(rng) - 0.5)}, th{u(rng), u(rng)},
        x{0.01 * (u(rng) - 0.5), 0.01 * (u(rng) - 0.5)};
    const auto pb = TB.apply(I, th, x);
    const auto pa = TA.apply(pb.action, pb.angle, pb.param);
    const auto pc = C.apply(I, th, x);
    for (int l = 0; l < 2; ++l) {
      worst = std::max(worst, std::abs(pa.action[l] - pc.action[l]));
      worst = std::max(worst, std::abs(pa.angle[l] - pc.angle[l]));
      worst = std::max(worst, std::abs(pa.param[l] - pc.param[l]));
    }
  }
  CHECK(worst < 1e-12);
}
