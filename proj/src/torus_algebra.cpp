#include "kam/torus_algebra.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kam/errors.hpp"

namespace kam {

namespace {

std::int64_t mode_pairing(const SeriesLayout& L, int mode, const RationalVector& v) {
  const auto& k = L.mode(mode);
  return v.pair(std::span<const int>(k.data(), static_cast<std::size_t>(L.n())));
}

}  // namespace

std::string format_mode(const SeriesLayout& L, int mode) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < L.n(); ++i) os << (i ? "," : "") << L.mode(mode)[static_cast<std::size_t>(i)];
  os << ')';
  return os.str();
}

FourierTaylor average_full(const FourierTaylor& f) {
  return f.filter([](const FourierTaylor::Term& t) { return t.mode == 0; });
}

FourierTaylor average_along(const FourierTaylor& f, const RationalVector& v) {
  if (v.dim() != f.dim()) throw domain_error("rational vector dimension mismatch");
  const auto& L = f.layout();
  return f.filter([&](const FourierTaylor::Term& t) {
    return mode_pairing(L, static_cast<int>(t.mode), v) == 0;
  });
}

FourierTaylor solve_homological(const FourierTaylor& rhs, const RationalVector& v) {
  if (v.dim() != rhs.dim()) throw domain_error("rational vector dimension mismatch");
  const auto& L = rhs.layout();
  const double q = static_cast<double>(v.q);
  for (const auto& t : rhs.terms()) {
    if (t.c != Complex(0.0) && mode_pairing(L, static_cast<int>(t.mode), v) == 0)
      throw step_condition_error("homological right-hand side has a nonzero averaged mode k=" +
                                 format_mode(L, static_cast<int>(t.mode)));
  }
  return rhs.map_coeffs(
      [&](const FourierTaylor::Term& t) {
        const double kv = static_cast<double>(mode_pairing(L, static_cast<int>(t.mode), v)) / q;
        return t.c / Complex(0.0, 2.0 * std::numbers::pi * kv);
      },
      rhs.is_real());
}

Linearization linearize_in_i(const FourierTaylor& f, const DomainParams& d, double c) {
  if (!(c > 0.0 && c < 1.0)) throw domain_error("linearization shrink factor must lie in (0,1)");
  const auto& L = f.layout();
  Linearization out;
  out.affine = f.filter([&](const FourierTaylor::Term& t) { return L.alpha_degree(t.alpha) <= 1; });
  const auto tail = f.filter([&](const FourierTaylor::Term& t) { return L.alpha_degree(t.alpha) >= 2; });
  DomainParams shrunk = d;
  shrunk.r = c * d.r;
  out.tail_norm = majorant_norm(tail, shrunk);
  out.lemma_bound = c * c / (1.0 - c) * majorant_norm(f, d);
  out.within_bound = out.tail_norm <= out.lemma_bound * (1.0 + 1e-12);
  return out;
}

CauchyBound shrink_cauchy_bound(const FourierTaylor& f, const DomainParams& d, ShrinkDirection dir,
                                double amount) {
  const double limit = dir == ShrinkDirection::Action ? d.r : dir == ShrinkDirection::Angle ? d.s : d.h;
  if (!(amount > 0.0 && amount < limit)) throw domain_error("shrink amount must lie in (0, domain radius)");
  DomainParams shrunk = d;
  if (dir == ShrinkDirection::Action) shrunk.r -= amount;
  if (dir == ShrinkDirection::Angle) shrunk.s -= amount;
  if (dir == ShrinkDirection::Param) shrunk.h -= amount;
  CauchyBound out;
  for (int l = 0; l < f.dim(); ++l) {
    const FourierTaylor g = dir == ShrinkDirection::Action  ? d_action(f, l)
                            : dir == ShrinkDirection::Angle ? d_theta(f, l)
                                                            : d_param(f, l);
    out.derivative_norm = std::max(out.derivative_norm, majorant_norm(g, shrunk));
  }
  out.cauchy_bound = majorant_norm(f, d) / amount;
  out.holds = out.derivative_norm <= out.cauchy_bound * (1.0 + 1e-12);
  return out;
}

}  // namespace kam
