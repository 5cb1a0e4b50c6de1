#include "kam/param_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kam/errors.hpp"

namespace kam {

ParamMap ParamMap::identity(const LayoutPtr& layout) {
  ParamMap p;
  p.shift.assign(static_cast<std::size_t>(layout->n()), FourierTaylor(layout, true));
  return p;
}

std::vector<Complex> ParamMap::shift_at(std::span<const Complex> x) const {
  std::vector<Complex> out;
  if (shift.empty()) return out;
  const int n = dim();
  std::vector<Complex> zero(static_cast<std::size_t>(n), 0.0);
  for (const auto& s : shift)
    out.push_back(s.empty() ? Complex(0.0)
                            : s.evaluate(std::span<const Complex>(zero), std::span<const Complex>(zero), x));
  return out;
}

std::vector<Complex> ParamMap::apply(std::span<const Complex> x) const {
  auto out = shift_at(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  return out;
}

ParamMap ParamMap::relayout_to(const LayoutPtr& layout, TruncationLog* log) const {
  ParamMap p;
  for (const auto& s : shift) p.shift.push_back(relayout(s, layout, log));
  return p;
}

void require_parameter_only(const FourierTaylor& f, const char* what) {
  for (const auto& t : f.terms())
    if (t.mode != 0 || t.alpha != 0)
      throw domain_error(std::string(what) + " must depend on the parameter only");
}

namespace {

// Powers (x_l + shift_l)^j for j = 0..maxdeg in the layout of the shift.
std::vector<std::vector<FourierTaylor>> shifted_powers(const ParamMap& phi, const LayoutPtr& layout,
                                                       int maxdeg, TruncationLog* log) {
  const int n = layout->n();
  std::vector<std::vector<FourierTaylor>> pw(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    auto& row = pw[static_cast<std::size_t>(l)];
    row.push_back(FourierTaylor::constant(layout, 1.0));
    if (maxdeg == 0) continue;
    FourierTaylor base = layout->deg_w() >= 1 ? FourierTaylor::parameter(layout, l) : FourierTaylor(layout);
    base += relayout(phi.shift[static_cast<std::size_t>(l)], layout, log);
    row.push_back(base);
    for (int j = 2; j <= maxdeg; ++j) row.push_back(multiply(row.back(), base, log));
  }
  return pw;
}

}  // namespace

FourierTaylor substitute_param(const FourierTaylor& g, const ParamMap& phi, TruncationLog* log) {
  if (!g.layout_ptr() || g.empty()) return g;
  const auto& L = g.layout();
  const int n = L.n();
  bool trivial = true;
  for (const auto& s : phi.shift) trivial = trivial && s.empty();
  if (trivial) return g;
  if (phi.dim() != n) throw domain_error("parameter map dimension mismatch");

  int maxdeg = 0;
  for (const auto& t : g.terms()) maxdeg = std::max(maxdeg, L.beta_degree(t.beta));
  if (maxdeg == 0) return g;
  const auto pw = shifted_powers(phi, g.layout_ptr(), maxdeg, log);

  // Group g by beta: g = sum_beta g_beta(I, theta) x^beta.
  std::vector<std::vector<FourierTaylor::Term>> groups(static_cast<std::size_t>(L.num_beta()));
  for (const auto& t : g.terms()) groups[t.beta].push_back({t.mode, t.alpha, 0, t.c});

  SeriesAccumulator acc(g.layout_ptr(), log);
  for (int b = 0; b < L.num_beta(); ++b) {
    auto& grp = groups[static_cast<std::size_t>(b)];
    if (grp.empty()) continue;
    const auto gb = FourierTaylor::adopt(g.layout_ptr(), std::move(grp), g.is_real());
    if (b == 0) {
      acc.add(gb);
      continue;
    }
    const auto& beta = L.beta(b);
    FourierTaylor mono;
    for (int l = 0; l < n; ++l) {
      const int e = beta[static_cast<std::size_t>(l)];
      if (e == 0) continue;
      const auto& p = pw[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)];
      mono = mono.layout_ptr() ? multiply(mono, p, log) : p;
    }
    acc.add_product(gb, mono);
  }
  bool real = g.is_real();
  for (const auto& s : phi.shift) real = real && s.is_real();
  return acc.finish(real);
}

ParamMap compose_params(const ParamMap& a, const ParamMap& b, TruncationLog* log) {
  ParamMap out;
  for (int l = 0; l < a.dim(); ++l) {
    auto s = substitute_param(a.shift[static_cast<std::size_t>(l)], b, log);
    s += b.shift[static_cast<std::size_t>(l)];
    out.shift.push_back(std::move(s));
  }
  return out;
}

InversionResult invert_frequency_map(const std::vector<FourierTaylor>& nu, double h,
                                     const InversionConfig& cfg) {
  if (nu.empty()) throw domain_error("empty frequency correction");
  const int n = nu.front().dim();
  if (!(h > 0.0)) throw domain_error("parameter radius must be positive");
  const auto P = SeriesLayout::get(n, 0, 0, cfg.degree);
  const DomainParams on_h{1.0, 0.0, h};
  const DomainParams on_quarter{1.0, 0.0, h / 4.0};

  std::vector<FourierTaylor> nu_p;
  InversionResult res;
  for (const auto& f : nu) {
    require_parameter_only(f, "frequency correction");
    nu_p.push_back(relayout(f, P));
    res.delta = std::max(res.delta, majorant_norm(f, on_h));
  }
  if (res.delta > h / 4.0) {
    std::ostringstream os;
    os << "frequency map inversion needs |nu|_h <= h/4: |nu|_h=" << res.delta << " h/4=" << h / 4.0;
    throw ConditionError("inversion-precondition", os.str());
  }

  ParamMap phi = ParamMap::identity(P);
  double prev_step = 0.0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    ParamMap next;
    double step = 0.0;
    for (int l = 0; l < n; ++l) {
      auto s = -substitute_param(nu_p[static_cast<std::size_t>(l)], phi);
      step = std::max(step, majorant_norm(s - phi.shift[static_cast<std::size_t>(l)], on_quarter));
      next.shift.push_back(std::move(s));
    }
    phi = std::move(next);
    res.iterations = it;
    res.last_step = step;
    if (step <= cfg.tol * std::max(1.0, res.delta) || step == 0.0) break;
    if (it > 3 && step > prev_step) throw NumericalError("inversion", "frequency map iteration does not contract");
    if (it == cfg.max_iter)
      throw NumericalError("inversion", "frequency map iteration did not converge within max_iter");
    prev_step = step;
  }
  res.phi = phi;
  for (int l = 0; l < n; ++l) {
    const auto& s = phi.shift[static_cast<std::size_t>(l)];
    res.phi_minus_id = std::max(res.phi_minus_id, majorant_norm(s, on_quarter));
    double row = 0.0;
    for (int m = 0; m < n; ++m) row += majorant_norm(d_param(s, m), on_quarter);
    res.dphi_minus_id = std::max(res.dphi_minus_id, h / 4.0 * row);
  }
  const double slack = 1.0 + 1e-12;
  res.certificates_hold = res.phi_minus_id <= res.delta * slack && res.dphi_minus_id <= res.delta * slack;
  return res;
}

}  // namespace kam
