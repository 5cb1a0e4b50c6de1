#include "kam/lie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kam/errors.hpp"

namespace kam {

SeriesSum lie_tail(const FourierTaylor& first, int m0, const FourierTaylor& F, const ExpansionControl& ctl,
                   TruncationLog* log) {
  SeriesSum out;
  out.value = first;
  out.order = m0;
  if (!first.layout_ptr() || first.empty() || F.empty()) return out;
  FourierTaylor T = first;
  double prev = majorant_norm(T, ctl.domain);
  double nrm = prev;
  bool converged = nrm <= ctl.tol;
  for (int m = m0 + 1; m <= ctl.max_order && !converged; ++m) {
    T = poisson_bracket(T, F, log) * Complex(1.0 / m);
    prev = nrm;
    nrm = majorant_norm(T, ctl.domain);
    out.value += T;
    out.order = m;
    converged = nrm <= ctl.tol || T.empty();
  }
  const double rho = prev > 0.0 ? nrm / prev : 0.0;
  if (rho < 1.0)
    out.tail_estimate = nrm * rho / (1.0 - rho);
  else
    out.tail_estimate = converged ? nrm : std::numeric_limits<double>::infinity();
  if (log) log->discarded += out.tail_estimate;
  return out;
}

SeriesSum lie_transform(const FourierTaylor& g, const FourierTaylor& F, const ExpansionControl& ctl,
                        TruncationLog* log) {
  if (F.empty() || g.empty()) return {g, 0, 0.0};
  auto tail = lie_tail(poisson_bracket(g, F, log), 1, F, ctl, log);
  tail.value += g;
  return tail;
}

Transformation Transformation::identity(const LayoutPtr& layout) {
  Transformation T;
  for (int l = 0; l < layout->n(); ++l) {
    T.U.push_back(FourierTaylor::action(layout, l));
    T.d.emplace_back(layout, true);
  }
  T.phi = ParamMap::identity(layout);
  return T;
}

bool Transformation::is_affine_structure() const {
  for (const auto& u : U)
    for (const auto& t : u.terms())
      if (u.layout().alpha_degree(t.alpha) > 1) return false;
  for (const auto& v : d)
    for (const auto& t : v.terms())
      if (t.alpha != 0) return false;
  return true;
}

Transformation::Point Transformation::apply(std::span<const Complex> action, std::span<const Complex> theta,
                                            std::span<const Complex> x) const {
  Point p;
  for (int l = 0; l < dim(); ++l) {
    p.action.push_back(U[static_cast<std::size_t>(l)].evaluate(action, theta, x));
    p.angle.push_back(theta[static_cast<std::size_t>(l)] + d[static_cast<std::size_t>(l)].evaluate(action, theta, x));
  }
  p.param = phi.apply(x);
  return p;
}

FlowResult time_one_flow(const FourierTaylor& F, const ExpansionControl& ctl) {
  const auto& layout = F.layout_ptr();
  FlowResult out;
  out.map = Transformation::identity(layout);
  if (F.empty()) return out;
  for (const auto& t : F.terms())
    if (F.layout().alpha_degree(t.alpha) > 1) throw domain_error("time-one flow needs F affine in I");
  TruncationLog log{ctl.domain, 0.0, 0.0};
  for (int l = 0; l < F.dim(); ++l) {
    auto u = lie_tail(-d_theta(F, l), 1, F, ctl, &log);
    out.map.U[static_cast<std::size_t>(l)] += u.value;
    auto v = lie_tail(d_action(F, l), 1, F, ctl, &log);
    out.map.d[static_cast<std::size_t>(l)] = v.value;
    out.max_order = std::max({out.max_order, u.order, v.order});
  }
  out.discard = log.discarded;
  return out;
}

namespace {

bool is_identity_action(const FourierTaylor& u, int l) {
  if (u.size() != 1) return false;
  const auto& t = u.terms()[0];
  const auto& L = u.layout();
  return t.mode == 0 && t.beta == 0 && L.alpha_degree(t.alpha) == 1 &&
         L.alpha(t.alpha)[static_cast<std::size_t>(l)] == 1 && t.c == Complex(1.0);
}

FourierTaylor shift_angles(const FourierTaylor& g, const std::vector<FourierTaylor>& d,
                           const ExpansionControl& ctl, TruncationLog* log) {
  bool trivial = true;
  for (const auto& v : d) trivial = trivial && v.empty();
  if (trivial || g.empty()) return g;
  const int n = g.dim();
  const auto& layout = g.layout_ptr();

  struct Node {
    Index4 mu;
    int last;  // largest index with mu_l > 0
    double inv_factorial;
    FourierTaylor deriv;
    FourierTaylor power;
  };
  std::vector<Node> level{{Index4{}, 0, 1.0, g, FourierTaylor::constant(layout, 1.0)}};
  FourierTaylor out = g;
  for (int m = 1; m <= ctl.max_order; ++m) {
    std::vector<Node> next;
    SeriesAccumulator acc(layout, log);
    for (const auto& node : level) {
      for (int l = node.last; l < n; ++l) {
        const auto& dl = d[static_cast<std::size_t>(l)];
        if (dl.empty()) continue;
        Node child;
        child.mu = node.mu;
        ++child.mu[static_cast<std::size_t>(l)];
        child.last = l;
        child.inv_factorial = node.inv_factorial / child.mu[static_cast<std::size_t>(l)];
        child.deriv = d_theta(node.deriv, l);
        if (child.deriv.empty()) continue;
        child.power = multiply(node.power, dl, log);
        acc.add_product(child.deriv, child.power, child.inv_factorial);
        next.push_back(std::move(child));
      }
    }
    const auto contrib = acc.finish(g.is_real());
    out += contrib;
    if (next.empty() || majorant_norm(contrib, ctl.domain) <= ctl.tol) break;
    if (m == ctl.max_order)
      throw NumericalError("truncation-budget", "angle shift expansion did not reach tolerance");
    level = std::move(next);
  }
  return out;
}

FourierTaylor substitute_actions(const FourierTaylor& g, const std::vector<FourierTaylor>& U,
                                 TruncationLog* log) {
  if (g.empty()) return g;
  const int n = g.dim();
  bool trivial = true;
  for (int l = 0; l < n; ++l) trivial = trivial && is_identity_action(U[static_cast<std::size_t>(l)], l);
  if (trivial) return g;
  const auto& L = g.layout();
  const auto& layout = g.layout_ptr();
  int maxdeg = 0;
  for (const auto& t : g.terms()) maxdeg = std::max(maxdeg, L.alpha_degree(t.alpha));
  std::vector<std::vector<FourierTaylor>> pw(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    auto& row = pw[static_cast<std::size_t>(l)];
    row.push_back(FourierTaylor::constant(layout, 1.0));
    for (int j = 1; j <= maxdeg; ++j)
      row.push_back(j == 1 ? U[static_cast<std::size_t>(l)] : multiply(row.back(), U[static_cast<std::size_t>(l)], log));
  }
  std::vector<std::vector<FourierTaylor::Term>> groups(static_cast<std::size_t>(L.num_alpha()));
  for (const auto& t : g.terms()) groups[t.alpha].push_back({t.mode, 0, t.beta, t.c});
  SeriesAccumulator acc(layout, log);
  for (int a = 0; a < L.num_alpha(); ++a) {
    auto& grp = groups[static_cast<std::size_t>(a)];
    if (grp.empty()) continue;
    const auto ga = FourierTaylor::adopt(layout, std::move(grp), g.is_real());
    if (a == 0) {
      acc.add(ga);
      continue;
    }
    const auto& alpha = L.alpha(a);
    FourierTaylor mono;
    for (int l = 0; l < n; ++l) {
      const int e = alpha[static_cast<std::size_t>(l)];
      if (e == 0) continue;
      const auto& p = pw[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)];
      mono = mono.layout_ptr() ? multiply(mono, p, log) : p;
    }
    acc.add_product(ga, mono);
  }
  bool real = g.is_real();
  for (const auto& u : U) real = real && u.is_real();
  return acc.finish(real);
}

}  // namespace

FourierTaylor compose(const FourierTaylor& g, const Transformation& T, const ExpansionControl& ctl,
                      TruncationLog* log) {
  if (!g.layout_ptr()) return g;
  auto g1 = substitute_param(g, T.phi, log);
  auto g2 = shift_angles(g1, T.d, ctl, log);
  return substitute_actions(g2, T.U, log);
}

Transformation compose_transforms(const Transformation& A, const Transformation& B,
                                  const ExpansionControl& ctl, TruncationLog* log) {
  if (A.dim() != B.dim()) throw domain_error("transformation dimension mismatch");
  Transformation out;
  for (int l = 0; l < A.dim(); ++l) {
    out.U.push_back(compose(A.U[static_cast<std::size_t>(l)], B, ctl, log));
    out.d.push_back(B.d[static_cast<std::size_t>(l)] + compose(A.d[static_cast<std::size_t>(l)], B, ctl, log));
  }
  out.phi = compose_params(A.phi, B.phi, log);
  return out;
}

double symplecticity_defect(const Transformation& T, double r, int samples, std::uint64_t seed) {
  const int n = T.dim();
  // Partial derivatives: rows (U, V), columns (I, theta).
  std::vector<FourierTaylor> dUdI, dUdT, dVdI, dVdT;
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m) {
      dUdI.push_back(d_action(T.U[static_cast<std::size_t>(l)], m));
      dUdT.push_back(d_theta(T.U[static_cast<std::size_t>(l)], m));
      dVdI.push_back(d_action(T.d[static_cast<std::size_t>(l)], m));
      dVdT.push_back(d_theta(T.d[static_cast<std::size_t>(l)], m));
    }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int N = 2 * n;
  double worst = 0.0;
  std::vector<Complex> I(static_cast<std::size_t>(n)), th(static_cast<std::size_t>(n)),
      x(static_cast<std::size_t>(n), 0.0);
  std::vector<double> M(static_cast<std::size_t>(N * N));
  for (int s = 0; s < samples; ++s) {
    for (int l = 0; l < n; ++l) {
      I[static_cast<std::size_t>(l)] = r * (2.0 * unit(rng) - 1.0);
      th[static_cast<std::size_t>(l)] = unit(rng);
    }
    auto ev = [&](const FourierTaylor& f) {
      return f.empty() ? 0.0 : f.evaluate(std::span<const Complex>(I), std::span<const Complex>(th),
                                          std::span<const Complex>(x)).real();
    };
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) {
        const std::size_t k = static_cast<std::size_t>(l * n + m);
        M[static_cast<std::size_t>(l * N + m)] = ev(dUdI[k]);
        M[static_cast<std::size_t>(l * N + n + m)] = ev(dUdT[k]);
        M[static_cast<std::size_t>((n + l) * N + m)] = ev(dVdI[k]);
        M[static_cast<std::size_t>((n + l) * N + n + m)] = (l == m ? 1.0 : 0.0) + ev(dVdT[k]);
      }
    // J = [[0, Id], [-Id, 0]] in (I, theta) ordering.
    auto J = [n](int a, int b) {
      if (a < n && b == a + n) return 1.0;
      if (a >= n && b == a - n) return -1.0;
      return 0.0;
    };
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) {
            const double jij = J(i, j);
            if (jij != 0.0) acc += M[static_cast<std::size_t>(i * N + a)] * jij * M[static_cast<std::size_t>(j * N + b)];
          }
        worst = std::max(worst, std::abs(acc - J(a, b)));
      }
  }
  return worst;
}

double weighted_distance_from_identity(const Transformation& T, const DomainParams& d, double w_action,
                                       double w_angle) {
  double worst = 0.0;
  for (int l = 0; l < T.dim(); ++l) {
    const auto id = FourierTaylor::action(T.U[static_cast<std::size_t>(l)].layout_ptr(), l);
    worst = std::max(worst, w_action * majorant_norm(T.U[static_cast<std::size_t>(l)] - id, d));
    worst = std::max(worst, w_angle * majorant_norm(T.d[static_cast<std::size_t>(l)], d));
  }
  return worst;
}

}  // namespace kam
