#pragma once

// H(p, q) = h(p) + eps f(p, q) with polynomial h and trigonometric f, and its
// reduction to N(I, x) + P(I, theta, x) on the parameter omega = omega0 + x:
// p = g(x) + I with grad h(g(x)) = omega, e = h o g, P = P_h + eps f(g + I, theta).

#include <span>
#include <string>
#include <vector>

#include "kam/diophantine.hpp"
#include "kam/kam_iterate.hpp"
#include "kam/series.hpp"

namespace kam {

struct Monomial {
  std::vector<int> exps;  // exponent of each p_l
  double coeff = 0.0;
};

/// coeff_p(p) * (a cos 2 pi k.q + b sin 2 pi k.q), coeff_p = prod p_l^p_exps[l]
struct TrigTerm {
  std::vector<int> k;
  std::vector<int> p_exps;  // empty means no p dependence
  double a = 0.0;
  double b = 0.0;
};

struct IntegrableSpec {
  FrequencyVector omega;
  std::vector<Monomial> h;
  std::vector<TrigTerm> f;
  double eps = 0.0;
  double action_box = 1.0;  // half-width of the action box D around 0

  int dim() const { return omega.dim(); }
  void validate() const;

  double h_value(std::span<const double> p) const;
  void h_gradient(std::span<const double> p, std::span<double> out) const;
  /// Row-major n x n.
  std::vector<double> h_hessian(std::span<const double> p) const;
  double f_value(std::span<const double> p, std::span<const double> q) const;
  double energy(std::span<const double> p, std::span<const double> q) const;
  /// (dp/dt, dq/dt) = (-dH/dq, dH/dp).
  void vector_field(std::span<const double> p, std::span<const double> q, std::span<double> pdot,
                    std::span<double> qdot) const;
};

struct ReductionConfig {
  double c_smallness = 1.0 / 16.0;  // eps_param r^-1 <= c h, i.e. eps <= c^2 h^2 / (4 M F)
  bool enforce = true;
  double cond_cap = 1e8;        // Hessian condition number cap
  double normalization_tol = 1e-12;
  double r_override = 0.0;  // > 0 replaces (F eps / M)^(1/2)
};

struct ReductionRecipe {
  double M = 0.0;          // |P_h|_{1, s, h}
  double F = 0.0;          // |f(g + I, theta)|_{1, s, h}
  double r = 0.0;          // (F eps / M)^(1/2)
  double eps_param = 0.0;  // M r^2 + F eps = 2 F eps
  double hessian_cond = 0.0;
  double smallness_lhs = 0.0;  // eps_param / r
  double smallness_rhs = 0.0;  // c h
  double eps_threshold = 0.0;  // c^2 h^2 / (4 M F)
  bool smallness_pass = false;
  double truncation_discard = 0.0;
  double inverse_residual = 0.0;  // |grad h(g(x)) - omega0 - x|_h
};

struct ReducedSystem {
  ParamHamiltonian H;
  DomainParams domain;
  ReductionRecipe recipe;
};

/// `hint` supplies s and h; r is fixed by the recipe.
ReducedSystem reduce_to_param_form(const IntegrableSpec& spec, const LayoutPtr& layout, const DomainParams& hint,
                                   const ReductionConfig& cfg = {});

struct PlacedTorus {
  std::vector<double> action_offset;  // I~ with grad h(I~) = omega~
  int newton_iterations = 0;
  TorusEmbedding embedding;           // theta -> (I~ + I(theta), theta + V(theta))
};

PlacedTorus place_torus(const TorusResult& result, const IntegrableSpec& spec, double newton_tol = 1e-14);

}  // namespace kam
