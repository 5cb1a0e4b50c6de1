#pragma once

// Averaging operators, the bounded-divisor homological solver, and the
// Cauchy/linearization estimates used by the KAM step.

#include <string>

#include "kam/diophantine.hpp"
#include "kam/series.hpp"

namespace kam {

/// Torus average [f]: keeps the k = 0 coefficients.
FourierTaylor average_full(const FourierTaylor& f);

/// Average along the q-periodic flow of v: keeps the modes with k.(q v) = 0.
FourierTaylor average_along(const FourierTaylor& f, const RationalVector& v);

/// Solves {F, v.I} = rhs. Coefficients are rhs(k) / (2 pi i k.v) and every
/// divisor satisfies |k.v| >= 1/q. Throws if rhs has a nonzero coefficient
/// on a mode with k.(q v) = 0.
FourierTaylor solve_homological(const FourierTaylor& rhs, const RationalVector& v);

struct Linearization {
  FourierTaylor affine;      // terms with |alpha| <= 1
  double tail_norm = 0.0;    // majorant norm of f - affine on the shrunk domain (c r, s, h)
  double lemma_bound = 0.0;  // c^2 / (1 - c) |f|_{r,s,h}
  bool within_bound = true;
};

/// Splits f into its part affine in I and the tail, measuring the tail on
/// the action radius shrunk by the factor c in (0, 1).
Linearization linearize_in_i(const FourierTaylor& f, const DomainParams& d, double c);

enum class ShrinkDirection { Action, Angle, Param };

struct CauchyBound {
  double derivative_norm = 0.0;  // max over components of the first derivative, shrunk domain
  double cauchy_bound = 0.0;     // |f|_d / amount
  bool holds = true;
};

/// Exact majorant of the first derivatives in the chosen direction on the
/// domain shrunk by `amount`, compared with the Cauchy inequality.
CauchyBound shrink_cauchy_bound(const FourierTaylor& f, const DomainParams& d, ShrinkDirection dir,
                                double amount);

std::string format_mode(const SeriesLayout& L, int mode);

}  // namespace kam
