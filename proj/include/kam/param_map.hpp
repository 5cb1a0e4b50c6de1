#pragma once

// Parameter maps x -> x + shift(x) on the polydisc O_h (x = omega - omega0),
// substitution of such maps into series, and inversion of f(x) = x + nu(x).

#include <vector>

#include "kam/series.hpp"

namespace kam {

/// phi(x) = x + shift(x); each shift component is a series with only the
/// zero Fourier mode and no action dependence.
struct ParamMap {
  std::vector<FourierTaylor> shift;

  static ParamMap identity(const LayoutPtr& layout);
  int dim() const { return static_cast<int>(shift.size()); }
  /// phi(x) - x at a complex parameter offset.
  std::vector<Complex> shift_at(std::span<const Complex> x) const;
  /// phi(x) at a complex parameter offset.
  std::vector<Complex> apply(std::span<const Complex> x) const;
  ParamMap relayout_to(const LayoutPtr& layout, TruncationLog* log = nullptr) const;
};

/// Throws unless every term of f has mode 0 and alpha = 0.
void require_parameter_only(const FourierTaylor& f, const char* what);

/// g(I, theta, x + shift(x)), truncated to the degree cap of g's layout.
FourierTaylor substitute_param(const FourierTaylor& g, const ParamMap& phi, TruncationLog* log = nullptr);

/// (phi_a o phi_b)(x) = phi_a(phi_b(x)).
ParamMap compose_params(const ParamMap& a, const ParamMap& b, TruncationLog* log = nullptr);

struct InversionConfig {
  int degree = 24;        // polynomial degree of the computed inverse
  double tol = 1e-15;     // stop when successive iterates differ by less (majorant, O_{h/4})
  int max_iter = 200;
};

struct InversionResult {
  ParamMap phi;                  // in the parameter-only layout of degree cfg.degree
  double delta = 0.0;            // |nu|_h
  double phi_minus_id = 0.0;     // |phi - Id|_{h/4}
  double dphi_minus_id = 0.0;    // (h/4) |D phi - Id|_{h/4}
  int iterations = 0;
  double last_step = 0.0;
  bool certificates_hold = true;
};

/// Inverse of f(x) = x + nu(x) on O_{h/4} by phi <- Id - nu o phi.
/// Throws a condition error if |nu|_h > h/4 and a numerical error when the
/// iteration does not contract.
InversionResult invert_frequency_map(const std::vector<FourierTaylor>& nu, double h,
                                     const InversionConfig& cfg = {});

}  // namespace kam
