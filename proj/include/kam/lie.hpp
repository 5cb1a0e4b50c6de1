#pragma once

// Lie series for time-one maps of Hamiltonian flows, and composition of
// symplectic transformations Phi = (U, V) with U affine in I and V - theta
// independent of I, together with their parameter maps.

#include <cstdint>
#include <vector>

#include "kam/param_map.hpp"
#include "kam/series.hpp"

namespace kam {

/// Truncation control for series expansions. A term of order m is kept
/// when its majorant on `domain` exceeds tol, and the expansion stops at
/// the first order below tol or at max_order.
struct ExpansionControl {
  DomainParams domain{};
  double tol = 0.0;
  int max_order = 40;
};

struct SeriesSum {
  FourierTaylor value;
  int order = 0;             // highest order included
  double tail_estimate = 0;  // geometric estimate of the omitted orders
};

/// sum_{m >= m0} T_m with T_m = {T_{m-1}, F} / m, starting from T_{m0} = first.
/// The tail estimate is added to the log.
SeriesSum lie_tail(const FourierTaylor& first, int m0, const FourierTaylor& F, const ExpansionControl& ctl,
                   TruncationLog* log);

/// g o X^1_F = sum_m L^m g / m!, L g = {g, F}.
SeriesSum lie_transform(const FourierTaylor& g, const FourierTaylor& F, const ExpansionControl& ctl,
                        TruncationLog* log);

/// (Phi, phi) with U_l = I_l + ..., V_l = theta_l + d_l.
struct Transformation {
  std::vector<FourierTaylor> U;
  std::vector<FourierTaylor> d;
  ParamMap phi;

  static Transformation identity(const LayoutPtr& layout);
  int dim() const { return static_cast<int>(U.size()); }
  bool is_affine_structure() const;

  struct Point {
    std::vector<Complex> action, angle, param;
  };
  Point apply(std::span<const Complex> action, std::span<const Complex> theta,
              std::span<const Complex> x) const;
};

struct FlowResult {
  Transformation map;
  double discard = 0.0;
  int max_order = 0;
};

/// Time-one map of the flow of F (F affine in I): theta' = dF/dI, I' = -dF/dtheta.
FlowResult time_one_flow(const FourierTaylor& F, const ExpansionControl& ctl);

/// g(U, theta + d, phi(x)) for a transformation T; log collects truncations.
FourierTaylor compose(const FourierTaylor& g, const Transformation& T, const ExpansionControl& ctl,
                      TruncationLog* log);

/// A o B as maps (I, theta, x) -> ..., i.e. Phi_A(Phi_B(., x), phi_B(x)) and phi_A o phi_B.
Transformation compose_transforms(const Transformation& A, const Transformation& B,
                                  const ExpansionControl& ctl, TruncationLog* log);

/// Max over sampled real points (I in [-r, r]^n, theta in T^n, x = 0) of the
/// entrywise defect of DPhi^T J DPhi - J.
double symplecticity_defect(const Transformation& T, double r, int samples, std::uint64_t seed);

/// |W (Phi - Id)| and related certificates on a domain, W = Diag(wI, wTheta).
double weighted_distance_from_identity(const Transformation& T, const DomainParams& d, double w_action,
                                       double w_angle);

}  // namespace kam
