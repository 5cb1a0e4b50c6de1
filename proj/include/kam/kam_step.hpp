#pragma once

// One elementary KAM step for H = N + P, N(I, x) = e(x) + (omega0 + x).I:
// linearize P in I, average along the n rational directions of a unimodular
// basis, compose the n time-one flows, and renormalize the parameter so
// that H o F = N+ + P+ with N+(I, x) = e+(x) + (omega0 + x).I.

#include <cstdint>
#include <string>
#include <vector>

#include "kam/diophantine.hpp"
#include "kam/lie.hpp"
#include "kam/param_map.hpp"
#include "kam/series.hpp"

namespace kam {

/// Constants standing in for the implicit ones of the step conditions
///   eps r^-1 <= c_eps_r * h,  h <= c_h_delta * (Q Psi(Q))^-1,  1 <= c_q_sigma * Q sigma.
struct ConditionConstants {
  double c_eps_r = 1.0 / 16.0;
  double c_h_delta = 1.0 / 16.0;
  double c_q_sigma = 1.0 / 16.0;
  bool enforce = true;
};

struct StepConfig {
  double eta = 1.0 / 66.0;
  ConditionConstants constants{};
  bool enforce_flow_bounds = true;
  double lie_tol_factor = 1e-4;     // Lie series stop: tol = factor * eta eps / 16
  double truncation_budget = 1e-3;  // flow discard budget, as a fraction of eta eps / 16
  double drop_factor = 1e-6;        // pruning threshold, as a fraction of eta eps / 16
  int max_order = 40;
  InversionConfig inversion{};
  int sym_samples = 100;
  std::uint64_t seed = 1;
};

struct ConditionCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
  bool enforced = false;
};

struct StageReport {
  int j = 0;
  std::int64_t q = 0;
  bool skipped = false;
  double norm_P = 0.0;           // |P_j|_{r,s,h}
  double norm_F = 0.0;           // |F_j|_{r,s,h}
  double norm_F_bound = 0.0;     // q_j |P_j|_{r,s,h}
  double dtheta_F = 0.0;         // |d_theta F_j|_{r_j,s_j,h}
  double dtheta_bound = 0.0;     // r / (2n)
  double daction_F = 0.0;        // |d_I F_j|_{r_j,s_j,h}
  double daction_bound = 0.0;    // sigma / n
  double conjugacy_defect = 0.0; // |{F_j, v_j.I} - (P_j - P_{j+1})|
  double flow_discard = 0.0;
  int flow_order = 0;
  double norm_Ptilde = 0.0;      // |P~_j|_{r_j,s_j,h}
  double ptilde_ratio = 0.0;     // |P~_j| Q sigma / eps
  double shift = 0.0;            // |omega0 - v_j| + h
  double shift_ratio = 0.0;      // shift * q_j * Q
};

struct StepReport {
  double eps = 0.0, r = 0.0, s = 0.0, h = 0.0, sigma = 0.0, Q = 0.0, psi_Q = 0.0, eta = 0.0;
  double input_norm = 0.0;  // measured |P|_{r,s,h}
  RationalBasis basis;
  std::vector<StageReport> stages;
  std::vector<ConditionCheck> checks;

  double tail_norm = 0.0;       // |P - Pbar|_{2 eta r, s, h}
  double tail_bound = 0.0;      // eta eps / 16
  double tail_lemma = 0.0;      // (2 eta)^2 / (1 - 2 eta) |P|_{r,s,h}
  double norm_Pn_plus = 0.0;    // |P_n^+|_{eta r, s - sigma, h}
  double norm_transport = 0.0;  // |(P - Pbar) o Phi|_{eta r, s - sigma, h}
  double norm_Pplus = 0.0;      // |P^+|_{eta r, s - sigma, h/4} after reparametrization
  double pplus_bound = 0.0;     // eta eps / 8
  double truncation_discard = 0.0;

  double nu_norm = 0.0;         // |nu|_h
  double nu_ratio = 0.0;        // |nu|_h r / eps
  int inversion_iterations = 0;
  double phi_minus_id = 0.0;    // |phi - Id|_{h/4}
  double dphi_minus_id = 0.0;   // h |D phi - Id|_{h/4}

  double w_phi_minus_id = 0.0;   // |W (Phi - Id)|_{eta r, s - sigma, h}
  double w_dphi_minus_id = 0.0;  // |W (D Phi - Id) W^-1|_{eta r, s - sigma, h}
  double symplecticity = 0.0;

  bool success = false;
};

struct StepInput {
  FrequencyVector omega;
  FourierTaylor e;  // parameter-only energy term of N
  FourierTaylor P;
  DomainParams domain;
  double sigma = 0.0;
  double Q = 1.0;
  double psi_Q = 1.0;
  double eps = 0.0;  // the bound eps of the step; <= 0 uses the measured |P|
  RationalBasis basis;
};

struct StepResult {
  FourierTaylor e_plus;
  FourierTaylor P_plus;
  Transformation T;                     // (Phi(., phi(x')), phi)
  std::vector<FourierTaylor> generators;  // F_1 ... F_n
  StepReport report;
};

/// S = (omega - v).I = (omega0 - v + x).I, the detuning from the rational direction v.
FourierTaylor detuning(const LayoutPtr& layout, const FrequencyVector& omega, const RationalVector& v,
                       TruncationLog* log = nullptr);

/// Remainder of one averaging stage, (N + P_j) o X^1_F - N - P_{j+1}, given
/// S + P_j and R = P_j - P_{j+1} with {F, v.I} = R.
SeriesSum stage_remainder(const FourierTaylor& s_plus_p, const FourierTaylor& R, const FourierTaylor& F,
                          const ExpansionControl& ctl, TruncationLog* log);

/// The output domain (eta r, s - sigma, h / 4).
DomainParams step_output_domain(const DomainParams& d, double sigma, double eta);

StepResult kam_step(const StepInput& in, const StepConfig& cfg = {});

}  // namespace kam
