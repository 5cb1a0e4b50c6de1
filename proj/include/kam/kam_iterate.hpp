#pragma once

// The iteration of KAM steps along the schedule
//   eps_i = (eta/8)^i eps, r_i = eta^i r, h_i = h / 4^i,
//   Delta_i = 2^i Delta(Q0), Q_i = Delta*(Delta_i), sigma_i = C / Q_i, s_{i+1} = s_i - sigma_i,
// composing F^{i+1} = F^i o F_i and extracting the torus at omega = omega0.

#include <optional>
#include <string>
#include <vector>

#include "kam/diophantine.hpp"
#include "kam/kam_step.hpp"
#include "kam/lie.hpp"
#include "kam/series.hpp"

namespace kam {

struct ScheduleConfig {
  double eta = 1.0 / 66.0;
  double C = 1.0;
  int q0 = 0;  // 0 selects the smallest Q0 satisfying the tail inequality
  int max_iters = 12;
  ConditionConstants constants{};  // used for the initial condition on (eps, r, h, Q0)
};

struct Schedule {
  double eta = 1.0 / 66.0;
  double C = 1.0;
  int q0 = 0;
  BrTail tail;
  std::vector<double> eps, r, h, s, sigma, delta;
  std::vector<int> Q;
  double sum_sigma = 0.0;
  std::vector<ConditionCheck> checks;

  int size() const { return static_cast<int>(Q.size()); }
  DomainParams domain(int i) const {
    return {r[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(i)]};
  }
};

/// Arrays for i = 0..max_iters; s has one more entry than the others.
Schedule build_schedule(const ArithmeticProfile& profile, const DomainParams& d, double eps,
                        const ScheduleConfig& cfg);

struct ParamHamiltonian {
  FrequencyVector omega;
  FourierTaylor e;  // parameter-only
  FourierTaylor P;
};

struct IterateConfig {
  StepConfig step{};
  EnumerationBudget budget{};
  BasisSearch basis{};
  double stop_tol = 1e-14;       // stop when |P_i| <= stop_tol * eps
  double jacobian_bound = 2.0;   // bound on prod (1 + step distance)
  double reality_tol = 1e-12;
  double compose_tol_factor = 1e-4;  // composition expansions stop at factor * eps_{i+1}
  double compose_budget = 1e-2;      // allowed composition discard, as a fraction of eps_{i+1}
};

struct IterationRecord {
  int i = 0;
  double eps = 0.0, r = 0.0, h = 0.0, s = 0.0, sigma = 0.0, delta = 0.0;
  int Q = 0;
  double norm_P = 0.0;       // |P_i|_{r_i,s_i,h_i}
  bool envelope_ok = true;   // norm_P <= eps_i
  double telescope = 0.0;    // |Wbar_0 (F^{i+1} - F^i)|_{r_{i+1},s_{i+1},h_{i+1}}
  double telescope_scale = 0.0;  // eps_i (r_i h_i)^-1
  double step_distance = 0.0;    // |Wbar_i (F_i - Id)|
  double jacobian_product = 1.0;
  double compose_discard = 0.0;
  StepReport report;
  bool has_step = false;
};

/// theta -> (I(theta), theta + shift(theta)), both theta-only series.
struct TorusEmbedding {
  std::vector<double> base;  // constant action offset (zero in the parameter chart)
  std::vector<FourierTaylor> action;
  std::vector<FourierTaylor> shift;

  int dim() const { return static_cast<int>(action.size()); }
  static TorusEmbedding flat(const LayoutPtr& layout);
  void evaluate(std::span<const double> theta, std::span<double> p, std::span<double> q) const;
};

struct TorusResult {
  TorusEmbedding embedding;
  std::vector<double> omega_tilde;
  double freq_shift = 0.0;          // |omega_tilde - omega0|_inf
  double w_embedding = 0.0;         // |W (Phi_omega0 - Phi_0)|_{s/2}, W = Diag(r^-1, Q0^-1)
  double w_embedding_sigma = 0.0;   // same with the angle weight sigma_0^-1
  double c4_surrogate = 0.0;        // w_embedding r h / eps
  double c5_surrogate = 0.0;        // freq_shift r / eps
  double telescope_sum = 0.0;
  double final_remainder = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
  std::vector<IterationRecord> history;
  Transformation transform;
  std::optional<ParamHamiltonian> final_form;
};

TorusResult iterate(const ParamHamiltonian& H0, const ArithmeticProfile& profile, const Schedule& schedule,
                    const IterateConfig& cfg);

}  // namespace kam
