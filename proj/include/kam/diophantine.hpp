#pragma once

// Arithmetic of the target frequency: the worst-divisor function Psi, its
// companion Delta(Q) = Q Psi(Q) and generalized inverse Delta*, truncated
// Bruno-Russmann tails, and simultaneous rational approximations whose
// scaled numerators form a Z-basis of Z^n.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kam {

/// Target frequency omega0 = (1, omega_bar) with |omega_bar_j| <= 1.
class FrequencyVector {
 public:
  explicit FrequencyVector(std::vector<double> omega);

  /// Named presets: "golden", "sqrt2", "cubic-root" (n = 3).
  static FrequencyVector preset(std::string_view name);
  /// Accepts a preset name or a comma separated list of decimals.
  static FrequencyVector parse(std::string_view text);

  int dim() const noexcept { return static_cast<int>(omega_.size()); }
  double operator[](int j) const { return omega_[static_cast<std::size_t>(j)]; }
  std::span<const double> values() const noexcept { return omega_; }

 private:
  std::vector<double> omega_;
};

/// A q-periodic rational direction v = numerators / q with numerators[0] = q.
struct RationalVector {
  std::int64_t q = 1;
  std::vector<std::int64_t> numerators;

  int dim() const noexcept { return static_cast<int>(numerators.size()); }
  double value(int j) const {
    return static_cast<double>(numerators[static_cast<std::size_t>(j)]) / static_cast<double>(q);
  }
  /// Exact integer pairing k . (q v).
  std::int64_t pair(std::span<const int> k) const;
  /// Sup-norm distance |omega - v|, recomputed from scratch.
  double distance(const FrequencyVector& omega) const;
};

struct RationalBasis {
  std::vector<RationalVector> vectors;
  std::vector<double> approx_error;  // |omega0 - v_j|_inf
  std::vector<double> score;         // q_j * Q * |omega0 - v_j|_inf
  double Q = 1.0;
  std::int64_t determinant = 0;      // of the matrix with columns q_j v_j

  double max_score() const;
};

/// Enumeration limits for the exhaustive lattice searches.
struct EnumerationBudget {
  int max_dim = 4;
  int max_l1 = 200;
  std::int64_t max_points = 200'000'000;
  double resonance_tol = 1e-12;  // |k.omega| at or below this counts as resonant
};

struct PsiResult {
  double value = 0.0;          // +inf on resonance
  std::vector<int> minimizer;  // k realizing the smallest |k.omega|
  double min_divisor = 0.0;    // |k.omega| at the minimizer
  bool resonant = false;
};

/// Psi(Q) = max over 0 < |k|_1 <= floor(Q) of |k.omega|^-1, by enumeration.
PsiResult psi(const FrequencyVector& omega, double Q, const EnumerationBudget& budget = {});

/// Number of integer vectors with |k|_1 <= radius in dimension n.
std::int64_t lattice_ball_size(int n, int radius);

/// Monotone tables of Psi and Delta on the integer grid Q = 1..qmax.
class ArithmeticProfile {
 public:
  static ArithmeticProfile build(const FrequencyVector& omega, int qmax,
                                 const EnumerationBudget& budget = {});

  const FrequencyVector& omega() const noexcept { return omega_; }
  int qmax() const noexcept { return static_cast<int>(psi_.size()); }
  double psi(int Q) const;
  double delta(int Q) const;
  const std::vector<int>& minimizer(int Q) const;
  bool resonant() const noexcept { return resonant_; }
  /// Delta(qmax), the upper end of the tabulated range.
  double delta_max() const { return delta(qmax()); }

 private:
  explicit ArithmeticProfile(FrequencyVector omega) : omega_(std::move(omega)) {}
  FrequencyVector omega_;
  std::vector<double> psi_;
  std::vector<double> delta_;
  std::vector<std::vector<int>> minimizers_;
  bool resonant_ = false;
};

/// Largest tabulated integer Q with Delta(Q) <= x.
int delta_star(const ArithmeticProfile& profile, double x);

struct BrTail {
  double value = 0.0;     // Q0^-1 + (ln 2)^-1 * integral
  double integral = 0.0;  // integral of dx / (x Delta*(x)) over [Delta(Q0), xcut]
  double xcut = 0.0;
  bool truncated = true;  // the true integral runs to +inf; heuristic within cutoff
};

BrTail bruno_russmann_tail(const ArithmeticProfile& profile, int Q0, double xcut);

struct Q0Choice {
  int q0 = 1;
  BrTail tail;
  double threshold = 0.0;  // s / (2 C)
};

/// Smallest tabulated Q0 whose truncated tail is at most s / (2C).
/// xcut <= 0 selects Delta(qmax).
Q0Choice choose_q0(const ArithmeticProfile& profile, double s, double C, double xcut = 0.0);

struct BasisSearch {
  double c_den = 2.0;       // denominators q <= ceil(c_den * Psi(Q))
  int top_candidates = 48;  // subset search width
  int combo_bound = 2;      // coefficient bound for column combinations
  double q_min = 1.0;       // smallest admissible approximation scale
};

/// n rational Q-approximations of omega whose scaled numerators are unimodular.
RationalBasis rational_basis(const FrequencyVector& omega, double Q, const BasisSearch& search = {},
                             const EnumerationBudget& budget = {});

/// Exact determinant of a small integer matrix (row-major, n x n).
std::int64_t integer_determinant(std::span<const std::int64_t> m, int n);

}  // namespace kam
