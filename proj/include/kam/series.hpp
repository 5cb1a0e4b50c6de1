#pragma once

// Truncated Fourier-Taylor expansions
//
//   f(I, theta, x) = sum c(k, alpha, beta) e^{2 pi i k.theta} I^alpha x^beta
//
// on T^n x (actions) x (parameter offset x = omega - omega0), with the
// weighted majorant norm
//
//   |f|_{r,s,h} = sum |c| e^{2 pi |k|_1 s} r^{|alpha|} h^{|beta|}
//
// which dominates the sup norm on D_{r,s} x O_h and is submultiplicative.
// Terms are stored sparsely in a fixed order so that every floating point
// reduction is reproducible bit for bit.

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace kam {

inline constexpr int kMaxDim = 4;

using Complex = std::complex<double>;
using Index4 = std::array<int, kMaxDim>;

/// Radii of the complex domain D_{r,s} x O_h.
struct DomainParams {
  double r = 1.0;  // action radius
  double s = 0.1;  // strip width in the angles
  double h = 1.0;  // parameter polydisc radius

  /// Throws unless every radius lies in (0, 1].
  void validate() const;
};

/// Immutable index tables shared by all series of one shape.
class SeriesLayout {
 public:
  static std::shared_ptr<const SeriesLayout> get(int n, int cutoff_k, int deg_i, int deg_w);

  int n() const noexcept { return n_; }
  int cutoff_k() const noexcept { return cutoff_k_; }
  int deg_i() const noexcept { return deg_i_; }
  int deg_w() const noexcept { return deg_w_; }

  int num_modes() const noexcept { return static_cast<int>(modes_.size()); }
  int num_alpha() const noexcept { return static_cast<int>(alphas_.size()); }
  int num_beta() const noexcept { return static_cast<int>(betas_.size()); }
  std::size_t flat_size() const noexcept {
    return modes_.size() * alphas_.size() * betas_.size();
  }
  std::size_t flat(int mode, int alpha, int beta) const noexcept {
    return (static_cast<std::size_t>(mode) * alphas_.size() + static_cast<std::size_t>(alpha)) *
               betas_.size() + static_cast<std::size_t>(beta);
  }

  const Index4& mode(int m) const { return modes_[static_cast<std::size_t>(m)]; }
  int mode_l1(int m) const { return mode_l1_[static_cast<std::size_t>(m)]; }
  int mode_neg(int m) const { return mode_neg_[static_cast<std::size_t>(m)]; }
  /// Index of k, or -1 if |k|_1 exceeds the cutoff.
  int mode_index(std::span<const int> k) const;
  /// Index of k1 + k2, or -1 if outside the cutoff.
  int mode_sum(int m1, int m2) const {
    return box_[static_cast<std::size_t>(mode_box_[static_cast<std::size_t>(m1)] +
                                          mode_box_[static_cast<std::size_t>(m2)] - box_center_)];
  }
  int zero_mode() const noexcept { return 0; }

  const Index4& alpha(int a) const { return alphas_[static_cast<std::size_t>(a)]; }
  const Index4& beta(int b) const { return betas_[static_cast<std::size_t>(b)]; }
  int alpha_degree(int a) const { return alpha_deg_[static_cast<std::size_t>(a)]; }
  int beta_degree(int b) const { return beta_deg_[static_cast<std::size_t>(b)]; }
  int alpha_index(std::span<const int> a) const;
  int beta_index(std::span<const int> b) const;
  int alpha_sum(int a1, int a2) const {
    return alpha_sum_[static_cast<std::size_t>(a1) * alphas_.size() + static_cast<std::size_t>(a2)];
  }
  int beta_sum(int b1, int b2) const {
    return beta_sum_[static_cast<std::size_t>(b1) * betas_.size() + static_cast<std::size_t>(b2)];
  }
  /// alpha - e_l, or -1 when alpha_l == 0.
  int alpha_lower(int a, int l) const { return alpha_lower_[static_cast<std::size_t>(a * n_ + l)]; }
  /// alpha + e_l, or -1 when beyond deg_i.
  int alpha_raise(int a, int l) const { return alpha_raise_[static_cast<std::size_t>(a * n_ + l)]; }
  int beta_lower(int b, int l) const { return beta_lower_[static_cast<std::size_t>(b * n_ + l)]; }

  SeriesLayout(int n, int cutoff_k, int deg_i, int deg_w);

 private:
  int n_, cutoff_k_, deg_i_, deg_w_;
  std::vector<Index4> modes_;
  std::vector<int> mode_l1_, mode_neg_, mode_box_;
  std::vector<int> box_;
  int box_center_ = 0;
  int box_base_ = 0;
  std::vector<Index4> alphas_, betas_;
  std::vector<int> alpha_deg_, beta_deg_;
  std::vector<int> alpha_sum_, beta_sum_;
  std::vector<int> alpha_lower_, alpha_raise_, beta_lower_;
};

using LayoutPtr = std::shared_ptr<const SeriesLayout>;

/// Records what truncation and pruning threw away, measured as a majorant
/// norm on `domain`. Terms whose weighted size is below drop_tol are pruned.
struct TruncationLog {
  DomainParams domain{};
  double drop_tol = 0.0;
  double discarded = 0.0;
};

class FourierTaylor {
 public:
  struct Term {
    std::uint32_t mode;
    std::uint16_t alpha;
    std::uint16_t beta;
    Complex c;
  };

  FourierTaylor() = default;
  explicit FourierTaylor(LayoutPtr layout, bool real = true) : layout_(std::move(layout)), real_(real) {}

  /// Builds from unordered (mode, alpha, beta, c) triples; duplicates are summed.
  /// With real = true, conjugate symmetry c(-k) = conj(c(k)) is enforced.
  static FourierTaylor from_terms(LayoutPtr layout, std::span<const Term> terms, bool real);

  static FourierTaylor constant(LayoutPtr layout, Complex c);
  /// The action coordinate I_l.
  static FourierTaylor action(LayoutPtr layout, int l);
  /// The parameter offset x_l = (omega - omega0)_l.
  static FourierTaylor parameter(LayoutPtr layout, int l);
  /// a cos(2 pi k.theta) and a sin(2 pi k.theta).
  static FourierTaylor cosine(LayoutPtr layout, std::span<const int> k, double a);
  static FourierTaylor sine(LayoutPtr layout, std::span<const int> k, double a);

  const LayoutPtr& layout_ptr() const noexcept { return layout_; }
  const SeriesLayout& layout() const { return *layout_; }
  int dim() const { return layout_->n(); }
  bool is_real() const noexcept { return real_; }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }
  std::span<const Term> terms() const noexcept { return terms_; }

  Complex coeff(std::span<const int> k, std::span<const int> alpha, std::span<const int> beta) const;
  Complex coeff(int mode, int alpha, int beta) const;

  /// Pointwise value; `action`, `theta`, `x` must each have dim() entries.
  Complex evaluate(std::span<const Complex> action, std::span<const Complex> theta,
                   std::span<const Complex> x) const;
  /// Real-point evaluation helper.
  Complex evaluate(std::span<const double> action, std::span<const double> theta,
                   std::span<const double> x) const;

  FourierTaylor& operator+=(const FourierTaylor& o);
  FourierTaylor& operator-=(const FourierTaylor& o);
  FourierTaylor& operator*=(Complex a);
  friend FourierTaylor operator+(FourierTaylor a, const FourierTaylor& b) { return a += b; }
  friend FourierTaylor operator-(FourierTaylor a, const FourierTaylor& b) { return a -= b; }
  friend FourierTaylor operator*(FourierTaylor a, Complex s) { return a *= s; }
  friend FourierTaylor operator*(Complex s, FourierTaylor a) { return a *= s; }
  FourierTaylor operator-() const { return *this * Complex(-1.0); }

  /// Keeps the terms for which pred(term) is true.
  template <class Pred>
  FourierTaylor filter(Pred pred) const {
    FourierTaylor out(layout_, real_);
    for (const auto& t : terms_)
      if (pred(t)) out.terms_.push_back(t);
    return out;
  }
  /// Applies c -> fn(term) termwise, dropping exact zeros.
  template <class Fn>
  FourierTaylor map_coeffs(Fn fn, bool real) const {
    FourierTaylor out(layout_, real);
    for (const auto& t : terms_) {
      const Complex c = fn(t);
      if (c != Complex(0.0)) out.terms_.push_back({t.mode, t.alpha, t.beta, c});
    }
    return out;
  }

  /// Internal: adopt an already sorted term list.
  static FourierTaylor adopt(LayoutPtr layout, std::vector<Term> sorted, bool real);

 private:
  LayoutPtr layout_;
  bool real_ = true;
  std::vector<Term> terms_;
};

/// Weight e^{2 pi |k|_1 s} r^{|alpha|} h^{|beta|} of one term.
double term_weight(const SeriesLayout& L, const FourierTaylor::Term& t, const DomainParams& d);

/// Weighted l1 majorant norm.
double majorant_norm(const FourierTaylor& f, const DomainParams& d);
/// Max over components, the outer norm used for vector valued objects.
double majorant_norm(std::span<const FourierTaylor> fs, const DomainParams& d);

/// Dense accumulator producing a truncated, pruned series.
class SeriesAccumulator {
 public:
  SeriesAccumulator(LayoutPtr layout, TruncationLog* log);

  void add(const FourierTaylor& f, Complex scale = 1.0);
  /// += scale * a * b, truncated to the layout caps.
  void add_product(const FourierTaylor& a, const FourierTaylor& b, Complex scale = 1.0);
  void add_term(int mode, int alpha, int beta, Complex c);
  FourierTaylor finish(bool real);

 private:
  LayoutPtr layout_;
  TruncationLog* log_;
  std::vector<Complex> dense_;
  std::vector<char> touched_;
  std::vector<std::size_t> touched_list_;
};

FourierTaylor multiply(const FourierTaylor& a, const FourierTaylor& b, TruncationLog* log = nullptr);

/// d/d theta_l (multiplies mode k by 2 pi i k_l).
FourierTaylor d_theta(const FourierTaylor& f, int l);
/// d/d I_l.
FourierTaylor d_action(const FourierTaylor& f, int l);
/// d/d x_l (parameter derivative).
FourierTaylor d_param(const FourierTaylor& f, int l);

/// Poisson bracket {f, g} = d_theta f . d_I g - d_I f . d_theta g.
/// With this sign the Lie derivative along the flow of F is g -> {g, F}.
FourierTaylor poisson_bracket(const FourierTaylor& f, const FourierTaylor& g,
                              TruncationLog* log = nullptr);

/// Drops terms whose weighted size on `d` is below tol, logging the mass.
FourierTaylor prune(const FourierTaylor& f, const DomainParams& d, double tol, TruncationLog* log);

/// Restriction to I = 0.
FourierTaylor restrict_zero_action(const FourierTaylor& f);
/// Restriction to x = 0 (omega = omega0).
FourierTaylor restrict_zero_param(const FourierTaylor& f);
/// Re-expresses f in a different layout, truncating (and logging) as needed.
FourierTaylor relayout(const FourierTaylor& f, LayoutPtr target, TruncationLog* log = nullptr);

/// Sup over a real theta grid (grid points per angle) at I = 0, x = 0; used
/// for sampled comparisons against the majorant bound.
double sampled_sup_real(const FourierTaylor& f, int grid);

}  // namespace kam
