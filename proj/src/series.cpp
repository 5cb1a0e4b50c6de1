#include "kam/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "kam/errors.hpp"

namespace kam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void enumerate_indices(int n, int maxdeg, bool signed_entries, std::vector<Index4>& out) {
  Index4 cur{};
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n) {
      out.push_back(cur);
      return;
    }
    const int lo = signed_entries ? -remaining : 0;
    for (int v = lo; v <= remaining; ++v) {
      cur[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, remaining - std::abs(v));
    }
    cur[static_cast<std::size_t>(pos)] = 0;
  };
  rec(rec, 0, maxdeg);
}

int l1(const Index4& k, int n) {
  int s = 0;
  for (int i = 0; i < n; ++i) s += std::abs(k[static_cast<std::size_t>(i)]);
  return s;
}

void sort_by_degree(std::vector<Index4>& v, int n) {
  std::stable_sort(v.begin(), v.end(), [n](const Index4& a, const Index4& b) {
    const int la = l1(a, n), lb = l1(b, n);
    if (la != lb) return la < lb;
    return a < b;
  });
}

int find_index(const std::vector<Index4>& table, std::span<const int> key, int n) {
  Index4 k{};
  for (int i = 0; i < n; ++i) k[static_cast<std::size_t>(i)] = key[static_cast<std::size_t>(i)];
  const int lk = l1(k, n);
  auto it = std::lower_bound(table.begin(), table.end(), k, [n](const Index4& a, const Index4& b) {
    const int la = l1(a, n), lb = l1(b, n);
    if (la != lb) return la < lb;
    return a < b;
  });
  if (it == table.end() || *it != k || l1(*it, n) != lk) return -1;
  return static_cast<int>(it - table.begin());
}

bool term_less(const FourierTaylor::Term& a, const FourierTaylor::Term& b) {
  return std::tie(a.mode, a.alpha, a.beta) < std::tie(b.mode, b.alpha, b.beta);
}

void check_same_layout(const FourierTaylor& a, const FourierTaylor& b) {
  if (a.layout_ptr() != b.layout_ptr()) {
    if (!a.layout_ptr() || !b.layout_ptr() || a.dim() != b.dim())
      throw domain_error("series dimension mismatch");
    throw domain_error("series layout mismatch (relayout first)");
  }
}

}  // namespace

void DomainParams::validate() const {
  auto ok = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!ok(r) || !ok(s) || !ok(h)) {
    std::ostringstream os;
    os << "domain radii must lie in (0,1]: r=" << r << " s=" << s << " h=" << h;
    throw domain_error(os.str());
  }
}

SeriesLayout::SeriesLayout(int n, int cutoff_k, int deg_i, int deg_w)
    : n_(n), cutoff_k_(cutoff_k), deg_i_(deg_i), deg_w_(deg_w) {
  if (n < 1 || n > kMaxDim) throw budget_error("series dimension must be in 1..4");
  if (cutoff_k < 0 || deg_i < 0 || deg_w < 0) throw domain_error("negative series cap");
  const int side = 4 * cutoff_k + 1;
  double box_size = 1.0;
  for (int i = 0; i < n; ++i) box_size *= side;
  if (box_size > 5.0e7) throw budget_error("Fourier cutoff too large for the mode table");

  enumerate_indices(n, cutoff_k, true, modes_);
  sort_by_degree(modes_, n);
  enumerate_indices(n, deg_i, false, alphas_);
  sort_by_degree(alphas_, n);
  enumerate_indices(n, deg_w, false, betas_);
  sort_by_degree(betas_, n);

  const auto nm = modes_.size();
  mode_l1_.resize(nm);
  mode_box_.resize(nm);
  box_.assign(static_cast<std::size_t>(box_size), -1);
  auto box_of = [&](const Index4& k) {
    int idx = 0, stride = 1;
    for (int i = 0; i < n; ++i) {
      idx += (k[static_cast<std::size_t>(i)] + 2 * cutoff_k) * stride;
      stride *= side;
    }
    return idx;
  };
  box_center_ = box_of(Index4{});
  for (std::size_t m = 0; m < nm; ++m) {
    mode_l1_[m] = l1(modes_[m], n);
    mode_box_[m] = box_of(modes_[m]);
    box_[static_cast<std::size_t>(mode_box_[m])] = static_cast<int>(m);
  }
  mode_neg_.resize(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    Index4 neg{};
    for (int i = 0; i < n; ++i) neg[static_cast<std::size_t>(i)] = -modes_[m][static_cast<std::size_t>(i)];
    mode_neg_[m] = box_[static_cast<std::size_t>(box_of(neg))];
  }

  auto build_multi = [n](const std::vector<Index4>& table, int maxdeg, std::vector<int>& deg,
                         std::vector<int>& sum, std::vector<int>& lower, std::vector<int>* raise) {
    const auto na = table.size();
    deg.resize(na);
    for (std::size_t a = 0; a < na; ++a) deg[a] = l1(table[a], n);
    sum.assign(na * na, -1);
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t b = 0; b < na; ++b) {
        if (deg[a] + deg[b] > maxdeg) continue;
        Index4 s{};
        for (int i = 0; i < n; ++i)
          s[static_cast<std::size_t>(i)] = table[a][static_cast<std::size_t>(i)] + table[b][static_cast<std::size_t>(i)];
        sum[a * na + b] = find_index(table, std::span<const int>(s.data(), static_cast<std::size_t>(n)), n);
      }
    lower.assign(na * static_cast<std::size_t>(n), -1);
    if (raise) raise->assign(na * static_cast<std::size_t>(n), -1);
    for (std::size_t a = 0; a < na; ++a)
      for (int l = 0; l < n; ++l) {
        Index4 t = table[a];
        if (t[static_cast<std::size_t>(l)] > 0) {
          --t[static_cast<std::size_t>(l)];
          lower[a * static_cast<std::size_t>(n) + static_cast<std::size_t>(l)] =
              find_index(table, std::span<const int>(t.data(), static_cast<std::size_t>(n)), n);
          ++t[static_cast<std::size_t>(l)];
        }
        if (raise && deg[a] < maxdeg) {
          ++t[static_cast<std::size_t>(l)];
          (*raise)[a * static_cast<std::size_t>(n) + static_cast<std::size_t>(l)] =
              find_index(table, std::span<const int>(t.data(), static_cast<std::size_t>(n)), n);
        }
      }
  };
  build_multi(alphas_, deg_i, alpha_deg_, alpha_sum_, alpha_lower_, &alpha_raise_);
  build_multi(betas_, deg_w, beta_deg_, beta_sum_, beta_lower_, nullptr);
}

std::shared_ptr<const SeriesLayout> SeriesLayout::get(int n, int cutoff_k, int deg_i, int deg_w) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, int>, std::shared_ptr<const SeriesLayout>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_tuple(n, cutoff_k, deg_i, deg_w);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto p = std::make_shared<const SeriesLayout>(n, cutoff_k, deg_i, deg_w);
  cache.emplace(key, p);
  return p;
}

int SeriesLayout::mode_index(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != n_) throw domain_error("mode has wrong dimension");
  int s = 0;
  for (int v : k) s += std::abs(v);
  if (s > cutoff_k_) return -1;
  int idx = 0, stride = 1;
  const int side = 4 * cutoff_k_ + 1;
  for (int i = 0; i < n_; ++i) {
    idx += (k[static_cast<std::size_t>(i)] + 2 * cutoff_k_) * stride;
    stride *= side;
  }
  return box_[static_cast<std::size_t>(idx)];
}

int SeriesLayout::alpha_index(std::span<const int> a) const {
  if (static_cast<int>(a.size()) != n_) throw domain_error("multi-index has wrong dimension");
  for (int v : a)
    if (v < 0) return -1;
  return find_index(alphas_, a, n_);
}

int SeriesLayout::beta_index(std::span<const int> b) const {
  if (static_cast<int>(b.size()) != n_) throw domain_error("multi-index has wrong dimension");
  for (int v : b)
    if (v < 0) return -1;
  return find_index(betas_, b, n_);
}

// ---------------------------------------------------------------------------

FourierTaylor FourierTaylor::adopt(LayoutPtr layout, std::vector<Term> sorted, bool real) {
  FourierTaylor f(std::move(layout), real);
  f.terms_ = std::move(sorted);
  return f;
}

FourierTaylor FourierTaylor::from_terms(LayoutPtr layout, std::span<const Term> terms, bool real) {
  std::vector<Term> all;
  all.reserve(terms.size() * (real ? 2 : 1));
  for (const auto& t : terms) {
    if (real) {
      all.push_back({t.mode, t.alpha, t.beta, 0.5 * t.c});
      all.push_back({static_cast<std::uint32_t>(layout->mode_neg(static_cast<int>(t.mode))), t.alpha,
                     t.beta, 0.5 * std::conj(t.c)});
    } else {
      all.push_back(t);
    }
  }
  std::stable_sort(all.begin(), all.end(), term_less);
  std::vector<Term> merged;
  for (const auto& t : all) {
    if (!merged.empty() && !term_less(merged.back(), t))
      merged.back().c += t.c;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [](const Term& t) { return t.c == Complex(0.0); });
  return adopt(std::move(layout), std::move(merged), real);
}

FourierTaylor FourierTaylor::constant(LayoutPtr layout, Complex c) {
  std::vector<Term> t;
  if (c != Complex(0.0)) t.push_back({0, 0, 0, c});
  return adopt(std::move(layout), std::move(t), c.imag() == 0.0);
}

FourierTaylor FourierTaylor::action(LayoutPtr layout, int l) {
  std::vector<int> a(static_cast<std::size_t>(layout->n()), 0);
  a[static_cast<std::size_t>(l)] = 1;
  const int ai = layout->alpha_index(a);
  if (ai < 0) throw domain_error("action coordinate needs deg_i >= 1");
  return adopt(layout, {{0, static_cast<std::uint16_t>(ai), 0, 1.0}}, true);
}

FourierTaylor FourierTaylor::parameter(LayoutPtr layout, int l) {
  std::vector<int> b(static_cast<std::size_t>(layout->n()), 0);
  b[static_cast<std::size_t>(l)] = 1;
  const int bi = layout->beta_index(b);
  if (bi < 0) throw domain_error("parameter coordinate needs deg_w >= 1");
  return adopt(layout, {{0, 0, static_cast<std::uint16_t>(bi), 1.0}}, true);
}

FourierTaylor FourierTaylor::cosine(LayoutPtr layout, std::span<const int> k, double a) {
  const int m = layout->mode_index(k);
  if (m < 0) throw domain_error("mode exceeds the Fourier cutoff");
  std::vector<Term> t{{static_cast<std::uint32_t>(m), 0, 0, Complex(a, 0.0)}};
  if (m == 0) return from_terms(layout, t, true);
  t[0].c = 0.5 * a;
  t.push_back({static_cast<std::uint32_t>(layout->mode_neg(m)), 0, 0, Complex(0.5 * a, 0.0)});
  return from_terms(layout, t, true);
}

FourierTaylor FourierTaylor::sine(LayoutPtr layout, std::span<const int> k, double a) {
  const int m = layout->mode_index(k);
  if (m < 0) throw domain_error("mode exceeds the Fourier cutoff");
  if (m == 0) return FourierTaylor(layout, true);
  // sin x = (e^{ix} - e^{-ix}) / 2i
  std::vector<Term> t{{static_cast<std::uint32_t>(m), 0, 0, Complex(0.0, -0.5 * a)},
                      {static_cast<std::uint32_t>(layout->mode_neg(m)), 0, 0, Complex(0.0, 0.5 * a)}};
  return from_terms(layout, t, true);
}

Complex FourierTaylor::coeff(int mode, int alpha, int beta) const {
  if (mode < 0 || alpha < 0 || beta < 0) return 0.0;
  const Term key{static_cast<std::uint32_t>(mode), static_cast<std::uint16_t>(alpha),
                 static_cast<std::uint16_t>(beta), 0.0};
  auto it = std::lower_bound(terms_.begin(), terms_.end(), key, term_less);
  if (it == terms_.end() || term_less(key, *it)) return 0.0;
  return it->c;
}

Complex FourierTaylor::coeff(std::span<const int> k, std::span<const int> alpha,
                             std::span<const int> beta) const {
  return coeff(layout_->mode_index(k), layout_->alpha_index(alpha), layout_->beta_index(beta));
}

Complex FourierTaylor::evaluate(std::span<const Complex> action, std::span<const Complex> theta,
                                std::span<const Complex> x) const {
  const auto& L = *layout_;
  const int n = L.n();
  const int K = L.cutoff_k();
  // e^{2 pi i j theta_l} for j in [-K, K]
  std::vector<Complex> ph(static_cast<std::size_t>(n * (2 * K + 1)));
  for (int l = 0; l < n; ++l) {
    const Complex e = std::exp(Complex(0.0, kTwoPi) * theta[static_cast<std::size_t>(l)]);
    const Complex einv = std::exp(Complex(0.0, -kTwoPi) * theta[static_cast<std::size_t>(l)]);
    Complex* row = ph.data() + l * (2 * K + 1) + K;
    row[0] = 1.0;
    for (int j = 1; j <= K; ++j) {
      row[j] = row[j - 1] * e;
      row[-j] = row[-j + 1] * einv;
    }
  }
  auto monomial = [n](const Index4& a, std::span<const Complex> v) {
    Complex p = 1.0;
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < a[static_cast<std::size_t>(l)]; ++j) p *= v[static_cast<std::size_t>(l)];
    return p;
  };
  std::vector<Complex> amon(static_cast<std::size_t>(L.num_alpha()));
  for (int a = 0; a < L.num_alpha(); ++a) amon[static_cast<std::size_t>(a)] = monomial(L.alpha(a), action);
  std::vector<Complex> bmon(static_cast<std::size_t>(L.num_beta()));
  for (int b = 0; b < L.num_beta(); ++b) bmon[static_cast<std::size_t>(b)] = monomial(L.beta(b), x);

  Complex sum = 0.0;
  std::uint32_t cached_mode = UINT32_MAX;
  Complex wave = 1.0;
  for (const auto& t : terms_) {
    if (t.mode != cached_mode) {
      cached_mode = t.mode;
      wave = 1.0;
      const auto& k = L.mode(static_cast<int>(t.mode));
      for (int l = 0; l < n; ++l) wave *= ph[static_cast<std::size_t>(l * (2 * K + 1) + K + k[static_cast<std::size_t>(l)])];
    }
    sum += t.c * wave * amon[t.alpha] * bmon[t.beta];
  }
  return sum;
}

Complex FourierTaylor::evaluate(std::span<const double> action, std::span<const double> theta,
                                std::span<const double> x) const {
  std::vector<Complex> a(action.begin(), action.end()), t(theta.begin(), theta.end()),
      w(x.begin(), x.end());
  return evaluate(std::span<const Complex>(a), std::span<const Complex>(t), std::span<const Complex>(w));
}

namespace {

std::vector<FourierTaylor::Term> merge_scaled(std::span<const FourierTaylor::Term> a,
                                              std::span<const FourierTaylor::Term> b, double sb) {
  std::vector<FourierTaylor::Term> out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && term_less(a[i], b[j]))) {
      out.push_back(a[i++]);
    } else if (i == a.size() || term_less(b[j], a[i])) {
      auto t = b[j++];
      t.c *= sb;
      out.push_back(t);
    } else {
      auto t = a[i++];
      t.c += sb * b[j++].c;
      if (t.c != Complex(0.0)) out.push_back(t);
    }
  }
  return out;
}

}  // namespace

FourierTaylor& FourierTaylor::operator+=(const FourierTaylor& o) {
  if (!layout_) return *this = o;
  if (!o.layout_) return *this;
  check_same_layout(*this, o);
  terms_ = merge_scaled(terms_, o.terms_, 1.0);
  real_ = real_ && o.real_;
  return *this;
}

FourierTaylor& FourierTaylor::operator-=(const FourierTaylor& o) {
  if (!o.layout_) return *this;
  if (!layout_) return *this = -o;
  check_same_layout(*this, o);
  terms_ = merge_scaled(terms_, o.terms_, -1.0);
  real_ = real_ && o.real_;
  return *this;
}

FourierTaylor& FourierTaylor::operator*=(Complex a) {
  if (a == Complex(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.c *= a;
  if (a.imag() != 0.0) real_ = false;
  return *this;
}

// ---------------------------------------------------------------------------

double term_weight(const SeriesLayout& L, const FourierTaylor::Term& t, const DomainParams& d) {
  return std::exp(kTwoPi * L.mode_l1(static_cast<int>(t.mode)) * d.s) *
         std::pow(d.r, L.alpha_degree(t.alpha)) * std::pow(d.h, L.beta_degree(t.beta));
}

namespace {

// Weight tables so that norms cost one multiply per term.
struct WeightTable {
  std::vector<double> mode, alpha, beta;
  WeightTable(const SeriesLayout& L, const DomainParams& d) {
    const int K = L.cutoff_k();
    std::vector<double> ek(static_cast<std::size_t>(2 * K + 1));
    for (int j = 0; j <= 2 * K; ++j) ek[static_cast<std::size_t>(j)] = std::exp(kTwoPi * j * d.s);
    mode.resize(static_cast<std::size_t>(L.num_modes()));
    for (int m = 0; m < L.num_modes(); ++m) mode[static_cast<std::size_t>(m)] = ek[static_cast<std::size_t>(L.mode_l1(m))];
    alpha.resize(static_cast<std::size_t>(L.num_alpha()));
    for (int a = 0; a < L.num_alpha(); ++a) alpha[static_cast<std::size_t>(a)] = std::pow(d.r, L.alpha_degree(a));
    beta.resize(static_cast<std::size_t>(L.num_beta()));
    for (int b = 0; b < L.num_beta(); ++b) beta[static_cast<std::size_t>(b)] = std::pow(d.h, L.beta_degree(b));
  }
  double operator()(const FourierTaylor::Term& t) const {
    return mode[t.mode] * alpha[t.alpha] * beta[t.beta];
  }
};

}  // namespace

double majorant_norm(const FourierTaylor& f, const DomainParams& d) {
  if (!f.layout_ptr() || f.empty()) return 0.0;
  const WeightTable w(f.layout(), d);
  double s = 0.0;
  for (const auto& t : f.terms()) s += std::abs(t.c) * w(t);
  return s;
}

double majorant_norm(std::span<const FourierTaylor> fs, const DomainParams& d) {
  double m = 0.0;
  for (const auto& f : fs) m = std::max(m, majorant_norm(f, d));
  return m;
}

// ---------------------------------------------------------------------------

SeriesAccumulator::SeriesAccumulator(LayoutPtr layout, TruncationLog* log)
    : layout_(std::move(layout)), log_(log), dense_(layout_->flat_size()), touched_(layout_->flat_size(), 0) {}

void SeriesAccumulator::add_term(int mode, int alpha, int beta, Complex c) {
  const std::size_t idx = layout_->flat(mode, alpha, beta);
  dense_[idx] += c;
  if (!touched_[idx]) {
    touched_[idx] = 1;
    touched_list_.push_back(idx);
  }
}

void SeriesAccumulator::add(const FourierTaylor& f, Complex scale) {
  if (!f.layout_ptr()) return;
  check_same_layout(FourierTaylor(layout_), f);
  for (const auto& t : f.terms()) add_term(static_cast<int>(t.mode), t.alpha, t.beta, scale * t.c);
}

void SeriesAccumulator::add_product(const FourierTaylor& a, const FourierTaylor& b, Complex scale) {
  if (!a.layout_ptr() || !b.layout_ptr() || a.empty() || b.empty()) return;
  check_same_layout(a, b);
  check_same_layout(FourierTaylor(layout_), a);
  const auto& L = *layout_;
  const int n = L.n();
  // Lost mass is bounded termwise by |c_a c_b| times the weight of the
  // product monomial; the weight of a mode outside the table is computed
  // from its l1 norm directly.
  double lost = 0.0;
  const double es = log_ ? std::exp(kTwoPi * log_->domain.s) : 0.0;

  for (const auto& ta : a.terms()) {
    const Complex ca = scale * ta.c;
    const int ma = static_cast<int>(ta.mode);
    for (const auto& tb : b.terms()) {
      const int ms = L.mode_sum(ma, static_cast<int>(tb.mode));
      const int as = L.alpha_sum(ta.alpha, tb.alpha);
      const int bs = L.beta_sum(ta.beta, tb.beta);
      const Complex prod = ca * tb.c;
      if (ms < 0 || as < 0 || bs < 0) {
        if (log_) {
          const auto& ka = L.mode(ma);
          const auto& kb = L.mode(static_cast<int>(tb.mode));
          int kl = 0;
          for (int i = 0; i < n; ++i) kl += std::abs(ka[static_cast<std::size_t>(i)] + kb[static_cast<std::size_t>(i)]);
          lost += std::abs(prod) * std::pow(es, kl) *
                  std::pow(log_->domain.r, L.alpha_degree(ta.alpha) + L.alpha_degree(tb.alpha)) *
                  std::pow(log_->domain.h, L.beta_degree(ta.beta) + L.beta_degree(tb.beta));
        }
        continue;
      }
      add_term(ms, as, bs, prod);
    }
  }
  if (log_) log_->discarded += lost;
}

FourierTaylor SeriesAccumulator::finish(bool real) {
  std::sort(touched_list_.begin(), touched_list_.end());
  const auto& L = *layout_;
  const std::size_t nab = static_cast<std::size_t>(L.num_alpha()) * static_cast<std::size_t>(L.num_beta());
  const std::size_t nb = static_cast<std::size_t>(L.num_beta());
  if (real) {
    // c(k) <- (c(k) + conj c(-k)) / 2, pairing each touched index with its mirror.
    std::vector<std::size_t> extra;
    for (std::size_t idx : touched_list_) {
      const std::size_t m = idx / nab;
      const std::size_t mirror = static_cast<std::size_t>(L.mode_neg(static_cast<int>(m))) * nab + idx % nab;
      if (!touched_[mirror]) {
        touched_[mirror] = 1;
        extra.push_back(mirror);
      }
    }
    touched_list_.insert(touched_list_.end(), extra.begin(), extra.end());
    std::sort(touched_list_.begin(), touched_list_.end());
    for (std::size_t idx : touched_list_) {
      const std::size_t m = idx / nab;
      const std::size_t mirror = static_cast<std::size_t>(L.mode_neg(static_cast<int>(m))) * nab + idx % nab;
      if (mirror < idx) continue;
      if (mirror == idx) {
        dense_[idx] = Complex(dense_[idx].real(), 0.0);
      } else {
        const Complex avg = 0.5 * (dense_[idx] + std::conj(dense_[mirror]));
        dense_[idx] = avg;
        dense_[mirror] = std::conj(avg);
      }
    }
  }
  std::unique_ptr<WeightTable> wt;
  const bool pruning = log_ && log_->drop_tol > 0.0;
  if (pruning) wt = std::make_unique<WeightTable>(L, log_->domain);
  std::vector<FourierTaylor::Term> out;
  out.reserve(touched_list_.size());
  for (std::size_t idx : touched_list_) {
    const Complex c = dense_[idx];
    dense_[idx] = 0.0;
    touched_[idx] = 0;
    if (c == Complex(0.0)) continue;
    FourierTaylor::Term t{static_cast<std::uint32_t>(idx / nab),
                          static_cast<std::uint16_t>((idx % nab) / nb),
                          static_cast<std::uint16_t>(idx % nb), c};
    if (pruning) {
      const double w = std::abs(c) * (*wt)(t);
      if (w < log_->drop_tol) {
        log_->discarded += w;
        continue;
      }
    }
    out.push_back(t);
  }
  touched_list_.clear();
  return FourierTaylor::adopt(layout_, std::move(out), real);
}

FourierTaylor multiply(const FourierTaylor& a, const FourierTaylor& b, TruncationLog* log) {
  check_same_layout(a, b);
  SeriesAccumulator acc(a.layout_ptr(), log);
  acc.add_product(a, b);
  return acc.finish(a.is_real() && b.is_real());
}

FourierTaylor d_theta(const FourierTaylor& f, int l) {
  const auto& L = f.layout();
  return f.map_coeffs(
      [&](const FourierTaylor::Term& t) {
        const int kl = L.mode(static_cast<int>(t.mode))[static_cast<std::size_t>(l)];
        return t.c * Complex(0.0, kTwoPi * kl);
      },
      f.is_real());
}

FourierTaylor d_action(const FourierTaylor& f, int l) {
  const auto& L = f.layout();
  std::vector<FourierTaylor::Term> out;
  for (const auto& t : f.terms()) {
    const int low = L.alpha_lower(t.alpha, l);
    if (low < 0) continue;
    out.push_back({t.mode, static_cast<std::uint16_t>(low), t.beta,
                   t.c * static_cast<double>(L.alpha(t.alpha)[static_cast<std::size_t>(l)])});
  }
  std::stable_sort(out.begin(), out.end(), term_less);
  return FourierTaylor::adopt(f.layout_ptr(), std::move(out), f.is_real());
}

FourierTaylor d_param(const FourierTaylor& f, int l) {
  const auto& L = f.layout();
  std::vector<FourierTaylor::Term> out;
  for (const auto& t : f.terms()) {
    const int low = L.beta_lower(t.beta, l);
    if (low < 0) continue;
    out.push_back({t.mode, t.alpha, static_cast<std::uint16_t>(low),
                   t.c * static_cast<double>(L.beta(t.beta)[static_cast<std::size_t>(l)])});
  }
  std::stable_sort(out.begin(), out.end(), term_less);
  return FourierTaylor::adopt(f.layout_ptr(), std::move(out), f.is_real());
}

FourierTaylor poisson_bracket(const FourierTaylor& f, const FourierTaylor& g, TruncationLog* log) {
  check_same_layout(f, g);
  SeriesAccumulator acc(f.layout_ptr(), log);
  for (int l = 0; l < f.dim(); ++l) {
    acc.add_product(d_theta(f, l), d_action(g, l));
    acc.add_product(d_action(f, l), d_theta(g, l), -1.0);
  }
  return acc.finish(f.is_real() && g.is_real());
}

FourierTaylor prune(const FourierTaylor& f, const DomainParams& d, double tol, TruncationLog* log) {
  if (!f.layout_ptr()) return f;
  const WeightTable w(f.layout(), d);
  double lost = 0.0;
  auto out = f.filter([&](const FourierTaylor::Term& t) {
    const double m = std::abs(t.c) * w(t);
    if (m < tol) {
      lost += m;
      return false;
    }
    return true;
  });
  if (log) log->discarded += lost;
  return out;
}

FourierTaylor restrict_zero_action(const FourierTaylor& f) {
  return f.filter([](const FourierTaylor::Term& t) { return t.alpha == 0; });
}

FourierTaylor restrict_zero_param(const FourierTaylor& f) {
  return f.filter([](const FourierTaylor::Term& t) { return t.beta == 0; });
}

FourierTaylor relayout(const FourierTaylor& f, LayoutPtr target, TruncationLog* log) {
  if (!f.layout_ptr()) return FourierTaylor(target);
  if (f.layout_ptr() == target) return f;
  const auto& S = f.layout();
  const auto& T = *target;
  if (S.n() != T.n()) throw domain_error("relayout across dimensions");
  const int n = S.n();
  std::vector<FourierTaylor::Term> out;
  double lost = 0.0;
  for (const auto& t : f.terms()) {
    const auto& k = S.mode(static_cast<int>(t.mode));
    const auto& a = S.alpha(t.alpha);
    const auto& b = S.beta(t.beta);
    const int m = T.mode_index(std::span<const int>(k.data(), static_cast<std::size_t>(n)));
    const int ai = S.alpha_degree(t.alpha) <= T.deg_i()
                       ? T.alpha_index(std::span<const int>(a.data(), static_cast<std::size_t>(n)))
                       : -1;
    const int bi = S.beta_degree(t.beta) <= T.deg_w()
                       ? T.beta_index(std::span<const int>(b.data(), static_cast<std::size_t>(n)))
                       : -1;
    if (m < 0 || ai < 0 || bi < 0) {
      if (log) lost += std::abs(t.c) * term_weight(S, t, log->domain);
      continue;
    }
    out.push_back({static_cast<std::uint32_t>(m), static_cast<std::uint16_t>(ai),
                   static_cast<std::uint16_t>(bi), t.c});
  }
  if (log) log->discarded += lost;
  std::stable_sort(out.begin(), out.end(), term_less);
  return FourierTaylor::adopt(std::move(target), std::move(out), f.is_real());
}

double sampled_sup_real(const FourierTaylor& f, int grid) {
  const int n = f.dim();
  std::vector<double> zero(static_cast<std::size_t>(n), 0.0), theta(static_cast<std::size_t>(n), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  double best = 0.0;
  while (true) {
    for (int l = 0; l < n; ++l) theta[static_cast<std::size_t>(l)] = static_cast<double>(idx[static_cast<std::size_t>(l)]) / grid;
    best = std::max(best, std::abs(f.evaluate(std::span<const double>(zero), std::span<const double>(theta),
                                              std::span<const double>(zero))));
    int l = 0;
    while (l < n && ++idx[static_cast<std::size_t>(l)] == grid) idx[static_cast<std::size_t>(l++)] = 0;
    if (l == n) break;
  }
  return best;
}

}  // namespace kam
