#include "kam/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "kam/errors.hpp"
#include "kam/parallel.hpp"

namespace kam {

namespace {

std::string format_vec(std::span<const int> k) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
  os << ')';
  return os.str();
}

// Best (smallest) divisor seen on one l1-shell. Ties resolve to the
// lexicographically smaller k so that results do not depend on the
// partitioning of the enumeration.
struct ShellBest {
  double divisor = std::numeric_limits<double>::infinity();
  std::vector<int> k;

  void offer(double d, const std::vector<int>& cand) {
    if (d < divisor || (d == divisor && (k.empty() || cand < k))) {
      divisor = d;
      k = cand;
    }
  }
};

// Visits every k != 0 with |k|_1 <= radius whose first nonzero entry is
// positive, restricted to k[0] in the given residue class.
void enumerate_half_space(const std::vector<double>& omega, int radius, unsigned stride,
                          unsigned offset, std::vector<ShellBest>& best) {
  const int n = static_cast<int>(omega.size());
  std::vector<int> k(static_cast<std::size_t>(n), 0);

  std::function<void(int, int, bool, double)> rec = [&](int pos, int remaining, bool leading,
                                                        double partial) {
    if (pos == n) {
      if (!leading) return;
      const int l1 = radius - remaining;
      best[static_cast<std::size_t>(l1)].offer(std::abs(partial), k);
      return;
    }
    const int lo = leading ? -remaining : 0;
    for (int v = lo; v <= remaining; ++v) {
      if (pos == 0 && static_cast<unsigned>(v) % stride != offset) continue;
      k[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, remaining - std::abs(v), leading || v > 0,
          partial + static_cast<double>(v) * omega[static_cast<std::size_t>(pos)]);
    }
    k[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, radius, false, 0.0);
}

std::vector<ShellBest> shell_minima(const FrequencyVector& omega, int radius,
                                    const EnumerationBudget& budget) {
  const int n = omega.dim();
  if (n > budget.max_dim)
    throw budget_error("dimension " + std::to_string(n) + " exceeds enumeration cap " +
                       std::to_string(budget.max_dim));
  if (radius > budget.max_l1)
    throw budget_error("|k|_1 radius " + std::to_string(radius) + " exceeds cap " +
                       std::to_string(budget.max_l1));
  const std::int64_t points = lattice_ball_size(n, radius);
  if (points > budget.max_points)
    throw budget_error("lattice ball of " + std::to_string(points) + " points exceeds cap " +
                       std::to_string(budget.max_points));

  const std::vector<double> w(omega.values().begin(), omega.values().end());
  const unsigned workers = std::clamp<unsigned>(worker_count(), 1u, static_cast<unsigned>(radius) + 1);
  std::vector<std::vector<ShellBest>> partial(workers,
                                              std::vector<ShellBest>(static_cast<std::size_t>(radius) + 1));
  if (workers == 1) {
    enumerate_half_space(w, radius, 1, 0, partial[0]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&, t] { enumerate_half_space(w, radius, workers, t, partial[t]); });
  }
  std::vector<ShellBest> merged(static_cast<std::size_t>(radius) + 1);
  for (const auto& part : partial)
    for (std::size_t m = 0; m < part.size(); ++m)
      if (!part[m].k.empty()) merged[m].offer(part[m].divisor, part[m].k);
  return merged;
}

}  // namespace

FrequencyVector::FrequencyVector(std::vector<double> omega) : omega_(std::move(omega)) {
  if (omega_.size() < 2) throw UsageError("frequency vector needs dimension >= 2");
  if (omega_[0] != 1.0) throw UsageError("frequency vector must have first component exactly 1");
  for (std::size_t j = 1; j < omega_.size(); ++j)
    if (!(std::abs(omega_[j]) <= 1.0))
      throw UsageError("frequency component " + std::to_string(j) + " must lie in [-1, 1]");
}

FrequencyVector FrequencyVector::preset(std::string_view name) {
  if (name == "golden") return FrequencyVector({1.0, (std::sqrt(5.0) - 1.0) / 2.0});
  if (name == "sqrt2") return FrequencyVector({1.0, std::sqrt(2.0) - 1.0});
  if (name == "cubic-root")
    return FrequencyVector({1.0, std::cbrt(2.0) - 1.0, std::cbrt(4.0) - 1.0});
  throw UsageError("unknown frequency preset '" + std::string(name) + "'");
}

FrequencyVector FrequencyVector::parse(std::string_view text) {
  if (text == "golden" || text == "sqrt2" || text == "cubic-root") return preset(text);
  std::vector<double> values;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("cannot parse frequency component '" + item + "'");
    }
  }
  return FrequencyVector(std::move(values));
}

std::int64_t RationalVector::pair(std::span<const int> k) const {
  std::int64_t acc = 0;
  for (std::size_t j = 0; j < numerators.size(); ++j) acc += static_cast<std::int64_t>(k[j]) * numerators[j];
  return acc;
}

double RationalVector::distance(const FrequencyVector& omega) const {
  double d = 0.0;
  for (int j = 0; j < dim(); ++j) d = std::max(d, std::abs(omega[j] - value(j)));
  return d;
}

double RationalBasis::max_score() const {
  return score.empty() ? 0.0 : *std::max_element(score.begin(), score.end());
}

std::int64_t lattice_ball_size(int n, int radius) {
  // sum_j 2^j C(n,j) C(radius,j)
  long double total = 0;
  long double cn = 1, cr = 1, pow2 = 1;
  for (int j = 0; j <= std::min(n, radius); ++j) {
    total += pow2 * cn * cr;
    cn = cn * (n - j) / (j + 1);
    cr = cr * (radius - j) / (j + 1);
    pow2 *= 2;
  }
  return total > 9e18L ? std::numeric_limits<std::int64_t>::max() : static_cast<std::int64_t>(total);
}

PsiResult psi(const FrequencyVector& omega, double Q, const EnumerationBudget& budget) {
  if (!(Q >= 1.0)) throw domain_error("psi requires Q >= 1");
  const int radius = static_cast<int>(std::floor(Q));
  const auto shells = shell_minima(omega, radius, budget);
  PsiResult out;
  ShellBest overall;
  for (int m = 1; m <= radius; ++m)
    if (!shells[static_cast<std::size_t>(m)].k.empty())
      overall.offer(shells[static_cast<std::size_t>(m)].divisor, shells[static_cast<std::size_t>(m)].k);
  out.minimizer = overall.k;
  out.min_divisor = overall.divisor;
  out.resonant = overall.divisor <= budget.resonance_tol;
  out.value = out.resonant ? std::numeric_limits<double>::infinity() : 1.0 / overall.divisor;
  return out;
}

ArithmeticProfile ArithmeticProfile::build(const FrequencyVector& omega, int qmax,
                                           const EnumerationBudget& budget) {
  if (qmax < 1) throw domain_error("profile needs qmax >= 1");
  const auto shells = shell_minima(omega, qmax, budget);
  ArithmeticProfile p(omega);
  ShellBest running;
  for (int Q = 1; Q <= qmax; ++Q) {
    const auto& s = shells[static_cast<std::size_t>(Q)];
    if (!s.k.empty()) running.offer(s.divisor, s.k);
    const bool res = running.divisor <= budget.resonance_tol;
    p.resonant_ = p.resonant_ || res;
    const double v = res ? std::numeric_limits<double>::infinity() : 1.0 / running.divisor;
    p.psi_.push_back(v);
    p.delta_.push_back(Q * v);
    p.minimizers_.push_back(running.k);
  }
  return p;
}

double ArithmeticProfile::psi(int Q) const {
  if (Q < 1 || Q > qmax()) throw table_error("Psi(" + std::to_string(Q) + ") outside table");
  return psi_[static_cast<std::size_t>(Q - 1)];
}

double ArithmeticProfile::delta(int Q) const {
  if (Q < 1 || Q > qmax()) throw table_error("Delta(" + std::to_string(Q) + ") outside table");
  return delta_[static_cast<std::size_t>(Q - 1)];
}

const std::vector<int>& ArithmeticProfile::minimizer(int Q) const {
  if (Q < 1 || Q > qmax()) throw table_error("minimizer outside table");
  return minimizers_[static_cast<std::size_t>(Q - 1)];
}

int delta_star(const ArithmeticProfile& profile, double x) {
  if (x < profile.delta(1)) throw domain_error("Delta*(x) needs x >= Delta(1)");
  if (x > profile.delta_max())
    throw table_error("Delta*(" + std::to_string(x) + ") beyond Delta(qmax=" +
                      std::to_string(profile.qmax()) + ")");
  // Delta is strictly increasing on the grid: binary search for the last Q with Delta(Q) <= x.
  int lo = 1, hi = profile.qmax();
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (profile.delta(mid) <= x) lo = mid; else hi = mid - 1;
  }
  return lo;
}

BrTail bruno_russmann_tail(const ArithmeticProfile& profile, int Q0, double xcut) {
  if (Q0 < 1) throw domain_error("tail needs Q0 >= 1");
  if (Q0 > profile.qmax()) throw table_error("Q0 beyond table");
  const double start = profile.delta(Q0);
  if (xcut < start) throw domain_error("tail cutoff below Delta(Q0)");
  if (xcut > profile.delta_max()) throw table_error("tail cutoff beyond Delta(qmax)");
  // Delta* is the step function Q on [Delta(Q), Delta(Q+1)), so the integral
  // of dx / (x Delta*(x)) is a sum of exact logarithms.
  double integral = 0.0;
  for (int Q = Q0; Q < profile.qmax(); ++Q) {
    const double a = profile.delta(Q);
    if (a >= xcut) break;
    const double b = std::min(profile.delta(Q + 1), xcut);
    integral += std::log(b / a) / Q;
  }
  BrTail out;
  out.integral = integral;
  out.value = 1.0 / Q0 + integral / std::numbers::ln2;
  out.xcut = xcut;
  out.truncated = true;
  return out;
}

Q0Choice choose_q0(const ArithmeticProfile& profile, double s, double C, double xcut) {
  if (!(s > 0.0 && s <= 1.0)) throw domain_error("choose_q0 needs 0 < s <= 1");
  if (!(C >= 1.0)) throw domain_error("choose_q0 needs C >= 1");
  if (xcut <= 0.0) xcut = profile.delta_max();
  const double threshold = s / (2.0 * C);
  BrTail best;
  best.value = std::numeric_limits<double>::infinity();
  for (int Q0 = 1; Q0 <= profile.qmax() && profile.delta(Q0) <= xcut; ++Q0) {
    const BrTail t = bruno_russmann_tail(profile, Q0, xcut);
    if (t.value <= threshold) return {Q0, t, threshold};
    if (t.value < best.value) best = t;
  }
  std::ostringstream os;
  os << "no Q0 in table satisfies Q0^-1 + (ln2)^-1 int dx/(x Delta*(x)) <= s/(2C) = " << threshold
     << "; best achieved tail " << best.value;
  throw ConditionError("condition-unsatisfiable", os.str());
}

std::int64_t integer_determinant(std::span<const std::int64_t> m, int n) {
  // Fraction-free Bareiss elimination in 128-bit arithmetic.
  std::vector<__int128> a(m.begin(), m.end());
  auto at = [&](int i, int j) -> __int128& { return a[static_cast<std::size_t>(i * n + j)]; };
  int sign = 1;
  __int128 prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (at(k, k) == 0) {
      int swap = -1;
      for (int i = k + 1; i < n; ++i)
        if (at(i, k) != 0) { swap = i; break; }
      if (swap < 0) return 0;
      for (int j = 0; j < n; ++j) std::swap(at(k, j), at(swap, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
    }
    prev = at(k, k);
  }
  return static_cast<std::int64_t>(sign * at(n - 1, n - 1));
}

namespace {

struct Candidate {
  RationalVector v;
  double score = 0.0;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.v.q != b.v.q) return a.v.q < b.v.q;
  return a.v.numerators < b.v.numerators;
}

struct SubsetSearch {
  int n;
  const std::vector<Candidate>& pool;
  std::vector<int> chosen;
  std::vector<int> best;
  double best_score = std::numeric_limits<double>::infinity();
  std::int64_t best_det = 0;
  std::int64_t smallest_det = 0;

  void run(int start) {
    if (static_cast<int>(chosen.size()) == n) {
      evaluate();
      return;
    }
    for (int i = start; i < static_cast<int>(pool.size()); ++i) {
      // pool is sorted by score, so later picks cannot improve a found optimum
      if (pool[static_cast<std::size_t>(i)].score >= best_score) break;
      chosen.push_back(i);
      run(i + 1);
      chosen.pop_back();
    }
  }

  void evaluate() {
    std::vector<std::int64_t> m(static_cast<std::size_t>(n * n));
    double worst = 0.0;
    for (int c = 0; c < n; ++c) {
      const auto& cand = pool[static_cast<std::size_t>(chosen[static_cast<std::size_t>(c)])];
      worst = std::max(worst, cand.score);
      for (int r = 0; r < n; ++r) m[static_cast<std::size_t>(r * n + c)] = cand.v.numerators[static_cast<std::size_t>(r)];
    }
    const std::int64_t det = integer_determinant(m, n);
    if (det != 0 && (smallest_det == 0 || std::llabs(det) < std::llabs(smallest_det))) smallest_det = det;
    if (std::llabs(det) == 1 && worst < best_score) {
      best_score = worst;
      best = chosen;
      best_det = det;
    }
  }
};

}  // namespace

RationalBasis rational_basis(const FrequencyVector& omega, double Q, const BasisSearch& search,
                             const EnumerationBudget& budget) {
  if (!(Q >= 1.0) || Q < search.q_min)
    throw domain_error("rational basis needs Q >= max(1, Qmin)");
  const int n = omega.dim();
  const PsiResult ps = psi(omega, Q, budget);
  if (ps.resonant)
    throw resonance_error("k = " + format_vec(ps.minimizer) + " annihilates omega0 (|k.omega0| = " +
                          std::to_string(ps.min_divisor) + ")");

  const auto qmax = static_cast<std::int64_t>(std::ceil(search.c_den * ps.value));
  auto make = [&](std::int64_t q, std::vector<std::int64_t> num) {
    Candidate c;
    c.v.q = q;
    c.v.numerators = std::move(num);
    double err = 0.0;
    for (int j = 0; j < n; ++j)
      err = std::max(err, std::abs(static_cast<double>(q) * omega[j] -
                                   static_cast<double>(c.v.numerators[static_cast<std::size_t>(j)])));
    c.score = Q * err;
    return c;
  };

  std::vector<Candidate> all;
  for (std::int64_t q = 1; q <= qmax; ++q) {
    // every floor/ceil rounding of q * omega_bar
    const int combos = 1 << (n - 1);
    for (int mask = 0; mask < combos; ++mask) {
      std::vector<std::int64_t> num(static_cast<std::size_t>(n));
      num[0] = q;
      for (int j = 1; j < n; ++j) {
        const double x = static_cast<double>(q) * omega[j];
        num[static_cast<std::size_t>(j)] = static_cast<std::int64_t>((mask >> (j - 1)) & 1 ? std::ceil(x) : std::floor(x));
      }
      all.push_back(make(q, std::move(num)));
    }
  }
  std::sort(all.begin(), all.end(), candidate_less);
  all.erase(std::unique(all.begin(), all.end(),
                        [](const Candidate& a, const Candidate& b) {
                          return a.v.q == b.v.q && a.v.numerators == b.v.numerators;
                        }),
            all.end());

  auto attempt = [&](std::vector<Candidate> pool) {
    if (static_cast<int>(pool.size()) > search.top_candidates)
      pool.resize(static_cast<std::size_t>(search.top_candidates));
    SubsetSearch s{n, pool, {}, {}, std::numeric_limits<double>::infinity(), 0, 0};
    s.run(0);
    std::vector<Candidate> picked;
    for (int i : s.best) picked.push_back(pool[static_cast<std::size_t>(i)]);
    return std::make_tuple(picked, s.best_det, s.smallest_det);
  };

  auto [picked, det, smallest] = attempt(all);
  if (picked.empty()) {
    // Bounded column combinations a + c b of the strongest candidates.
    std::vector<Candidate> pool = all;
    const int width = std::min<int>(static_cast<int>(all.size()), std::max(2, search.top_candidates / 2));
    for (int a = 0; a < width; ++a)
      for (int b = 0; b < width; ++b) {
        if (a == b) continue;
        for (int c = -search.combo_bound; c <= search.combo_bound; ++c) {
          if (c == 0) continue;
          const auto& va = all[static_cast<std::size_t>(a)].v;
          const auto& vb = all[static_cast<std::size_t>(b)].v;
          const std::int64_t q = va.q + c * vb.q;
          if (q <= 0) continue;
          std::vector<std::int64_t> num(static_cast<std::size_t>(n));
          for (int j = 0; j < n; ++j)
            num[static_cast<std::size_t>(j)] = va.numerators[static_cast<std::size_t>(j)] + c * vb.numerators[static_cast<std::size_t>(j)];
          pool.push_back(make(q, std::move(num)));
        }
      }
    std::sort(pool.begin(), pool.end(), candidate_less);
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [](const Candidate& x, const Candidate& y) {
                             return x.v.q == y.v.q && x.v.numerators == y.v.numerators;
                           }),
               pool.end());
    std::tie(picked, det, smallest) = attempt(std::move(pool));
    if (picked.empty())
      throw budget_error("no unimodular completion within search budget at Q = " + std::to_string(Q) +
                         "; best |det| found " + std::to_string(std::llabs(smallest)));
  }

  RationalBasis basis;
  basis.Q = Q;
  basis.determinant = det;
  std::sort(picked.begin(), picked.end(), candidate_less);
  for (auto& c : picked) {
    basis.approx_error.push_back(c.v.distance(omega));
    basis.score.push_back(static_cast<double>(c.v.q) * Q * basis.approx_error.back());
    basis.vectors.push_back(std::move(c.v));
  }
  // determinant of the sorted column order
  std::vector<std::int64_t> m(static_cast<std::size_t>(n * n));
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r)
      m[static_cast<std::size_t>(r * n + c)] = basis.vectors[static_cast<std::size_t>(c)].numerators[static_cast<std::size_t>(r)];
  basis.determinant = integer_determinant(m, n);
  return basis;
}

}  // namespace kam
