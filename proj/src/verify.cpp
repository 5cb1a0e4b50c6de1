#include "kam/verify.hpp"

#include <algorithm>
#include <cmath>

#include "kam/errors.hpp"

namespace kam {

namespace {

// (D action . omega0, D shift . omega0) as theta-only series
struct TorusDerivative {
  std::vector<FourierTaylor> action, shift;
};

FourierTaylor directional(const FourierTaylor& f, const FrequencyVector& w) {
  if (f.empty()) return f;
  FourierTaylor out(f.layout_ptr());
  for (int m = 0; m < w.dim(); ++m) out += d_theta(f, m) * Complex(w[m]);
  return out;
}

TorusDerivative derivative(const TorusEmbedding& T, const FrequencyVector& w) {
  TorusDerivative D;
  for (int l = 0; l < T.dim(); ++l) {
    D.action.push_back(directional(T.action[static_cast<std::size_t>(l)], w));
    D.shift.push_back(directional(T.shift[static_cast<std::size_t>(l)], w));
  }
  return D;
}

double real_at(const FourierTaylor& f, std::span<const double> theta) {
  if (f.empty()) return 0.0;
  const std::vector<double> zero(theta.size(), 0.0);
  return f.evaluate(zero, theta, zero).real();
}

double distance(std::span<const double> p, std::span<const double> q, std::span<const double> tp,
                std::span<const double> tq) {
  double d = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) d = std::max({d, std::abs(p[l] - tp[l]), std::abs(q[l] - tq[l])});
  return d;
}

}  // namespace

int implicit_midpoint_step(const IntegrableSpec& spec, std::vector<double>& p, std::vector<double>& q, double dt,
                           double tol, int max_iter) {
  const std::size_t n = p.size();
  std::vector<double> pm(n), qm(n), pd(n), qd(n), p1 = p, q1 = q;
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t l = 0; l < n; ++l) {
      pm[l] = 0.5 * (p[l] + p1[l]);
      qm[l] = 0.5 * (q[l] + q1[l]);
    }
    spec.vector_field(pm, qm, pd, qd);
    double change = 0.0, scale = 1.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double np = p[l] + dt * pd[l], nq = q[l] + dt * qd[l];
      change = std::max({change, std::abs(np - p1[l]), std::abs(nq - q1[l])});
      scale = std::max({scale, std::abs(np), std::abs(nq)});
      p1[l] = np;
      q1[l] = nq;
    }
    if (change <= tol * scale) {
      p = p1;
      q = q1;
      return it;
    }
  }
  throw NumericalError("integrator", "implicit midpoint iteration did not converge; reduce dt");
}

double invariance_residual(const IntegrableSpec& spec, const TorusEmbedding& torus, const FrequencyVector& omega0,
                           int grid) {
  const int n = spec.dim();
  if (torus.dim() != n) throw UsageError("embedding dimension differs from the Hamiltonian");
  if (grid < 1) throw UsageError("grid must be positive");
  const auto D = derivative(torus, omega0);
  const auto nz = static_cast<std::size_t>(n);
  std::vector<double> th(nz), p(nz), q(nz), pd(nz), qd(nz);
  std::vector<int> idx(nz, 0);
  double worst = 0.0;
  for (;;) {
    for (std::size_t l = 0; l < nz; ++l) th[l] = static_cast<double>(idx[l]) / grid;
    torus.evaluate(th, p, q);
    spec.vector_field(p, q, pd, qd);
    for (std::size_t l = 0; l < nz; ++l) {
      // D Theta . omega0 = (D I . omega0, omega0 + D V . omega0)
      worst = std::max(worst, std::abs(pd[l] - real_at(D.action[l], th)));
      worst = std::max(worst, std::abs(qd[l] - omega0[static_cast<int>(l)] - real_at(D.shift[l], th)));
    }
    std::size_t l = 0;
    while (l < nz && ++idx[l] == grid) idx[l++] = 0;
    if (l == nz) break;
  }
  return worst;
}

VerificationReport verify_invariance(const IntegrableSpec& spec, const TorusEmbedding& torus,
                                     const FrequencyVector& omega0, const VerifyConfig& cfg) {
  const int n = spec.dim();
  const auto nz = static_cast<std::size_t>(n);
  if (cfg.grid < 8) throw UsageError("verification grid must have at least 8 points per angle");
  if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0)) throw UsageError("dt and t_max must be positive");
  if (!cfg.theta0.empty() && cfg.theta0.size() != nz) throw UsageError("theta0 has the wrong dimension");
  VerificationReport rep;
  rep.grid = cfg.grid;
  rep.dt = cfg.dt;
  rep.t_max = cfg.t_max;
  rep.invariance_residual = invariance_residual(spec, torus, omega0, cfg.grid);

  const std::vector<double> th0 = cfg.theta0.empty() ? std::vector<double>(nz, 0.0) : cfg.theta0;
  std::vector<double> p(nz), q(nz), tp(nz), tq(nz), th(nz);
  torus.evaluate(th0, p, q);
  const std::vector<double> q_start = q;
  const double E0 = spec.energy(p, q);
  const auto steps = static_cast<long>(std::llround(cfg.t_max / cfg.dt));
  const int stride = std::max(1, cfg.sample_every);
  auto record = [&](long k) {
    const double t = static_cast<double>(k) * cfg.dt;
    for (std::size_t l = 0; l < nz; ++l) th[l] = th0[l] + t * omega0[static_cast<int>(l)];
    torus.evaluate(th, tp, tq);
    const double d = distance(p, q, tp, tq);
    rep.shadow_distance = std::max(rep.shadow_distance, d);
    rep.energy_drift = std::max(rep.energy_drift, std::abs(spec.energy(p, q) - E0));
    if (k % stride == 0 || k == steps) rep.trajectory.push_back({t, p, q, d});
  };
  record(0);
  for (long k = 1; k <= steps; ++k) {
    const int it = implicit_midpoint_step(spec, p, q, cfg.dt, cfg.solve_tol, cfg.solve_max_iter);
    rep.max_solve_iterations = std::max(rep.max_solve_iterations, it);
    record(k);
  }
  const double T = static_cast<double>(steps) * cfg.dt;
  for (std::size_t l = 0; l < nz; ++l) {
    rep.rotation_number.push_back((q[l] - q_start[l]) / T);
    rep.rotation_error = std::max(rep.rotation_error, std::abs(rep.rotation_number[l] - omega0[static_cast<int>(l)]));
  }
  return rep;
}

}  // namespace kam
