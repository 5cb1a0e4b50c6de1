#pragma once

// Dynamical checks of a computed torus theta -> (p(theta), q(theta)) of
// H(p, q) = h(p) + eps f(p, q), independent of the series machinery for H.

#include <string>
#include <vector>

#include "kam/kam_iterate.hpp"
#include "kam/reduction.hpp"

namespace kam {

struct VerifyConfig {
  int grid = 32;        // points per angle for the invariance residual
  double dt = 1e-3;
  double t_max = 100.0;
  std::vector<double> theta0;  // start angle on the torus; empty means 0
  int sample_every = 100;      // integrator steps between trajectory rows
  double solve_tol = 1e-15;    // implicit midpoint fixed point tolerance
  int solve_max_iter = 100;
};

struct TrajectorySample {
  double t = 0.0;
  std::vector<double> p, q;
  double distance = 0.0;
};

struct VerificationReport {
  int grid = 0;
  double invariance_residual = 0.0;  // sup |X_H(Theta) - D Theta . omega0| on the grid
  double dt = 0.0, t_max = 0.0;
  std::string integrator = "implicit-midpoint";
  double shadow_distance = 0.0;  // max_t |z(t) - Theta(theta0 + t omega0)|
  double energy_drift = 0.0;     // max_t |H(z(t)) - H(z(0))|
  std::vector<double> rotation_number;  // (q(T) - q(0)) / T from the continuous lift
  double rotation_error = 0.0;          // |rotation_number - omega0|_inf
  int max_solve_iterations = 0;
  std::vector<TrajectorySample> trajectory;
};

/// One implicit midpoint step z1 = z0 + dt X((z0 + z1) / 2); returns the fixed point iterations used.
int implicit_midpoint_step(const IntegrableSpec& spec, std::vector<double>& p, std::vector<double>& q, double dt,
                           double tol, int max_iter);

double invariance_residual(const IntegrableSpec& spec, const TorusEmbedding& torus, const FrequencyVector& omega0,
                           int grid);

VerificationReport verify_invariance(const IntegrableSpec& spec, const TorusEmbedding& torus,
                                     const FrequencyVector& omega0, const VerifyConfig& cfg = {});

}  // namespace kam
