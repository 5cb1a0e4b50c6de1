#pragma once

// The YAML run configuration and the end-to-end pipeline shared by the CLI
// and the acceptance checks: reduce, schedule, iterate, place, verify.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kam/diophantine.hpp"
#include "kam/kam_iterate.hpp"
#include "kam/reduction.hpp"
#include "kam/verify.hpp"

namespace kam {

struct RunConfig {
  std::string frequency = "golden";

  bool h_linear_omega = true;  // h contains omega0 . p
  std::vector<Monomial> h_monomials;
  std::vector<TrigTerm> f_terms;
  double eps = 1e-6;
  double action_box = 1.0;

  double r = 0.0;  // 0 selects r = (F eps / M)^(1/2)
  double s = 0.4;
  double h = 2e-3;

  int cutoff_k = 16;
  int deg_i = 2;
  int deg_w = 2;

  int qmax = 2000;
  EnumerationBudget budget{};
  BasisSearch basis{};

  ScheduleConfig schedule{};
  ReductionConfig reduction{};
  StepConfig step{};
  IterateConfig iterate{};  // step, budget and basis are filled from the fields above
  double newton_tol = 1e-14;

  bool verify = true;
  VerifyConfig verify_cfg{};

  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool write_embedding = true;

  IntegrableSpec hamiltonian() const;
  LayoutPtr layout() const;
  IterateConfig iterate_config() const;
};

/// Throws UsageError with "<source>:<line>:<column>: <message>" on invalid input.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved configuration, every field present, fixed key order.
std::string canonical_yaml(const RunConfig& cfg);

struct RunOutcome {
  ReducedSystem reduced;
  Schedule schedule;
  TorusResult result;
  std::optional<PlacedTorus> placed;
  std::optional<VerificationReport> verification;
};

/// Builds the arithmetic profile, reduces, iterates, places and (optionally) verifies.
RunOutcome run_pipeline(const RunConfig& cfg);
ArithmeticProfile build_profile(const RunConfig& cfg);

/// Writes config.yaml, versions.json, iterations.csv, result.json and, when
/// present, embedding.json, verification.json and trajectory.csv.
void write_run_outputs(const RunConfig& cfg, const RunOutcome& out, const std::filesystem::path& dir);

}  // namespace kam
