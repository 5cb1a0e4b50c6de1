#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "kam/diophantine.hpp"
#include "kam/errors.hpp"
#include "kam/kam_step.hpp"
#include "kam/report_io.hpp"
#include "kam/run_config.hpp"

namespace fs = std::filesystem;
using namespace kam;

namespace {

int cmd_analyze(const std::string& freq, int qmax, int max_l1, double s, double C, const std::string& json_path) {
  const auto w = FrequencyVector::parse(freq);
  EnumerationBudget b;
  b.max_l1 = std::max(max_l1, qmax);
  const auto prof = ArithmeticProfile::build(w, qmax, b);
  std::cout << "Q,Psi,Delta,tail,k\r\n";
  for (int Q = 1; Q <= qmax; ++Q) {
    const auto tail = bruno_russmann_tail(prof, Q, prof.delta_max());
    std::cout << Q << ',' << format_double(prof.psi(Q)) << ',' << format_double(prof.delta(Q)) << ','
              << format_double(tail.value) << ",\"";
    const auto& k = prof.minimizer(Q);
    for (std::size_t i = 0; i < k.size(); ++i) std::cout << (i ? " " : "") << k[i];
    std::cout << "\"\r\n";
  }
  if (!json_path.empty()) {
    Json j = {{"schema", "kam.analyze/1"},
              {"omega", std::vector<double>(w.values().begin(), w.values().end())},
              {"qmax", qmax},
              {"resonant", prof.resonant()},
              {"delta_max", prof.delta_max()}};
    try {
      const auto q0 = choose_q0(prof, s, C);
      j["q0"] = {{"s", s}, {"C", C}, {"Q0", q0.q0}, {"tail", q0.tail.value}, {"threshold", q0.threshold}};
    } catch (const KamError& e) {
      j["q0"] = {{"s", s}, {"C", C}, {"error", e.what()}};
    }
    write_json_file(json_path, j);
  }
  return 0;
}

int cmd_approx(const std::string& freq, double Q, const BasisSearch& search, int max_l1) {
  const auto w = FrequencyVector::parse(freq);
  EnumerationBudget b;
  b.max_l1 = max_l1;
  const auto basis = rational_basis(w, Q, search, b);
  Json j = {{"schema", "kam.basis/1"}, {"omega", std::vector<double>(w.values().begin(), w.values().end())}};
  j["basis"] = to_json(basis);
  j["psi_Q"] = psi(w, Q, b).value;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_run(const std::string& config, const std::string& out_override) {
  const auto cfg = load_run_config(config);
  const fs::path dir = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  const auto out = run_pipeline(cfg);
  write_run_outputs(cfg, out, dir);
  const auto& r = out.result;
  std::printf("iterations %d, final |P| %.3e, converged %s (%s)\n", r.iterations, r.final_remainder,
              r.converged ? "true" : "false", r.reason.c_str());
  std::printf("omega~ =");
  for (double v : r.omega_tilde) std::printf(" %.17g", v);
  std::printf("\n");
  if (out.verification)
    std::printf("invariance residual %.3e, shadow distance %.3e\n", out.verification->invariance_residual,
                out.verification->shadow_distance);
  std::printf("outputs in %s\n", dir.string().c_str());
  if (!r.converged) throw NumericalError("not-converged", r.reason);
  return 0;
}

int cmd_verify(const std::string& result_path, const std::string& emb_path, VerifyConfig vc, std::string out_dir) {
  const auto result = read_json_file(result_path);
  if (!result.contains("hamiltonian")) throw UsageError(result_path + " has no 'hamiltonian' section");
  const auto spec = spec_from_json(result.at("hamiltonian"));
  const auto emb = embedding_from_json(read_json_file(emb_path));
  if (emb.dim() != spec.dim()) throw UsageError("embedding and Hamiltonian dimensions differ");
  const auto rep = verify_invariance(spec, emb, spec.omega, vc);
  if (out_dir.empty()) out_dir = fs::path(result_path).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  fs::create_directories(out_dir);
  write_json_file(fs::path(out_dir) / "verification.json", to_json(rep));
  std::ofstream os(fs::path(out_dir) / "trajectory.csv", std::ios::binary);
  write_trajectory_csv(os, rep);
  if (!os) throw UsageError("cannot write trajectory.csv");
  std::printf("invariance residual %.3e, shadow distance %.3e, energy drift %.3e\n", rep.invariance_residual,
              rep.shadow_distance, rep.energy_drift);
  return 0;
}

int cmd_step(const std::string& config, const std::string& out_path) {
  const auto cfg = load_run_config(config);
  const auto spec = cfg.hamiltonian();
  ReductionConfig rc = cfg.reduction;
  rc.r_override = cfg.r;
  const auto red = reduce_to_param_form(spec, cfg.layout(), {cfg.r > 0.0 ? cfg.r : 1.0, cfg.s, cfg.h}, rc);
  const auto prof = build_profile(cfg);
  auto sc = cfg.schedule;
  sc.max_iters = std::max(sc.max_iters, 1);
  const auto S = build_schedule(prof, red.domain, red.recipe.eps_param, sc);
  const auto ic = cfg.iterate_config();
  StepInput in{spec.omega, red.H.e, red.H.P, S.domain(0), S.sigma[0], static_cast<double>(S.Q[0]),
               prof.psi(S.Q[0]), S.eps[0], rational_basis(spec.omega, S.Q[0], ic.basis, ic.budget)};
  const auto res = kam_step(in, ic.step);
  const auto j = to_json(res.report);
  if (out_path.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json_file(out_path, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KAM tori by rational approximation: arithmetic, KAM iteration and verification"};
  app.require_subcommand(1);

  std::string freq = "golden", json_path, config, out, result_path, emb_path;
  int qmax = 50, max_l1 = 0;
  double s = 0.4, C = 1.0, Q = 10.0;
  BasisSearch search;
  VerifyConfig vc;
  bool dump = false;

  auto* analyze = app.add_subcommand("analyze", "Psi, Delta and tail table (CSV on stdout)");
  analyze->add_option("--freq", freq, "preset name or comma separated decimals");
  analyze->add_option("--qmax", qmax, "largest Q")->check(CLI::Range(1, 1000000));
  analyze->add_option("--max-l1", max_l1, "enumeration radius (defaults to qmax)");
  analyze->add_option("--s", s, "strip width for the Q0 choice");
  analyze->add_option("--C", C, "sigma constant for the Q0 choice");
  analyze->add_option("--json", json_path, "write a JSON summary here");

  auto* approx = app.add_subcommand("approx", "unimodular basis of rational approximations (JSON on stdout)");
  approx->add_option("--freq", freq, "preset name or comma separated decimals");
  approx->add_option("--Q", Q, "approximation scale")->required();
  approx->add_option("--c-den", search.c_den, "denominator factor");
  approx->add_option("--top", search.top_candidates, "candidate subset width");
  approx->add_option("--max-l1", max_l1, "enumeration radius (defaults to 200)");

  auto* run = app.add_subcommand("run", "full pipeline from a YAML config");
  run->add_option("--config", config, "YAML run configuration")->required();
  run->add_option("--out", out, "output directory (overrides output.dir)");

  auto* verify = app.add_subcommand("verify", "dynamical verification of a computed torus");
  verify->add_option("--result", result_path, "result.json of a run")->required();
  verify->add_option("--embedding", emb_path, "embedding.json of a run")->required();
  verify->add_option("--tmax", vc.t_max, "integration time");
  verify->add_option("--dt", vc.dt, "integrator step");
  verify->add_option("--grid", vc.grid, "points per angle for the invariance residual");
  verify->add_option("--out", out, "output directory (defaults to that of result.json)");

  auto* step = app.add_subcommand("step", "one KAM step on the first schedule entry of a config");
  step->add_option("--config", config, "YAML run configuration")->required();
  step->add_flag("--dump-report", dump, "write the step report JSON");
  step->add_option("--out", out, "report file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*analyze) return cmd_analyze(freq, qmax, max_l1, s, C, json_path);
    if (*approx) return cmd_approx(freq, Q, search, max_l1 > 0 ? max_l1 : 200);
    if (*run) return cmd_run(config, out);
    if (*verify) return cmd_verify(result_path, emb_path, vc, out);
    if (*step) {
      if (!dump) throw UsageError("step needs --dump-report");
      return cmd_step(config, out);
    }
  } catch (const KamError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
