#include "kam/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "kam/errors.hpp"
#include "kam/report_io.hpp"

namespace kam {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const auto m = at.Mark();
    if (m.is_null()) throw UsageError(source_ + ": " + msg);
    throw UsageError(source_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": " + msg);
  }

  void require_map(const YAML::Node& n, const std::string& path) const {
    if (!n.IsMap()) fail(n, "'" + path + "' must be a mapping");
  }

  void only_keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> allowed) const {
    require_map(n, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in '" + path + "'");
    }
  }

  template <class T>
  T scalar(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(n, "'" + path + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + path + "' has an invalid value '" + n.Scalar() + "'");
    }
  }

  template <class T>
  void opt(const YAML::Node& parent, const char* key, const std::string& path, T& out) const {
    const auto n = parent[key];
    if (n) out = scalar<T>(n, path + "." + key);
  }

  double positive(const YAML::Node& parent, const char* key, const std::string& path, double& out) const {
    opt(parent, key, path, out);
    if (parent[key] && !(out > 0.0)) fail(parent[key], "'" + path + "." + key + "' must be positive");
    return out;
  }

  void int_at_least(const YAML::Node& parent, const char* key, const std::string& path, int& out, int lo) const {
    opt(parent, key, path, out);
    if (parent[key] && out < lo)
      fail(parent[key], "'" + path + "." + key + "' must be at least " + std::to_string(lo));
  }

  std::vector<int> ints(const YAML::Node& n, const std::string& path) const {
    if (!n.IsSequence()) fail(n, "'" + path + "' must be a list of integers");
    std::vector<int> v;
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(scalar<int>(n[i], path + "[" + std::to_string(i) + "]"));
    return v;
  }

  std::vector<double> doubles(const YAML::Node& n, const std::string& path) const {
    if (!n.IsSequence()) fail(n, "'" + path + "' must be a list of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < n.size(); ++i)
      v.push_back(scalar<double>(n[i], path + "[" + std::to_string(i) + "]"));
    return v;
  }

 private:
  std::string source_;
};

void parse_constants(const Reader& rd, const YAML::Node& n, RunConfig& c) {
  rd.only_keys(n, "constants", {"c_eps_r", "c_h_delta", "c_q_sigma", "c_smallness", "enforce"});
  auto& k = c.schedule.constants;
  rd.positive(n, "c_eps_r", "constants", k.c_eps_r);
  rd.positive(n, "c_h_delta", "constants", k.c_h_delta);
  rd.positive(n, "c_q_sigma", "constants", k.c_q_sigma);
  rd.positive(n, "c_smallness", "constants", c.reduction.c_smallness);
  rd.opt(n, "enforce", "constants", k.enforce);
  c.reduction.enforce = k.enforce;
}

void parse_hamiltonian(const Reader& rd, const YAML::Node& n, RunConfig& c) {
  rd.only_keys(n, "hamiltonian", {"h", "f", "eps", "action_box"});
  if (const auto h = n["h"]) {
    rd.only_keys(h, "hamiltonian.h", {"linear_omega", "monomials"});
    rd.opt(h, "linear_omega", "hamiltonian.h", c.h_linear_omega);
    if (const auto ms = h["monomials"]) {
      if (!ms.IsSequence()) rd.fail(ms, "'hamiltonian.h.monomials' must be a list");
      c.h_monomials.clear();
      for (std::size_t i = 0; i < ms.size(); ++i) {
        const std::string path = "hamiltonian.h.monomials[" + std::to_string(i) + "]";
        rd.only_keys(ms[i], path, {"exps", "coeff"});
        if (!ms[i]["exps"] || !ms[i]["coeff"]) rd.fail(ms[i], "'" + path + "' needs exps and coeff");
        Monomial m{rd.ints(ms[i]["exps"], path + ".exps"), rd.scalar<double>(ms[i]["coeff"], path + ".coeff")};
        for (int e : m.exps)
          if (e < 0) rd.fail(ms[i]["exps"], "'" + path + ".exps' must be nonnegative");
        c.h_monomials.push_back(std::move(m));
      }
    }
  }
  if (const auto fs = n["f"]) {
    if (!fs.IsSequence()) rd.fail(fs, "'hamiltonian.f' must be a list");
    c.f_terms.clear();
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string path = "hamiltonian.f[" + std::to_string(i) + "]";
      rd.only_keys(fs[i], path, {"k", "p_exps", "cos", "sin"});
      if (!fs[i]["k"]) rd.fail(fs[i], "'" + path + "' needs k");
      TrigTerm t{rd.ints(fs[i]["k"], path + ".k"), {}, 0.0, 0.0};
      if (fs[i]["p_exps"]) t.p_exps = rd.ints(fs[i]["p_exps"], path + ".p_exps");
      rd.opt(fs[i], "cos", path, t.a);
      rd.opt(fs[i], "sin", path, t.b);
      c.f_terms.push_back(std::move(t));
    }
  }
  rd.opt(n, "eps", "hamiltonian", c.eps);
  if (n["eps"] && !(c.eps >= 0.0)) rd.fail(n["eps"], "'hamiltonian.eps' must be nonnegative");
  rd.positive(n, "action_box", "hamiltonian", c.action_box);
}

}  // namespace

IntegrableSpec RunConfig::hamiltonian() const {
  const auto w = FrequencyVector::parse(frequency);
  IntegrableSpec spec{w, {}, f_terms, eps, action_box};
  const auto n = static_cast<std::size_t>(w.dim());
  if (h_linear_omega)
    for (std::size_t l = 0; l < n; ++l) {
      std::vector<int> e(n, 0);
      e[l] = 1;
      spec.h.push_back({e, w[static_cast<int>(l)]});
    }
  for (const auto& m : h_monomials) spec.h.push_back(m);
  spec.validate();
  return spec;
}

LayoutPtr RunConfig::layout() const {
  return SeriesLayout::get(FrequencyVector::parse(frequency).dim(), cutoff_k, deg_i, deg_w);
}

IterateConfig RunConfig::iterate_config() const {
  IterateConfig ic = iterate;
  ic.step = step;
  ic.step.eta = schedule.eta;
  ic.step.constants = schedule.constants;
  ic.step.seed = seed;
  ic.budget = budget;
  ic.basis = basis;
  return ic;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw UsageError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) + ": " +
                     e.msg);
  }
  RunConfig c;
  if (!root || root.IsNull()) throw UsageError(source + ": empty configuration");
  rd.only_keys(root, "<root>",
               {"frequency", "hamiltonian", "domain", "cutoffs", "arithmetic", "schedule", "constants", "step",
                "tolerances", "verify", "seed", "output"});

  if (const auto f = root["frequency"]) {
    c.frequency = rd.scalar<std::string>(f, "frequency");
    try {
      (void)FrequencyVector::parse(c.frequency);
    } catch (const KamError& e) {
      rd.fail(f, e.what());
    }
  }
  if (const auto n = root["hamiltonian"]) parse_hamiltonian(rd, n, c);
  if (const auto n = root["domain"]) {
    rd.only_keys(n, "domain", {"r", "s", "h"});
    if (const auto r = n["r"]) {
      if (r.IsScalar() && r.Scalar() == "auto")
        c.r = 0.0;
      else
        rd.positive(n, "r", "domain", c.r);
    }
    rd.positive(n, "s", "domain", c.s);
    if (n["s"] && c.s > 1.0) rd.fail(n["s"], "'domain.s' must lie in (0, 1]");
    rd.positive(n, "h", "domain", c.h);
  }
  if (const auto n = root["cutoffs"]) {
    rd.only_keys(n, "cutoffs", {"K", "degI", "degW"});
    rd.int_at_least(n, "K", "cutoffs", c.cutoff_k, 1);
    rd.int_at_least(n, "degI", "cutoffs", c.deg_i, 2);
    rd.int_at_least(n, "degW", "cutoffs", c.deg_w, 1);
  }
  if (const auto n = root["arithmetic"]) {
    rd.only_keys(n, "arithmetic", {"qmax", "max_l1", "max_points", "resonance_tol", "c_den", "top_candidates",
                                   "combo_bound", "q_min"});
    rd.int_at_least(n, "qmax", "arithmetic", c.qmax, 1);
    rd.int_at_least(n, "max_l1", "arithmetic", c.budget.max_l1, 1);
    rd.opt(n, "max_points", "arithmetic", c.budget.max_points);
    rd.positive(n, "resonance_tol", "arithmetic", c.budget.resonance_tol);
    rd.positive(n, "c_den", "arithmetic", c.basis.c_den);
    rd.int_at_least(n, "top_candidates", "arithmetic", c.basis.top_candidates, 1);
    rd.int_at_least(n, "combo_bound", "arithmetic", c.basis.combo_bound, 0);
    rd.positive(n, "q_min", "arithmetic", c.basis.q_min);
  }
  if (const auto n = root["schedule"]) {
    rd.only_keys(n, "schedule", {"eta", "C", "Q0", "max_iters", "stop_tol"});
    rd.positive(n, "eta", "schedule", c.schedule.eta);
    if (n["eta"] && c.schedule.eta >= 1.0) rd.fail(n["eta"], "'schedule.eta' must lie in (0, 1)");
    rd.positive(n, "C", "schedule", c.schedule.C);
    if (n["C"] && c.schedule.C < 1.0) rd.fail(n["C"], "'schedule.C' must be at least 1");
    if (const auto q = n["Q0"]) {
      if (q.IsScalar() && q.Scalar() == "auto")
        c.schedule.q0 = 0;
      else
        rd.int_at_least(n, "Q0", "schedule", c.schedule.q0, 1);
    }
    rd.int_at_least(n, "max_iters", "schedule", c.schedule.max_iters, 0);
    rd.opt(n, "stop_tol", "schedule", c.iterate.stop_tol);
    if (n["stop_tol"] && c.iterate.stop_tol < 0.0) rd.fail(n["stop_tol"], "'schedule.stop_tol' must be nonnegative");
  }
  if (const auto n = root["constants"]) parse_constants(rd, n, c);
  if (const auto n = root["step"]) {
    rd.only_keys(n, "step", {"lie_tol_factor", "truncation_budget", "drop_factor", "max_order", "inversion_degree",
                             "inversion_tol", "inversion_max_iter", "sym_samples", "enforce_flow_bounds"});
    rd.positive(n, "lie_tol_factor", "step", c.step.lie_tol_factor);
    rd.positive(n, "truncation_budget", "step", c.step.truncation_budget);
    rd.positive(n, "drop_factor", "step", c.step.drop_factor);
    rd.int_at_least(n, "max_order", "step", c.step.max_order, 2);
    rd.int_at_least(n, "inversion_degree", "step", c.step.inversion.degree, 1);
    rd.positive(n, "inversion_tol", "step", c.step.inversion.tol);
    rd.int_at_least(n, "inversion_max_iter", "step", c.step.inversion.max_iter, 1);
    rd.int_at_least(n, "sym_samples", "step", c.step.sym_samples, 1);
    rd.opt(n, "enforce_flow_bounds", "step", c.step.enforce_flow_bounds);
  }
  if (const auto n = root["tolerances"]) {
    rd.only_keys(n, "tolerances",
                 {"jacobian_bound", "reality_tol", "compose_tol_factor", "compose_budget", "newton_tol", "cond_cap"});
    rd.positive(n, "jacobian_bound", "tolerances", c.iterate.jacobian_bound);
    rd.positive(n, "reality_tol", "tolerances", c.iterate.reality_tol);
    rd.positive(n, "compose_tol_factor", "tolerances", c.iterate.compose_tol_factor);
    rd.positive(n, "compose_budget", "tolerances", c.iterate.compose_budget);
    rd.positive(n, "newton_tol", "tolerances", c.newton_tol);
    rd.positive(n, "cond_cap", "tolerances", c.reduction.cond_cap);
  }
  if (const auto n = root["verify"]) {
    rd.only_keys(n, "verify", {"enabled", "grid", "dt", "t_max", "theta0", "sample_every"});
    rd.opt(n, "enabled", "verify", c.verify);
    rd.int_at_least(n, "grid", "verify", c.verify_cfg.grid, 8);
    rd.positive(n, "dt", "verify", c.verify_cfg.dt);
    rd.positive(n, "t_max", "verify", c.verify_cfg.t_max);
    if (n["theta0"]) c.verify_cfg.theta0 = rd.doubles(n["theta0"], "verify.theta0");
    rd.int_at_least(n, "sample_every", "verify", c.verify_cfg.sample_every, 1);
  }
  if (const auto n = root["seed"]) c.seed = rd.scalar<std::uint64_t>(n, "seed");
  if (const auto n = root["output"]) {
    rd.only_keys(n, "output", {"dir", "embedding"});
    rd.opt(n, "dir", "output", c.output_dir);
    rd.opt(n, "embedding", "output", c.write_embedding);
  }

  // cross-field checks
  const int dim = FrequencyVector::parse(c.frequency).dim();
  const auto check_dim = [&](const YAML::Node& at, std::size_t got, const std::string& what) {
    if (static_cast<int>(got) != dim)
      rd.fail(at, what + " has " + std::to_string(got) + " entries, the frequency has " + std::to_string(dim));
  };
  const auto ham = root["hamiltonian"];
  for (std::size_t i = 0; i < c.h_monomials.size(); ++i)
    check_dim(ham["h"]["monomials"][i], c.h_monomials[i].exps.size(), "hamiltonian.h.monomials[" + std::to_string(i) + "].exps");
  for (std::size_t i = 0; i < c.f_terms.size(); ++i) {
    check_dim(ham["f"][i], c.f_terms[i].k.size(), "hamiltonian.f[" + std::to_string(i) + "].k");
    if (!c.f_terms[i].p_exps.empty())
      check_dim(ham["f"][i], c.f_terms[i].p_exps.size(), "hamiltonian.f[" + std::to_string(i) + "].p_exps");
    int l1 = 0;
    for (int v : c.f_terms[i].k) l1 += std::abs(v);
    if (l1 > c.cutoff_k) rd.fail(ham["f"][i], "hamiltonian.f[" + std::to_string(i) + "].k exceeds the cutoff K");
  }
  if (!c.verify_cfg.theta0.empty()) check_dim(root["verify"]["theta0"], c.verify_cfg.theta0.size(), "verify.theta0");
  if (c.budget.max_l1 < c.qmax) {
    const auto at = root["arithmetic"] ? root["arithmetic"] : root;
    rd.fail(at, "arithmetic.max_l1 (" + std::to_string(c.budget.max_l1) + ") must be at least qmax (" +
                    std::to_string(c.qmax) + ")");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string canonical_yaml(const RunConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "frequency" << YAML::Value << c.frequency;
  e << YAML::Key << "hamiltonian" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "h" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "linear_omega" << YAML::Value << c.h_linear_omega;
  e << YAML::Key << "monomials" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : c.h_monomials)
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "exps" << YAML::Value << YAML::Flow << m.exps << YAML::Key
      << "coeff" << YAML::Value << m.coeff << YAML::EndMap;
  e << YAML::EndSeq << YAML::EndMap;
  e << YAML::Key << "f" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : c.f_terms)
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "k" << YAML::Value << YAML::Flow << t.k << YAML::Key << "p_exps"
      << YAML::Value << YAML::Flow << t.p_exps << YAML::Key << "cos" << YAML::Value << t.a << YAML::Key << "sin"
      << YAML::Value << t.b << YAML::EndMap;
  e << YAML::EndSeq;
  e << YAML::Key << "eps" << YAML::Value << c.eps;
  e << YAML::Key << "action_box" << YAML::Value << c.action_box << YAML::EndMap;
  e << YAML::Key << "domain" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "r" << YAML::Value;
  if (c.r > 0.0)
    e << c.r;
  else
    e << "auto";
  e << YAML::Key << "s" << YAML::Value << c.s << YAML::Key << "h" << YAML::Value << c.h << YAML::EndMap;
  e << YAML::Key << "cutoffs" << YAML::Value << YAML::BeginMap << YAML::Key << "K" << YAML::Value << c.cutoff_k
    << YAML::Key << "degI" << YAML::Value << c.deg_i << YAML::Key << "degW" << YAML::Value << c.deg_w << YAML::EndMap;
  e << YAML::Key << "arithmetic" << YAML::Value << YAML::BeginMap << YAML::Key << "qmax" << YAML::Value << c.qmax
    << YAML::Key << "max_l1" << YAML::Value << c.budget.max_l1 << YAML::Key << "max_points" << YAML::Value
    << c.budget.max_points << YAML::Key << "resonance_tol" << YAML::Value << c.budget.resonance_tol << YAML::Key
    << "c_den" << YAML::Value << c.basis.c_den << YAML::Key << "top_candidates" << YAML::Value
    << c.basis.top_candidates << YAML::Key << "combo_bound" << YAML::Value << c.basis.combo_bound << YAML::Key
    << "q_min" << YAML::Value << c.basis.q_min << YAML::EndMap;
  e << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap << YAML::Key << "eta" << YAML::Value << c.schedule.eta
    << YAML::Key << "C" << YAML::Value << c.schedule.C << YAML::Key << "Q0" << YAML::Value;
  if (c.schedule.q0 > 0)
    e << c.schedule.q0;
  else
    e << "auto";
  e << YAML::Key << "max_iters" << YAML::Value << c.schedule.max_iters << YAML::Key << "stop_tol" << YAML::Value
    << c.iterate.stop_tol << YAML::EndMap;
  const auto& k = c.schedule.constants;
  e << YAML::Key << "constants" << YAML::Value << YAML::BeginMap << YAML::Key << "c_eps_r" << YAML::Value
    << k.c_eps_r << YAML::Key << "c_h_delta" << YAML::Value << k.c_h_delta << YAML::Key << "c_q_sigma"
    << YAML::Value << k.c_q_sigma << YAML::Key << "c_smallness" << YAML::Value << c.reduction.c_smallness
    << YAML::Key << "enforce" << YAML::Value << k.enforce << YAML::EndMap;
  e << YAML::Key << "step" << YAML::Value << YAML::BeginMap << YAML::Key << "lie_tol_factor" << YAML::Value
    << c.step.lie_tol_factor << YAML::Key << "truncation_budget" << YAML::Value << c.step.truncation_budget
    << YAML::Key << "drop_factor" << YAML::Value << c.step.drop_factor << YAML::Key << "max_order" << YAML::Value
    << c.step.max_order << YAML::Key << "inversion_degree" << YAML::Value << c.step.inversion.degree << YAML::Key
    << "inversion_tol" << YAML::Value << c.step.inversion.tol << YAML::Key << "inversion_max_iter" << YAML::Value
    << c.step.inversion.max_iter << YAML::Key << "sym_samples" << YAML::Value << c.step.sym_samples << YAML::Key
    << "enforce_flow_bounds" << YAML::Value << c.step.enforce_flow_bounds << YAML::EndMap;
  e << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap << YAML::Key << "jacobian_bound" << YAML::Value
    << c.iterate.jacobian_bound << YAML::Key << "reality_tol" << YAML::Value << c.iterate.reality_tol << YAML::Key
    << "compose_tol_factor" << YAML::Value << c.iterate.compose_tol_factor << YAML::Key << "compose_budget"
    << YAML::Value << c.iterate.compose_budget << YAML::Key << "newton_tol" << YAML::Value << c.newton_tol
    << YAML::Key << "cond_cap" << YAML::Value << c.reduction.cond_cap << YAML::EndMap;
  e << YAML::Key << "verify" << YAML::Value << YAML::BeginMap << YAML::Key << "enabled" << YAML::Value << c.verify
    << YAML::Key << "grid" << YAML::Value << c.verify_cfg.grid << YAML::Key << "dt" << YAML::Value
    << c.verify_cfg.dt << YAML::Key << "t_max" << YAML::Value << c.verify_cfg.t_max << YAML::Key << "theta0"
    << YAML::Value << YAML::Flow << c.verify_cfg.theta0 << YAML::Key << "sample_every" << YAML::Value
    << c.verify_cfg.sample_every << YAML::EndMap;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap << YAML::Key << "dir" << YAML::Value << c.output_dir
    << YAML::Key << "embedding" << YAML::Value << c.write_embedding << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

ArithmeticProfile build_profile(const RunConfig& cfg) {
  return ArithmeticProfile::build(FrequencyVector::parse(cfg.frequency), cfg.qmax, cfg.budget);
}

RunOutcome run_pipeline(const RunConfig& cfg) {
  const auto spec = cfg.hamiltonian();
  const auto L = cfg.layout();
  ReductionConfig rc = cfg.reduction;
  rc.r_override = cfg.r;
  const DomainParams hint{cfg.r > 0.0 ? cfg.r : 1.0, cfg.s, cfg.h};
  RunOutcome out{reduce_to_param_form(spec, L, hint, rc), {}, {}, std::nullopt, std::nullopt};
  const auto profile = build_profile(cfg);
  if (profile.resonant()) throw resonance_error("the frequency is resonant within the profile range");
  out.schedule = build_schedule(profile, out.reduced.domain, out.reduced.recipe.eps_param, cfg.schedule);
  out.result = iterate(out.reduced.H, profile, out.schedule, cfg.iterate_config());
  out.placed = place_torus(out.result, spec, cfg.newton_tol);
  if (cfg.verify) out.verification = verify_invariance(spec, out.placed->embedding, spec.omega, cfg.verify_cfg);
  return out;
}

void write_run_outputs(const RunConfig& cfg, const RunOutcome& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  {
    std::ofstream os(dir / "config.yaml", std::ios::binary);
    os << canonical_yaml(cfg);
    if (!os) throw UsageError("cannot write " + (dir / "config.yaml").string());
  }
  write_json_file(dir / "versions.json", {{"schema", "kam.versions/1"},
                                          {"kam", KAM_VERSION},
                                          {"compiler", __VERSION__},
                                          {"cxx_standard", static_cast<long>(__cplusplus)},
                                          {"yaml_cpp", "system"},
                                          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_PATCH)}});
  {
    std::ofstream os(dir / "iterations.csv", std::ios::binary);
    write_iterations_csv(os, out.result);
    if (!os) throw UsageError("cannot write " + (dir / "iterations.csv").string());
  }
  Json result = {{"schema", "kam.result/1"}};
  result["hamiltonian"] = to_json(cfg.hamiltonian());
  result["reduction"] = to_json(out.reduced.recipe);
  result["domain"] = {{"r", out.reduced.domain.r}, {"s", out.reduced.domain.s}, {"h", out.reduced.domain.h}};
  result["schedule"] = to_json(out.schedule);
  const Json summary = result_to_json(out.result);
  for (const auto& [k, v] : summary.items()) result[k] = v;
  if (out.placed) result["action_offset"] = out.placed->action_offset;
  if (out.verification) {
    result["invariance_residual"] = out.verification->invariance_residual;
    result["shadow_distance"] = out.verification->shadow_distance;
  }
  write_json_file(dir / "result.json", result);
  if (cfg.write_embedding && out.placed) write_json_file(dir / "embedding.json", to_json(out.placed->embedding));
  if (out.verification) {
    write_json_file(dir / "verification.json", to_json(*out.verification));
    std::ofstream os(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(os, *out.verification);
    if (!os) throw UsageError("cannot write " + (dir / "trajectory.csv").string());
  }
}

}  // namespace kam
