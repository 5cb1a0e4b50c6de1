#include "kam/report_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "kam/errors.hpp"

namespace kam {

namespace {

std::vector<int> head(const Index4& v, int n) { return {v.begin(), v.begin() + n}; }

// Non-finite values have no JSON literal; they become null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json series_list(const std::vector<FourierTaylor>& fs) {
  Json a = Json::array();
  for (const auto& f : fs) a.push_back(series_to_json(f));
  return a;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Json series_to_json(const FourierTaylor& f) {
  const auto& L = f.layout();
  const int n = L.n();
  Json terms = Json::array();
  for (const auto& t : f.terms())
    terms.push_back({{"k", head(L.mode(static_cast<int>(t.mode)), n)},
                     {"alpha", head(L.alpha(t.alpha), n)},
                     {"beta", head(L.beta(t.beta), n)},
                     {"re", t.c.real()},
                     {"im", t.c.imag()}});
  return {{"n", n},
          {"cutoffK", L.cutoff_k()},
          {"degI", L.deg_i()},
          {"degW", L.deg_w()},
          {"real", f.is_real()},
          {"terms", std::move(terms)}};
}

FourierTaylor series_from_json(const Json& j) {
  try {
    const auto L = SeriesLayout::get(j.at("n").get<int>(), j.at("cutoffK").get<int>(), j.at("degI").get<int>(),
                                     j.at("degW").get<int>());
    std::vector<FourierTaylor::Term> terms;
    for (const auto& t : j.at("terms")) {
      const auto k = t.at("k").get<std::vector<int>>();
      const auto a = t.at("alpha").get<std::vector<int>>();
      const auto b = t.at("beta").get<std::vector<int>>();
      const int m = L->mode_index(k), ai = L->alpha_index(a), bi = L->beta_index(b);
      if (m < 0 || ai < 0 || bi < 0) throw UsageError("series term outside the declared cutoffs");
      terms.push_back({static_cast<std::uint32_t>(m), static_cast<std::uint16_t>(ai), static_cast<std::uint16_t>(bi),
                       Complex(t.at("re").get<double>(), t.at("im").get<double>())});
    }
    return FourierTaylor::from_terms(L, terms, j.value("real", true));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed series JSON: ") + e.what());
  }
}

Json to_json(const ConditionCheck& c) {
  return {{"name", c.name}, {"lhs", num(c.lhs)}, {"rhs", num(c.rhs)}, {"pass", c.pass}, {"enforced", c.enforced}};
}

Json to_json(const RationalBasis& b) {
  Json vs = Json::array();
  for (std::size_t i = 0; i < b.vectors.size(); ++i)
    vs.push_back({{"q", b.vectors[i].q},
                  {"numerators", b.vectors[i].numerators},
                  {"approx_error", num(b.approx_error[i])},
                  {"score", num(b.score[i])}});
  return {{"Q", b.Q}, {"determinant", b.determinant}, {"max_score", num(b.max_score())}, {"vectors", std::move(vs)}};
}

Json to_json(const StepReport& r) {
  Json stages = Json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"j", s.j},
                      {"q", s.q},
                      {"skipped", s.skipped},
                      {"norm_P", num(s.norm_P)},
                      {"norm_F", num(s.norm_F)},
                      {"norm_F_bound", num(s.norm_F_bound)},
                      {"dtheta_F", num(s.dtheta_F)},
                      {"dtheta_bound", num(s.dtheta_bound)},
                      {"daction_F", num(s.daction_F)},
                      {"daction_bound", num(s.daction_bound)},
                      {"conjugacy_defect", num(s.conjugacy_defect)},
                      {"flow_discard", num(s.flow_discard)},
                      {"flow_order", s.flow_order},
                      {"norm_Ptilde", num(s.norm_Ptilde)},
                      {"ptilde_ratio", num(s.ptilde_ratio)},
                      {"shift", num(s.shift)},
                      {"shift_ratio", num(s.shift_ratio)}});
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"schema", "kam.step-report/1"},
          {"eps", num(r.eps)},
          {"r", num(r.r)},
          {"s", num(r.s)},
          {"h", num(r.h)},
          {"sigma", num(r.sigma)},
          {"Q", num(r.Q)},
          {"psi_Q", num(r.psi_Q)},
          {"eta", num(r.eta)},
          {"input_norm", num(r.input_norm)},
          {"basis", to_json(r.basis)},
          {"checks", std::move(checks)},
          {"stages", std::move(stages)},
          {"tail_norm", num(r.tail_norm)},
          {"tail_bound", num(r.tail_bound)},
          {"tail_lemma", num(r.tail_lemma)},
          {"norm_Pn_plus", num(r.norm_Pn_plus)},
          {"norm_transport", num(r.norm_transport)},
          {"norm_Pplus", num(r.norm_Pplus)},
          {"pplus_bound", num(r.pplus_bound)},
          {"truncation_discard", num(r.truncation_discard)},
          {"nu_norm", num(r.nu_norm)},
          {"nu_ratio", num(r.nu_ratio)},
          {"inversion_iterations", r.inversion_iterations},
          {"phi_minus_id", num(r.phi_minus_id)},
          {"dphi_minus_id", num(r.dphi_minus_id)},
          {"w_phi_minus_id", num(r.w_phi_minus_id)},
          {"w_dphi_minus_id", num(r.w_dphi_minus_id)},
          {"symplecticity", num(r.symplecticity)},
          {"success", r.success}};
}

Json to_json(const Schedule& s) {
  Json checks = Json::array();
  for (const auto& c : s.checks) checks.push_back(to_json(c));
  return {{"eta", s.eta},
          {"C", s.C},
          {"Q0", s.q0},
          {"tail", {{"value", num(s.tail.value)}, {"integral", num(s.tail.integral)}, {"xcut", num(s.tail.xcut)},
                    {"truncated", s.tail.truncated}}},
          {"sum_sigma", s.sum_sigma},
          {"eps", s.eps},
          {"r", s.r},
          {"h", s.h},
          {"s", s.s},
          {"sigma", s.sigma},
          {"delta", s.delta},
          {"Q", s.Q},
          {"checks", std::move(checks)}};
}

Json to_json(const ReductionRecipe& r) {
  return {{"M", num(r.M)},
          {"F", num(r.F)},
          {"r", num(r.r)},
          {"eps_param", num(r.eps_param)},
          {"hessian_cond", num(r.hessian_cond)},
          {"smallness_lhs", num(r.smallness_lhs)},
          {"smallness_rhs", num(r.smallness_rhs)},
          {"eps_threshold", num(r.eps_threshold)},
          {"smallness_pass", r.smallness_pass},
          {"truncation_discard", num(r.truncation_discard)},
          {"inverse_residual", num(r.inverse_residual)}};
}

Json to_json(const IntegrableSpec& spec) {
  Json h = Json::array(), f = Json::array();
  for (const auto& m : spec.h) h.push_back({{"exps", m.exps}, {"coeff", m.coeff}});
  for (const auto& t : spec.f) f.push_back({{"k", t.k}, {"p_exps", t.p_exps}, {"cos", t.a}, {"sin", t.b}});
  return {{"omega", std::vector<double>(spec.omega.values().begin(), spec.omega.values().end())},
          {"h", std::move(h)},
          {"f", std::move(f)},
          {"eps", spec.eps},
          {"action_box", spec.action_box}};
}

IntegrableSpec spec_from_json(const Json& j) {
  try {
    IntegrableSpec s{FrequencyVector(j.at("omega").get<std::vector<double>>()), {}, {}, 0.0, 1.0};
    for (const auto& m : j.at("h")) s.h.push_back({m.at("exps").get<std::vector<int>>(), m.at("coeff").get<double>()});
    for (const auto& t : j.at("f"))
      s.f.push_back({t.at("k").get<std::vector<int>>(), t.value("p_exps", std::vector<int>{}), t.value("cos", 0.0),
                     t.value("sin", 0.0)});
    s.eps = j.at("eps").get<double>();
    s.action_box = j.value("action_box", 1.0);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed Hamiltonian JSON: ") + e.what());
  }
}

Json to_json(const TorusEmbedding& e) {
  return {{"schema", "kam.embedding/1"},
          {"description", "theta -> (base + action(theta), theta + shift(theta)), series in theta only"},
          {"base", e.base},
          {"action", series_list(e.action)},
          {"shift", series_list(e.shift)}};
}

TorusEmbedding embedding_from_json(const Json& j) {
  try {
    TorusEmbedding e;
    e.base = j.at("base").get<std::vector<double>>();
    for (const auto& s : j.at("action")) e.action.push_back(series_from_json(s));
    for (const auto& s : j.at("shift")) e.shift.push_back(series_from_json(s));
    if (e.action.size() != e.base.size() || e.shift.size() != e.base.size())
      throw UsageError("embedding components have inconsistent dimensions");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw UsageError(std::string("malformed embedding JSON: ") + ex.what());
  }
}

Json to_json(const VerificationReport& r) {
  return {{"schema", "kam.verification/1"},
          {"grid", r.grid},
          {"invariance_residual", num(r.invariance_residual)},
          {"integrator", r.integrator},
          {"dt", r.dt},
          {"t_max", r.t_max},
          {"shadow_distance", num(r.shadow_distance)},
          {"energy_drift", num(r.energy_drift)},
          {"rotation_number", r.rotation_number},
          {"rotation_error", num(r.rotation_error)},
          {"max_solve_iterations", r.max_solve_iterations},
          {"trajectory_rows", r.trajectory.size()}};
}

Json result_to_json(const TorusResult& r) {
  Json hist = Json::array();
  for (const auto& rec : r.history) {
    Json row = {{"i", rec.i},
                {"eps", rec.eps},
                {"r", rec.r},
                {"h", rec.h},
                {"s", rec.s},
                {"sigma", rec.sigma},
                {"delta", rec.delta},
                {"Q", rec.Q},
                {"norm_P", num(rec.norm_P)},
                {"envelope_ok", rec.envelope_ok},
                {"telescope", num(rec.telescope)},
                {"telescope_scale", num(rec.telescope_scale)},
                {"step_distance", num(rec.step_distance)},
                {"jacobian_product", num(rec.jacobian_product)},
                {"compose_discard", num(rec.compose_discard)}};
    if (rec.has_step) row["step"] = to_json(rec.report);
    hist.push_back(std::move(row));
  }
  return {{"omega_tilde", r.omega_tilde},
          {"freq_shift", num(r.freq_shift)},
          {"w_embedding", num(r.w_embedding)},
          {"w_embedding_sigma", num(r.w_embedding_sigma)},
          {"c4_surrogate", num(r.c4_surrogate)},
          {"c5_surrogate", num(r.c5_surrogate)},
          {"telescope_sum", num(r.telescope_sum)},
          {"final_remainder", num(r.final_remainder)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"reason", r.reason},
          {"history", std::move(hist)}};
}

void write_iterations_csv(std::ostream& os, const TorusResult& r) {
  os << "i,eps_i,norm_P,sigma_i,Q_i,telescope,r_i,h_i,s_i,envelope_ok,step_distance,jacobian_product\r\n";
  for (const auto& rec : r.history)
    os << rec.i << ',' << format_double(rec.eps) << ',' << format_double(rec.norm_P) << ',' << format_double(rec.sigma)
       << ',' << rec.Q << ',' << format_double(rec.telescope) << ',' << format_double(rec.r) << ','
       << format_double(rec.h) << ',' << format_double(rec.s) << ',' << (rec.envelope_ok ? "true" : "false") << ','
       << format_double(rec.step_distance) << ',' << format_double(rec.jacobian_product) << "\r\n";
}

void write_trajectory_csv(std::ostream& os, const VerificationReport& r) {
  const std::size_t n = r.trajectory.empty() ? 0 : r.trajectory.front().p.size();
  os << 't';
  for (std::size_t l = 0; l < n; ++l) os << ",p" << l + 1;
  for (std::size_t l = 0; l < n; ++l) os << ",q" << l + 1;
  os << ",distance\r\n";
  for (const auto& s : r.trajectory) {
    os << format_double(s.t);
    for (double v : s.p) os << ',' << format_double(v);
    for (double v : s.q) os << ',' << format_double(v);
    os << ',' << format_double(s.distance) << "\r\n";
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UsageError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw UsageError("failed writing " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path.string());
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

}  // namespace kam
