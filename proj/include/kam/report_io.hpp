#pragma once

// JSON and CSV forms of series, reports and results. Every JSON document
// carries a "schema" tag; numbers use shortest round-trip formatting so equal
// inputs give byte-identical files.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "kam/diophantine.hpp"
#include "kam/kam_iterate.hpp"
#include "kam/kam_step.hpp"
#include "kam/reduction.hpp"
#include "kam/series.hpp"
#include "kam/verify.hpp"

namespace kam {

using Json = nlohmann::ordered_json;

/// {n, cutoffK, degI, degW, real, terms: [{k, alpha, beta, re, im}]}
Json series_to_json(const FourierTaylor& f);
FourierTaylor series_from_json(const Json& j);

Json to_json(const ConditionCheck& c);
Json to_json(const RationalBasis& b);
Json to_json(const StepReport& r);
Json to_json(const Schedule& s);
Json to_json(const ReductionRecipe& r);
Json to_json(const IntegrableSpec& spec);
IntegrableSpec spec_from_json(const Json& j);
Json to_json(const TorusEmbedding& e);
TorusEmbedding embedding_from_json(const Json& j);
Json to_json(const VerificationReport& r);

/// Convergence summary: omega~, error measures, reason, per-iteration records.
Json result_to_json(const TorusResult& r);

/// i, eps_i, norm_P, sigma_i, Q_i, telescope and the remaining record columns.
void write_iterations_csv(std::ostream& os, const TorusResult& r);
/// t, p_1..p_n, q_1..q_n, distance
void write_trajectory_csv(std::ostream& os, const VerificationReport& r);

/// Writes j.dump(2) plus a newline; throws UsageError when the file cannot be written.
void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);
/// Shortest round-trip decimal form used in CSV cells.
std::string format_double(double v);

}  // namespace kam
