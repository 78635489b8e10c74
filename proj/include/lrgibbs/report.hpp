#pragma once

#include <json.hpp>

#include "lrgibbs/expsum.hpp"
#include "lrgibbs/gibbs.hpp"
#include "lrgibbs/merge.hpp"

namespace lrg {

// Structured reports. Every document carries "format" and "version"; wall
// times live under "timing" keys so that reports can be compared byte for
// byte after strip_timing().

/// p as a JSON value: a number, or the string "inf".
nlohmann::json pnorm_json(double p);

/// Name, size and a digest of the term list.
nlohmann::json model_json(const HamiltonianSpec& spec);

/// FNV-1a over the canonical term list, as 16 hex digits.
std::string model_digest(const HamiltonianSpec& spec);

nlohmann::json to_json(const ModelConstants& c);
nlohmann::json to_json(const ErrorBudget& b);
nlohmann::json to_json(const ErrorReport& r);
nlohmann::json to_json(const TruncationReport& r);
nlohmann::json to_json(const ExpSumApprox& s);

/// Removes every "timing" member, recursively.
nlohmann::json strip_timing(nlohmann::json j);

}  // namespace lrg
