#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrgibbs/model.hpp"
#include "lrgibbs/mpo.hpp"

namespace lrg {

inline constexpr int kConfigVersion = 1;
inline constexpr int kReportVersion = 1;

/// Model section of a run config. Kinds and their keys:
///   power_law_ising       n, alpha, J (1), hx (0)
///   power_law_heisenberg  n, alpha, J (1)
///   nearest_neighbor_ising n, J (1), hx (0)
///   pair                  n, d (2), alpha, coupling [[op, op, value]...], onsite [[op, value]...]
///   terms                 n, d (2), k (2), terms [{sites, ops, coefficient}...]
/// Operators are basis names ("X", "Z", "g3"). Unknown keys are rejected.
HamiltonianSpec parse_model(const nlohmann::json& j);

/// Reads a model from a JSON file (the object itself, or {"model": {...}}).
HamiltonianSpec load_model_file(const std::string& path);

struct SweepConfig {
    std::string kind = "grid";             // grid or m0
    std::vector<int> n;                    // grid: chain lengths (defaults to the model's n)
    std::vector<double> beta_factor{1.0};  // grid: beta in units of 1/(24 g k^2)
    std::vector<double> epsilon;           // grid: defaults to the run epsilon
    std::vector<int> m0;                   // m0 sweep
    bool build = true;                     // grid: run the pipeline, not only the planner
};

struct RunConfig {
    HamiltonianSpec model;
    std::optional<double> beta;
    std::optional<double> beta_factor;  // beta = factor / (24 g k^2)
    std::optional<double> time;         // real-time run
    double epsilon = 1e-2;
    CompressionPolicy policy = CompressionPolicy::exact();
    int bond_cap = kDefaultBondCap;
    long dense_cap = kDefaultDenseCap;
    std::uint64_t seed = 20240601;
    std::vector<double> pnorms{1.0, 2.0, std::numeric_limits<double>::infinity()};
    std::string out = "out";
    SweepConfig sweep;
    bool quick = false;  // verify: smaller instance counts

    /// Resolved inverse temperature (beta, or beta_factor times the cap).
    double resolved_beta() const;
};

/// Parses a config document; relative model paths resolve against `base_dir`.
/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// "none", "exact", "tol=<x>" or "maxbond=<b>".
CompressionPolicy parse_policy(const std::string& text);

/// Comma separated list of p values; "inf" is the operator norm.
std::vector<double> parse_pnorms(const std::string& text);

}  // namespace lrg
