#include "lrgibbs/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>

#include "lrgibbs/config.hpp"

namespace lrg {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json norms_json(const std::vector<NormRecord>& records) {
    json out = json::array();
    for (const auto& r : records) out.push_back({{"p", pnorm_json(r.p)}, {"relative_error", r.measured}});
    return out;
}

json complex_json(cplx z) {
    if (z.imag() == 0.0) return z.real();
    return json{{"re", z.real()}, {"im", z.imag()}};
}

}  // namespace

json pnorm_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

std::string model_digest(const HamiltonianSpec& spec) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    mix(&spec.n, sizeof spec.n);
    mix(&spec.d, sizeof spec.d);
    mix(&spec.k, sizeof spec.k);
    for (const auto& t : spec.terms) {
        for (int s : t.sites) mix(&s, sizeof s);
        for (int o : t.ops) mix(&o, sizeof o);
        mix(&t.coefficient, sizeof t.coefficient);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json model_json(const HamiltonianSpec& spec) {
    json j{{"name", spec.name}, {"n", spec.n}, {"d", spec.d}, {"k", spec.k}, {"terms", spec.terms.size()},
           {"digest", model_digest(spec)}};
    if (spec.alpha) j["alpha"] = *spec.alpha;
    return j;
}

json to_json(const ModelConstants& c) {
    return {{"g", c.g}, {"g_tilde", c.g_tilde}, {"k", c.k}, {"C", c.c()}, {"c0", c.c0()},
            {"a1", c.a1()}, {"a2", c.a2()}, {"beta0_max", std::isinf(c.beta0_max()) ? json("inf") : json(c.beta0_max())}};
}

json to_json(const ErrorBudget& b) {
    return {{"epsilon", b.epsilon_total},
            {"epsilon_inner", b.epsilon_inner},
            {b.real_time ? "t" : "beta", b.beta},
            {"real_time", b.real_time},
            {"beta0", b.beta0},
            {"Q", b.q},
            {"delta0", b.delta0},
            {"m0", b.m0},
            {"epsilon_H", b.epsilon_h},
            {"q0", b.q0},
            {"constants", to_json(b.constants)},
            {"predicted",
             {{"high_temp", b.predicted_high_temp}, {"powered", b.predicted_power}, {"total", b.predicted_total}}},
            {"ledger",
             {{"hamiltonian_bond", b.hamiltonian_bond},
              {"log10_bond_beta0", b.ledger_log10_beta0},
              {"log10_bond_beta", b.ledger_log10_beta},
              {"log10_time_cost", b.time_cost_log10}}}};
}

json to_json(const ErrorReport& r) {
    json layers = json::array();
    for (const auto& l : r.layers)
        layers.push_back({{"q", l.q},
                          {"blocks", l.blocks},
                          {"predicted", l.predicted},
                          {"measured", optional_json(l.measured)},
                          {"max_bond", l.max_bond},
                          {"log10_ledger", l.ledger_log10},
                          {"certified", l.certified},
                          {"timing", {{"seconds", l.seconds}}}});
    return {{"format", "lrgibbs.report"},
            {"version", kReportVersion},
            {"model", r.model},
            {"n", r.n},
            {"certification", r.certification},
            {"compression", r.policy},
            {"budget", to_json(r.budget)},
            {"layers", layers},
            {"high_temp_errors", norms_json(r.high_temp_errors)},
            {"errors", norms_json(r.errors)},
            {"hamiltonian_error", optional_json(r.hamiltonian_error)},
            {"partition",
             {{"exact", optional_json(r.partition_exact)},
              {"mpo", optional_json(r.partition_mpo)},
              {"relative_error", optional_json(r.partition_error)}}},
            {"bond_profile", r.bond_profile},
            {"discarded_weight", r.discarded_weight},
            {"oracle_used", r.oracle_used},
            {"passed", r.passed},
            {"timing",
             {{"plan", r.seconds_plan},
              {"high_temp", r.seconds_high_temp},
              {"power", r.seconds_power},
              {"verify", r.seconds_verify}}}};
}

json to_json(const TruncationReport& r) {
    json orders = json::array();
    for (const auto& o : r.orders) orders.push_back({{"m", o.m}, {"norm", o.norm}, {"bound", o.bound}});
    return {{"format", "lrgibbs.truncation"},
            {"version", kReportVersion},
            {"model", r.model},
            {"sites", r.sites},
            {"beta0", complex_json(r.beta0)},
            {"m0", r.m0},
            {"c0", r.c0},
            {"measured", r.measured},
            {"bound", r.bound},
            {"orders", orders},
            {"certified", r.certified},
            {"passed", r.passed}};
}

json to_json(const ExpSumApprox& s) { return json::parse(series_to_json(s)); }

json strip_timing(json j) {
    if (j.is_object()) {
        j.erase("timing");
        for (auto& [key, value] : j.items()) value = strip_timing(value);
    } else if (j.is_array()) {
        for (auto& value : j) value = strip_timing(value);
    }
    return j;
}

}  // namespace lrg
