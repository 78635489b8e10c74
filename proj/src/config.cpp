#include "lrgibbs/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lrgibbs/merge.hpp"

namespace lrg {

namespace {

using nlohmann::json;

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
    if (!j.at(key).is_number()) throw ConfigError("'" + key + "' in " + where + " must be a number");
    return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& where, double fallback) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

int integer(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
    if (!j.at(key).is_number_integer()) throw ConfigError("'" + key + "' in " + where + " must be an integer");
    return j.at(key).get<int>();
}

int integer_or(const json& j, const std::string& key, const std::string& where, int fallback) {
    return j.contains(key) ? integer(j, key, where) : fallback;
}

int op_index(int d, const json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (!v.is_string()) throw ConfigError("operator must be a basis name or index");
    try {
        return basis_index(d, v.get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

HamiltonianSpec checked(HamiltonianSpec spec) {
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    return spec;
}

int site_count(const json& j, const std::string& where) {
    const int n = integer(j, "n", where);
    if (n < 1 || n > 64) throw ConfigError("n must lie in [1, 64]");
    return n;
}

std::vector<double> number_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be a list");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(where + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<int> integer_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be a list");
    std::vector<int> out;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw ConfigError(where + " entries must be integers");
        out.push_back(v.get<int>());
    }
    return out;
}

}  // namespace

HamiltonianSpec parse_model(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw ConfigError("model needs a string 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    const std::string where = "model (" + kind + ")";
    if (kind == "power_law_ising") {
        allow_keys(j, where, {"kind", "n", "alpha", "J", "hx"});
        return checked(power_law_ising(site_count(j, where), number(j, "alpha", where), number_or(j, "J", where, 1.0),
                                       number_or(j, "hx", where, 0.0)));
    }
    if (kind == "power_law_heisenberg") {
        allow_keys(j, where, {"kind", "n", "alpha", "J"});
        return checked(
            power_law_heisenberg(site_count(j, where), number(j, "alpha", where), number_or(j, "J", where, 1.0)));
    }
    if (kind == "nearest_neighbor_ising") {
        allow_keys(j, where, {"kind", "n", "J", "hx"});
        return checked(nearest_neighbor_ising(site_count(j, where), number_or(j, "J", where, 1.0),
                                              number_or(j, "hx", where, 0.0)));
    }
    if (kind == "pair") {
        allow_keys(j, where, {"kind", "name", "n", "d", "alpha", "coupling", "onsite"});
        const int n = site_count(j, where);
        const int d = integer_or(j, "d", where, 2);
        if (d < 2 || d > 8) throw ConfigError("d must lie in [2, 8]");
        const int dd = d * d;
        PairModel pair;
        pair.alpha = number(j, "alpha", where);
        pair.coupling = MatrixXr::Zero(dd, dd);
        pair.onsite = Eigen::VectorXd::Zero(dd);
        if (j.contains("coupling")) {
            if (!j.at("coupling").is_array()) throw ConfigError("coupling must be a list");
            for (const auto& e : j.at("coupling")) {
                if (!e.is_array() || e.size() != 3 || !e[2].is_number())
                    throw ConfigError("coupling entries are [op, op, value]");
                const int a = op_index(d, e[0]), b = op_index(d, e[1]);
                if (a < 1 || a >= dd || b < 1 || b >= dd) throw ConfigError("coupling operator out of range");
                pair.coupling(a, b) += e[2].get<double>();
            }
        }
        if (j.contains("onsite")) {
            if (!j.at("onsite").is_array()) throw ConfigError("onsite must be a list");
            for (const auto& e : j.at("onsite")) {
                if (!e.is_array() || e.size() != 2 || !e[1].is_number())
                    throw ConfigError("onsite entries are [op, value]");
                const int a = op_index(d, e[0]);
                if (a < 1 || a >= dd) throw ConfigError("onsite operator out of range");
                pair.onsite(a) += e[1].get<double>();
            }
        }
        const std::string name = j.value("name", std::string("pair"));
        return checked(make_pair_hamiltonian(name, n, d, std::move(pair)));
    }
    if (kind == "terms") {
        allow_keys(j, where, {"kind", "name", "n", "d", "k", "terms"});
        HamiltonianSpec spec;
        spec.name = j.value("name", std::string("terms"));
        spec.n = site_count(j, where);
        spec.d = integer_or(j, "d", where, 2);
        spec.k = integer_or(j, "k", where, 2);
        if (spec.d < 2 || spec.d > 8) throw ConfigError("d must lie in [2, 8]");
        if (!j.contains("terms") || !j.at("terms").is_array()) throw ConfigError("terms model needs a 'terms' list");
        for (const auto& t : j.at("terms")) {
            allow_keys(t, "term", {"sites", "ops", "coefficient"});
            LocalTerm term;
            term.sites = integer_list(t.value("sites", json::array()), "term sites");
            if (!t.contains("ops") || !t.at("ops").is_array()) throw ConfigError("term needs an 'ops' list");
            for (const auto& o : t.at("ops")) term.ops.push_back(op_index(spec.d, o));
            term.coefficient = number(t, "coefficient", "term");
            spec.terms.push_back(std::move(term));
        }
        return checked(std::move(spec));
    }
    throw ConfigError("unknown model kind '" + kind + "'");
}

HamiltonianSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    if (j.is_object() && j.contains("model") && j.size() == 1) return parse_model(j.at("model"));
    return parse_model(j);
}

CompressionPolicy parse_policy(const std::string& text) {
    CompressionPolicy p;
    try {
        if (text == "none") p = CompressionPolicy::none();
        else if (text == "exact") p = CompressionPolicy::exact();
        else if (text.rfind("tol=", 0) == 0) p = CompressionPolicy::fixed_tolerance(std::stod(text.substr(4)));
        else if (text.rfind("maxbond=", 0) == 0) p = CompressionPolicy::fixed_max_bond(std::stoi(text.substr(8)));
        else throw ConfigError("compression must be none, exact, tol=<x> or maxbond=<b>");
        p.validate();
    } catch (const std::invalid_argument&) {
        throw ConfigError("invalid compression '" + text + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("invalid compression '" + text + "'");
    }
    return p;
}

std::vector<double> parse_pnorms(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "inf") {
            out.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        double p = 0.0;
        try {
            std::size_t used = 0;
            p = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("invalid p-norm '" + item + "'");
        }
        if (!(p >= 1.0)) throw ConfigError("p-norms need p >= 1");
        out.push_back(p);
    }
    if (out.empty()) throw ConfigError("empty p-norm list");
    return out;
}

double RunConfig::resolved_beta() const {
    if (beta) return *beta;
    if (beta_factor) return *beta_factor * model_constants(model).beta0_max();
    throw ConfigError("config needs beta or beta_factor");
}

RunConfig parse_config(const json& j, const std::string& base_dir) {
    allow_keys(j, "config", {"version", "model", "beta", "beta_factor", "t", "epsilon", "compression", "bond_cap",
                             "dense_cap", "seed", "pnorms", "out", "sweep", "quick"});
    if (j.contains("version") && (!j.at("version").is_number_integer() || j.at("version").get<int>() != kConfigVersion))
        throw ConfigError("unsupported config version");
    RunConfig cfg;
    if (!j.contains("model")) throw ConfigError("config needs a model");
    const json& model = j.at("model");
    if (model.is_string()) {
        std::filesystem::path path(model.get<std::string>());
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        cfg.model = load_model_file(path.string());
    } else {
        cfg.model = parse_model(model);
    }
    if (j.contains("beta") && j.contains("beta_factor")) throw ConfigError("give beta or beta_factor, not both");
    if (j.contains("beta")) cfg.beta = number(j, "beta", "config");
    if (j.contains("beta_factor")) cfg.beta_factor = number(j, "beta_factor", "config");
    if (j.contains("t")) cfg.time = number(j, "t", "config");
    if ((cfg.beta && *cfg.beta < 0.0) || (cfg.beta_factor && *cfg.beta_factor < 0.0) || (cfg.time && *cfg.time < 0.0))
        throw ConfigError("beta, beta_factor and t must be >= 0");
    cfg.epsilon = number_or(j, "epsilon", "config", cfg.epsilon);
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
    if (j.contains("compression")) {
        if (!j.at("compression").is_string()) throw ConfigError("compression must be a string");
        cfg.policy = parse_policy(j.at("compression").get<std::string>());
    }
    cfg.bond_cap = integer_or(j, "bond_cap", "config", cfg.bond_cap);
    if (cfg.bond_cap < 1) throw ConfigError("bond_cap must be positive");
    if (j.contains("dense_cap")) {
        if (!j.at("dense_cap").is_number_integer()) throw ConfigError("dense_cap must be an integer");
        cfg.dense_cap = j.at("dense_cap").get<long>();
        if (cfg.dense_cap < 1) throw ConfigError("dense_cap must be positive");
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("pnorms")) {
        cfg.pnorms.clear();
        if (!j.at("pnorms").is_array()) throw ConfigError("pnorms must be a list");
        for (const auto& p : j.at("pnorms")) {
            if (p.is_string()) {
                const auto parsed = parse_pnorms(p.get<std::string>());
                cfg.pnorms.insert(cfg.pnorms.end(), parsed.begin(), parsed.end());
            } else if (p.is_number() && p.get<double>() >= 1.0) {
                cfg.pnorms.push_back(p.get<double>());
            } else {
                throw ConfigError("pnorms entries are numbers >= 1 or \"inf\"");
            }
        }
    }
    if (j.contains("out")) {
        if (!j.at("out").is_string()) throw ConfigError("out must be a string");
        cfg.out = j.at("out").get<std::string>();
    }
    if (j.contains("quick")) {
        if (!j.at("quick").is_boolean()) throw ConfigError("quick must be a boolean");
        cfg.quick = j.at("quick").get<bool>();
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        allow_keys(s, "sweep", {"kind", "n", "beta_factor", "epsilon", "m0", "build"});
        if (s.contains("kind")) {
            if (!s.at("kind").is_string()) throw ConfigError("sweep kind must be a string");
            cfg.sweep.kind = s.at("kind").get<std::string>();
            if (cfg.sweep.kind != "grid" && cfg.sweep.kind != "m0") throw ConfigError("sweep kind must be grid or m0");
        }
        if (s.contains("n")) cfg.sweep.n = integer_list(s.at("n"), "sweep n");
        if (s.contains("beta_factor")) cfg.sweep.beta_factor = number_list(s.at("beta_factor"), "sweep beta_factor");
        if (s.contains("epsilon")) cfg.sweep.epsilon = number_list(s.at("epsilon"), "sweep epsilon");
        if (s.contains("m0")) cfg.sweep.m0 = integer_list(s.at("m0"), "sweep m0");
        if (s.contains("build")) {
            if (!s.at("build").is_boolean()) throw ConfigError("sweep build must be a boolean");
            cfg.sweep.build = s.at("build").get<bool>();
        }
        for (int m : cfg.sweep.m0)
            if (m < 0 || m > kMaxTruncationOrder) throw ConfigError("sweep m0 out of range");
        for (double e : cfg.sweep.epsilon)
            if (!(e > 0.0 && e <= 1.0)) throw ConfigError("sweep epsilon must lie in (0, 1]");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace lrg
