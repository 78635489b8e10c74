#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrgibbs/model.hpp"
#include "lrgibbs/mpo.hpp"

namespace lrg {

struct CheckResult {
    std::string id;
    std::string title;
    bool passed = false;
    bool expected_fail = false;  // outside the certified regime on purpose
    nlohmann::json detail;
    double seconds = 0.0;
};

struct SuiteOptions {
    std::uint64_t seed = 20240601;
    bool quick = false;    // fewer sizes and instances
    int instances = 100;   // randomized instances per lemma
    long dense_cap = kDefaultDenseCap;
};

/// Bundled verification model: power-law transverse-field Ising, alpha = 3,
/// J = 1, hx = 1.
HamiltonianSpec bundled_chain(int n);

/// Runs every bound check on the bundled models; `on_result` sees each check
/// as it finishes. A check that throws is recorded as failed.
std::vector<CheckResult> run_verify_suite(const SuiteOptions& options,
                                          const std::function<void(const CheckResult&)>& on_result = {});

/// Individual checks, each on the bundled models.
CheckResult check_truncation_sweep(const SuiteOptions& options);
CheckResult check_order_decay(const SuiteOptions& options);
CheckResult check_recursion(const SuiteOptions& options);
/// End-to-end errors and partition function over n, beta grids.
std::vector<CheckResult> check_end_to_end(const SuiteOptions& options);
CheckResult check_expsum(const SuiteOptions& options);
CheckResult check_real_time(const SuiteOptions& options);
CheckResult check_disjoint_product(const SuiteOptions& options);
CheckResult check_perturbation(const SuiteOptions& options);
CheckResult check_powering(const SuiteOptions& options);
CheckResult check_mpo_algebra(const SuiteOptions& options);
CheckResult check_scaling_fit(const SuiteOptions& options);
CheckResult check_forced_truncation(const SuiteOptions& options);
CheckResult check_decoupled(const SuiteOptions& options);

/// Random MPO with the given interior bonds; entries uniform in [-1, 1].
template <typename Scalar>
Mpo<Scalar> random_mpo(int n, int d, int bond, std::mt19937_64& rng);

/// Random Hermitian d^n x d^n matrix with unit operator norm.
MatrixXc random_hermitian(long dim, std::mt19937_64& rng);

/// R^2 of the least-squares line through (x, y).
double r_squared(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json to_json(const CheckResult& r);

extern template Mpo<real> random_mpo<real>(int, int, int, std::mt19937_64&);
extern template Mpo<cplx> random_mpo<cplx>(int, int, int, std::mt19937_64&);

}  // namespace lrg
