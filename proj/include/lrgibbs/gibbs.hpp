#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lrgibbs/expsum.hpp"
#include "lrgibbs/merge.hpp"
#include "lrgibbs/model.hpp"
#include "lrgibbs/mpo.hpp"

namespace lrg {

struct ErrorBudget {
    double epsilon_total = 0.0;
    double epsilon_inner = 0.0;  // target for the merge pipeline (eps/3 on the 2-local path)
    double beta = 0.0;           // |beta|, or t for real-time runs
    bool real_time = false;
    double beta0 = 0.0;          // |beta0| = beta / q
    int q = 1;                   // number of powering factors
    double delta0 = 0.0;
    int m0 = 0;
    double epsilon_h = 0.0;      // 0 on the generic path
    ModelConstants constants;
    double c0 = 1.0;
    double a1 = 12.0;
    double a2 = 2.0;
    int q0 = 1;                  // layers of the block tree

    double predicted_high_temp = 0.0;  // a2 delta0 q0 a1^{q0-2}
    double predicted_power = 0.0;      // 5 (beta/beta0) predicted_high_temp
    double predicted_total = 0.0;      // including the Hamiltonian approximation

    int hamiltonian_bond = 1;          // structural D_H of the working Hamiltonian
    double ledger_log10_beta0 = 0.0;   // bond ledger of M_{beta0}
    double ledger_log10_beta = 0.0;    // q * ledger_log10_beta0
    double time_cost_log10 = 0.0;      // log10 (n^2 + n q) D_beta^4 d^3
};

/// Binary block tree: layer 1 holds leaves of `leaf_size` sites, each higher
/// layer joins adjacent pairs and carries an odd trailing block up unchanged.
struct MergePlan {
    int n = 1;
    int leaf_size = 2;
    int q0 = 1;
    std::vector<std::vector<Interval>> layers;
    ErrorBudget budget;
    HamiltonianSpec working;              // H, or H~ on the 2-local path
    std::optional<ExpSumApprox> series;   // set on the 2-local path
};

std::vector<std::vector<Interval>> block_tree(int n, int leaf_size = 2);

/// Throws BudgetError for beta >= n, std::invalid_argument for epsilon
/// outside (0, 1] or negative beta.
ErrorBudget plan_budget(const HamiltonianSpec& spec, double beta, double epsilon, bool real_time = false);

/// Budget plus block tree plus working Hamiltonian.
MergePlan make_plan(const HamiltonianSpec& spec, double beta, double epsilon, bool real_time = false,
                    int leaf_size = 2);

struct PipelineOptions {
    CompressionPolicy policy = CompressionPolicy::exact();
    int bond_cap = kDefaultBondCap;
    long dense_cap = kDefaultDenseCap;
    std::vector<double> pnorms{1.0, 2.0, std::numeric_limits<double>::infinity()};
    bool measure = true;   // oracle checks whenever d^n fits the dense cap
};

struct LayerRecord {
    int q = 1;
    int blocks = 0;
    double predicted = 0.0;           // eps_q from the recursion, eps_1 = 0
    std::optional<double> measured;   // max over blocks, relative Schatten-2
    int max_bond = 1;
    double ledger_log10 = 0.0;
    bool certified = true;
    double seconds = 0.0;
};

struct NormRecord {
    double p = 2.0;
    double measured = 0.0;
};

struct ErrorReport {
    std::string model;
    int n = 0;
    ErrorBudget budget;
    std::string certification;  // certified, empirical or heuristic
    std::string policy;
    std::vector<LayerRecord> layers;
    std::vector<NormRecord> high_temp_errors;  // M_{beta0} against the working Hamiltonian
    std::vector<NormRecord> errors;            // final MPO against the input Hamiltonian
    std::optional<double> hamiltonian_error;   // ||H - H~||_inf
    std::optional<double> partition_exact;
    std::optional<double> partition_mpo;
    std::optional<double> partition_error;
    std::vector<int> bond_profile;
    double discarded_weight = 0.0;
    bool oracle_used = false;
    bool passed = true;  // every measured error <= epsilon_total
    double seconds_plan = 0.0;
    double seconds_high_temp = 0.0;
    double seconds_power = 0.0;
    double seconds_verify = 0.0;
};

template <typename Scalar>
struct PipelineResult {
    Mpo<Scalar> mpo;
    ErrorReport report;
};

/// Exact e^{-beta0 H_leaf} per leaf, each on its own sites.
template <typename Scalar>
std::vector<Mpo<Scalar>> leaf_gibbs_mpo(const MergePlan& plan, Scalar beta0);

/// Joins the blocks of layer q-1 into those of layer q (1-based layers, q >= 2).
template <typename Scalar>
std::vector<Mpo<Scalar>> merge_layer(const std::vector<Mpo<Scalar>>& blocks, const MergePlan& plan, int q,
                                     Scalar beta0, const PipelineOptions& options, LayerRecord* record = nullptr,
                                     double* discarded = nullptr);

/// M_{beta0} on the full chain; layer records go to `report` when given.
template <typename Scalar>
Mpo<Scalar> build_high_temp_mpo(const MergePlan& plan, Scalar beta0, const PipelineOptions& options,
                                ErrorReport* report = nullptr);

/// M_beta = (M_{beta0})^Q with the error report.
template <typename Scalar>
PipelineResult<Scalar> build_gibbs_mpo(const HamiltonianSpec& spec, double beta, double epsilon,
                                       const PipelineOptions& options = {});

/// M_t approximating e^{-iHt}.
PipelineResult<cplx> build_real_time_mpo(const HamiltonianSpec& spec, double t, double epsilon,
                                         const PipelineOptions& options = {});

/// Whether the pipeline needs complex scalars for this spec.
bool needs_complex(const HamiltonianSpec& spec);

std::string describe(const CompressionPolicy& policy);

extern template std::vector<Mpo<real>> leaf_gibbs_mpo<real>(const MergePlan&, real);
extern template std::vector<Mpo<cplx>> leaf_gibbs_mpo<cplx>(const MergePlan&, cplx);
extern template std::vector<Mpo<real>> merge_layer<real>(const std::vector<Mpo<real>>&, const MergePlan&, int, real,
                                                         const PipelineOptions&, LayerRecord*, double*);
extern template std::vector<Mpo<cplx>> merge_layer<cplx>(const std::vector<Mpo<cplx>>&, const MergePlan&, int, cplx,
                                                         const PipelineOptions&, LayerRecord*, double*);
extern template Mpo<real> build_high_temp_mpo<real>(const MergePlan&, real, const PipelineOptions&, ErrorReport*);
extern template Mpo<cplx> build_high_temp_mpo<cplx>(const MergePlan&, cplx, const PipelineOptions&, ErrorReport*);
extern template PipelineResult<real> build_gibbs_mpo<real>(const HamiltonianSpec&, double, double,
                                                           const PipelineOptions&);
extern template PipelineResult<cplx> build_gibbs_mpo<cplx>(const HamiltonianSpec&, double, double,
                                                           const PipelineOptions&);

}  // namespace lrg
