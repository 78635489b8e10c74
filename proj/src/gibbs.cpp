#include "lrgibbs/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lrgibbs/oracle.hpp"

namespace lrg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Structural bond of the working Hamiltonian on the full chain.
int structural_bond(const HamiltonianSpec& spec) {
    return hamiltonian_mpo<cplx>(spec).max_bond();
}

void fill_budget(const HamiltonianSpec& spec, double beta, double epsilon, bool real_time, MergePlan& plan) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
    if (beta >= spec.n)
        throw BudgetError("beta = " + std::to_string(beta) + " must be below n = " + std::to_string(spec.n));
    spec.validate();

    ErrorBudget& b = plan.budget;
    b.epsilon_total = epsilon;
    b.beta = beta;
    b.real_time = real_time;

    plan.working = spec;
    plan.series.reset();
    b.epsilon_inner = epsilon;
    if (beta > 0.0 && has_long_range_part(spec)) {
        b.epsilon_h = epsilon / (6.0 * beta);
        b.epsilon_inner = epsilon / 3.0;
        auto approx = approximate_hamiltonian(spec, b.epsilon_h);
        plan.working = std::move(approx.spec);
        plan.series = std::move(approx.series);
    }

    // Constants of H itself; H~ moves g and g~ by at most eps_H / n.
    b.constants = model_constants(spec);
    b.c0 = b.constants.c0();
    b.a1 = b.constants.a1();
    b.a2 = b.constants.a2();

    const double cap = b.constants.beta0_max();
    b.q = std::isinf(cap) || beta == 0.0 ? 1 : std::max(1, static_cast<int>(std::ceil(beta / cap - 1e-12)));
    b.beta0 = beta / b.q;

    const double n = spec.n;
    const double spread = std::pow(n, std::log2(2.0 * b.a1));
    b.delta0 = b.epsilon_inner / (5.0 * b.q * b.a2 * spread);
    b.m0 = truncation_order_for(b.delta0, b.constants.g, b.constants.k, b.constants.g_tilde);
    if (b.m0 > kMaxTruncationOrder)
        throw BudgetError("truncation order " + std::to_string(b.m0) + " exceeds " +
                          std::to_string(kMaxTruncationOrder));

    b.q0 = plan.q0;
    b.predicted_high_temp = b.q0 >= 2 ? b.a2 * b.delta0 * b.q0 * std::pow(b.a1, b.q0 - 2) : 0.0;
    b.predicted_power = 5.0 * b.q * b.predicted_high_temp;
    if (b.epsilon_h > 0.0) {
        const double h = std::exp(beta * b.epsilon_h) * beta * b.epsilon_h;
        b.predicted_total = h + b.predicted_power * (1.0 + h);
    } else {
        b.predicted_total = b.predicted_power;
    }

    b.hamiltonian_bond = structural_bond(plan.working);
    const double leaf = spec.n >= 2 ? std::log10(static_cast<double>(spec.d) * spec.d) : 0.0;
    b.ledger_log10_beta0 = leaf + (b.q0 - 1) * merge_ledger_log10(b.hamiltonian_bond, b.m0);
    b.ledger_log10_beta = b.q * b.ledger_log10_beta0;
    b.time_cost_log10 =
        std::log10(n * n + n * b.q) + 4.0 * b.ledger_log10_beta + 3.0 * std::log10(static_cast<double>(spec.d));
}

template <typename Scalar>
std::optional<double> measure_blocks(const std::vector<Mpo<Scalar>>& blocks, const std::vector<Interval>& regions,
                                     const HamiltonianSpec& working, Scalar beta0, long cap) {
    double worst = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const long dim = hilbert_dimension(regions[i].size(), working.d);
        if (dim < 0 || dim > cap) return std::nullopt;
        const Matrix<Scalar> exact = gibbs_dense<Scalar>(restrict_to(working, regions[i]), beta0, cap);
        worst = std::max(worst, relative_error<Scalar>(exact, densify(blocks[i], cap), 2.0));
    }
    return worst;
}

template <typename Scalar>
Mpo<Scalar> product(const Mpo<Scalar>& a, const Mpo<Scalar>& b, const PipelineOptions& options, double& discarded) {
    if (!options.policy.truncates()) return multiply(a, b, options.bond_cap);
    auto out = multiply(a, b, options.policy, options.bond_cap);
    discarded += out.discarded_weight;
    return std::move(out.mpo);
}

template <typename Scalar>
void verify(const HamiltonianSpec& spec, const MergePlan& plan, const Mpo<Scalar>& high_temp, const Mpo<Scalar>& m,
            Scalar beta, Scalar beta0, const PipelineOptions& options, ErrorReport& rep) {
    const long dim = hilbert_dimension(spec.n, spec.d);
    if (!options.measure || dim < 0 || dim > options.dense_cap) return;
    rep.oracle_used = true;
    const Matrix<Scalar> exact = gibbs_dense<Scalar>(spec, beta, options.dense_cap);
    const Matrix<Scalar> approx = densify(m, options.dense_cap);
    const Matrix<Scalar> exact0 = gibbs_dense<Scalar>(plan.working, beta0, options.dense_cap);
    const Matrix<Scalar> approx0 = densify(high_temp, options.dense_cap);
    for (double p : options.pnorms) {
        rep.errors.push_back({p, relative_error<Scalar>(exact, approx, p)});
        rep.high_temp_errors.push_back({p, relative_error<Scalar>(exact0, approx0, p)});
        rep.passed = rep.passed && rep.errors.back().measured <= rep.budget.epsilon_total;
    }
    if (plan.series)
        rep.hamiltonian_error = schatten_norm<Scalar>(
            dense_matrix<Scalar>(spec, options.dense_cap) - dense_matrix<Scalar>(plan.working, options.dense_cap),
            kInfinityNorm);
    if (!rep.budget.real_time) {
        rep.partition_exact = partition_function(spec, rep.budget.beta, options.dense_cap);
        rep.partition_mpo = std::real(cplx(trace(m)));
        rep.partition_error = std::abs(*rep.partition_mpo - *rep.partition_exact) / *rep.partition_exact;
        rep.passed = rep.passed && *rep.partition_error <= rep.budget.epsilon_total;
    }
}

template <typename Scalar>
PipelineResult<Scalar> run_pipeline(const HamiltonianSpec& spec, double magnitude, bool real_time, double epsilon,
                                     const PipelineOptions& options) {
    options.policy.validate();
    PipelineResult<Scalar> out;
    ErrorReport& rep = out.report;
    auto start = Clock::now();
    const MergePlan plan = make_plan(spec, magnitude, epsilon, real_time);
    rep.seconds_plan = seconds_since(start);
    rep.model = spec.name;
    rep.n = spec.n;
    rep.budget = plan.budget;
    rep.policy = describe(options.policy);
    if (real_time) rep.certification = "empirical";
    else rep.certification = options.policy.lossless() || !options.policy.truncates() ? "certified" : "heuristic";

    Scalar beta0, beta;
    if constexpr (is_complex_v<Scalar>) {
        beta0 = real_time ? cplx(0.0, plan.budget.beta0) : cplx(plan.budget.beta0);
        beta = real_time ? cplx(0.0, magnitude) : cplx(magnitude);
    } else {
        beta0 = plan.budget.beta0;
        beta = magnitude;
    }

    start = Clock::now();
    Mpo<Scalar> high_temp = build_high_temp_mpo<Scalar>(plan, beta0, options, &rep);
    rep.seconds_high_temp = seconds_since(start);

    start = Clock::now();
    auto powered = power(high_temp, plan.budget.q, options.policy, options.bond_cap);
    rep.discarded_weight += powered.discarded_weight;
    out.mpo = std::move(powered.mpo);
    rep.seconds_power = seconds_since(start);
    rep.bond_profile = out.mpo.bond_profile();

    start = Clock::now();
    verify(spec, plan, high_temp, out.mpo, beta, beta0, options, rep);
    rep.seconds_verify = seconds_since(start);
    return out;
}

}  // namespace

std::vector<std::vector<Interval>> block_tree(int n, int leaf_size) {
    if (n < 1) throw std::invalid_argument("block tree needs n >= 1");
    if (leaf_size < 1) throw std::invalid_argument("leaf size must be positive");
    std::vector<std::vector<Interval>> layers(1);
    for (int lo = 1; lo <= n; lo += leaf_size) layers[0].push_back({lo, std::min(n, lo + leaf_size - 1)});
    while (layers.back().size() > 1) {
        const auto& prev = layers.back();
        std::vector<Interval> next;
        for (std::size_t i = 0; i + 1 < prev.size(); i += 2) next.push_back({prev[i].lo, prev[i + 1].hi});
        if (prev.size() % 2 == 1) next.push_back(prev.back());
        layers.push_back(std::move(next));
    }
    return layers;
}

MergePlan make_plan(const HamiltonianSpec& spec, double beta, double epsilon, bool real_time, int leaf_size) {
    MergePlan plan;
    plan.n = spec.n;
    plan.leaf_size = leaf_size;
    plan.layers = block_tree(spec.n, leaf_size);
    plan.q0 = static_cast<int>(plan.layers.size());
    fill_budget(spec, beta, epsilon, real_time, plan);
    return plan;
}

ErrorBudget plan_budget(const HamiltonianSpec& spec, double beta, double epsilon, bool real_time) {
    return make_plan(spec, beta, epsilon, real_time).budget;
}

template <typename Scalar>
std::vector<Mpo<Scalar>> leaf_gibbs_mpo(const MergePlan& plan, Scalar beta0) {
    std::vector<Mpo<Scalar>> out;
    for (const Interval& leaf : plan.layers.front()) {
        const HamiltonianSpec local = restrict_to(plan.working, leaf);
        out.push_back(from_dense<Scalar>(gibbs_dense<Scalar>(local, beta0), leaf.size(), local.d));
    }
    return out;
}

template <typename Scalar>
std::vector<Mpo<Scalar>> merge_layer(const std::vector<Mpo<Scalar>>& blocks, const MergePlan& plan, int q,
                                     Scalar beta0, const PipelineOptions& options, LayerRecord* record,
                                     double* discarded) {
    if (q < 2 || q > plan.q0) throw std::invalid_argument("merge layer index out of range");
    const auto& below = plan.layers[q - 2];
    if (blocks.size() != below.size()) throw std::invalid_argument("block count does not match the plan");
    double dropped = 0.0;
    bool certified = true;
    double ledger = 0.0;
    std::vector<Mpo<Scalar>> out;
    for (std::size_t i = 0; i + 1 < blocks.size(); i += 2) {
        MergeOperatorSpec ms = make_merge_spec(plan.working, below[i], below[i + 1], cplx(beta0), plan.budget.m0,
                                               plan.budget.constants);
        ms.delta0 = plan.budget.delta0;
        ms.force = true;
        const MergeOperator<Scalar> psi = build_merge_mpo<Scalar>(ms, options.policy, options.bond_cap);
        certified = certified && psi.certified;
        ledger = std::max(ledger, psi.ledger_log10);
        dropped += psi.discarded_weight;
        out.push_back(product(psi.mpo, concat(blocks[i], blocks[i + 1]), options, dropped));
    }
    if (blocks.size() % 2 == 1) out.push_back(blocks.back());
    if (record) {
        record->q = q;
        record->blocks = static_cast<int>(out.size());
        record->certified = certified;
        record->ledger_log10 = ledger;
        record->max_bond = 1;
        for (const auto& m : out) record->max_bond = std::max(record->max_bond, m.max_bond());
    }
    if (discarded) *discarded += dropped;
    return out;
}

template <typename Scalar>
Mpo<Scalar> build_high_temp_mpo(const MergePlan& plan, Scalar beta0, const PipelineOptions& options,
                                ErrorReport* report) {
    const ErrorBudget& b = plan.budget;
    auto start = Clock::now();
    std::vector<Mpo<Scalar>> blocks = leaf_gibbs_mpo<Scalar>(plan, beta0);
    LayerRecord leaf;
    leaf.q = 1;
    leaf.blocks = static_cast<int>(blocks.size());
    for (const auto& m : blocks) leaf.max_bond = std::max(leaf.max_bond, m.max_bond());
    leaf.ledger_log10 = std::log10(static_cast<double>(plan.working.d) * plan.working.d);
    if (options.measure) leaf.measured = measure_blocks(blocks, plan.layers[0], plan.working, beta0, options.dense_cap);
    leaf.seconds = seconds_since(start);
    if (report) report->layers.push_back(leaf);

    double predicted = 0.0;
    double ledger = leaf.ledger_log10;
    double discarded = 0.0;
    for (int q = 2; q <= plan.q0; ++q) {
        start = Clock::now();
        LayerRecord rec;
        blocks = merge_layer(blocks, plan, q, beta0, options, &rec, &discarded);
        predicted = b.a2 * b.delta0 + b.a1 * predicted;
        rec.predicted = predicted;
        ledger += rec.ledger_log10;
        rec.ledger_log10 = ledger;
        if (options.measure)
            rec.measured = measure_blocks(blocks, plan.layers[q - 1], plan.working, beta0, options.dense_cap);
        rec.seconds = seconds_since(start);
        if (report) report->layers.push_back(rec);
    }
    if (report) report->discarded_weight += discarded;
    return std::move(blocks.front());
}

template <typename Scalar>
PipelineResult<Scalar> build_gibbs_mpo(const HamiltonianSpec& spec, double beta, double epsilon,
                                       const PipelineOptions& options) {
    if (!is_complex_v<Scalar> && needs_complex(spec))
        throw std::domain_error("Hamiltonian has complex basis factors; use complex scalars");
    return run_pipeline<Scalar>(spec, beta, false, epsilon, options);
}

PipelineResult<cplx> build_real_time_mpo(const HamiltonianSpec& spec, double t, double epsilon,
                                         const PipelineOptions& options) {
    if (!(t >= 0.0)) throw std::invalid_argument("real-time runs need t >= 0");
    return run_pipeline<cplx>(spec, t, true, epsilon, options);
}

bool needs_complex(const HamiltonianSpec& spec) { return !spec.is_real(); }

std::string describe(const CompressionPolicy& policy) {
    switch (policy.mode) {
    case CompressionPolicy::Mode::None:
        return "none";
    case CompressionPolicy::Mode::FixedTolerance:
        if (policy.tolerance == 0.0) return "exact";
        {
            std::ostringstream os;
            os << "tol=" << policy.tolerance;
            return os.str();
        }
    case CompressionPolicy::Mode::FixedMaxBond:
        return "maxbond=" + std::to_string(policy.max_bond);
    }
    return "unknown";
}

template std::vector<Mpo<real>> leaf_gibbs_mpo<real>(const MergePlan&, real);
template std::vector<Mpo<cplx>> leaf_gibbs_mpo<cplx>(const MergePlan&, cplx);
template std::vector<Mpo<real>> merge_layer<real>(const std::vector<Mpo<real>>&, const MergePlan&, int, real,
                                                  const PipelineOptions&, LayerRecord*, double*);
template std::vector<Mpo<cplx>> merge_layer<cplx>(const std::vector<Mpo<cplx>>&, const MergePlan&, int, cplx,
                                                  const PipelineOptions&, LayerRecord*, double*);
template Mpo<real> build_high_temp_mpo<real>(const MergePlan&, real, const PipelineOptions&, ErrorReport*);
template Mpo<cplx> build_high_temp_mpo<cplx>(const MergePlan&, cplx, const PipelineOptions&, ErrorReport*);
template PipelineResult<real> build_gibbs_mpo<real>(const HamiltonianSpec&, double, double, const PipelineOptions&);
template PipelineResult<cplx> build_gibbs_mpo<cplx>(const HamiltonianSpec&, double, double, const PipelineOptions&);

}  // namespace lrg
