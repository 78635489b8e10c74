#include <cmath>

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lrgibbs/gibbs.hpp"
#include "lrgibbs/oracle.hpp"

using namespace lrg;

namespace {

HamiltonianSpec chain(int n) { return power_law_ising(n, 3.0, 1.0, 1.0); }

MatrixXr expm_sym(const MatrixXr& h, double factor) {
    Eigen::SelfAdjointEigenSolver<MatrixXr> es(h);
    return es.eigenvectors() * (factor * es.eigenvalues().array()).exp().matrix().asDiagonal() *
           es.eigenvectors().transpose();
}

double max_error(const ErrorReport& r) {
    double worst = 0.0;
    for (const auto& e : r.errors) worst = std::max(worst, e.measured);
    return worst;
}

}  // namespace

TEST(BlockTree, PowerOfTwo) {
    const auto t = block_tree(8);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[0].size(), 4u);
    EXPECT_EQ(t[1].size(), 2u);
    EXPECT_EQ(t[2].front(), (Interval{1, 8}));
}

TEST(BlockTree, OddSizesTileTheChain) {
    for (int n : {1, 2, 3, 5, 6, 7, 11}) {
        const auto t = block_tree(n);
        EXPECT_EQ(t.back().size(), 1u);
        EXPECT_EQ(t.back().front(), (Interval{1, n}));
        for (const auto& layer : t) {
            int next = 1;
            for (const auto& b : layer) {
                EXPECT_EQ(b.lo, next);
                EXPECT_LE(b.size(), n);
                next = b.hi + 1;
            }
            EXPECT_EQ(next, n + 1);
        }
    }
    const auto t5 = block_tree(5);
    EXPECT_EQ(t5[0].back(), (Interval{5, 5}));
    EXPECT_EQ(t5[1].back(), (Interval{5, 5}));
}

TEST(PlanBudget, BetaAtCapIsOneStep) {
    const double cap = model_constants(chain(8)).beta0_max();
    const ErrorBudget b = plan_budget(chain(8), cap, 1e-2);
    EXPECT_EQ(b.q, 1);
    EXPECT_DOUBLE_EQ(b.beta0, cap);
}

TEST(PlanBudget, TenTimesCap) {
    const double cap = model_constants(chain(8)).beta0_max();
    const ErrorBudget b = plan_budget(chain(8), 10.0 * cap, 1e-2);
    EXPECT_EQ(b.q, 10);
    EXPECT_NEAR(b.beta0 * b.q, 10.0 * cap, 1e-15);
    EXPECT_LE(b.beta0, cap * (1 + 1e-12));
}

TEST(PlanBudget, ClosedFormsN8) {
    const auto spec = chain(8);
    const double beta = 0.05, eps = 1e-2;
    const ErrorBudget b = plan_budget(spec, beta, eps);
    const double g = b.constants.g, gt = b.constants.g_tilde;
    const double a1 = 12.0 * std::exp(gt / (16.0 * g)), a2 = 2.0 * std::exp(gt / (96.0 * g));
    const double c0 = std::exp(gt / (24.0 * g));
    const int q = static_cast<int>(std::ceil(beta * 96.0 * g));
    EXPECT_EQ(b.q, q);
    EXPECT_NEAR(b.epsilon_h, eps / (6.0 * beta), 1e-15);
    EXPECT_NEAR(b.epsilon_inner, eps / 3.0, 1e-15);
    const double beta0 = beta / q;
    const double delta0 = beta0 * (eps / 3.0) / (5.0 * beta * a2 * std::pow(8.0, std::log2(2.0 * a1)));
    EXPECT_NEAR(b.delta0, delta0, 1e-12 * delta0);
    EXPECT_EQ(b.m0, static_cast<int>(std::ceil(std::log2(c0 / delta0))));
    EXPECT_EQ(b.q0, 3);
    EXPECT_NEAR(b.predicted_high_temp, a2 * delta0 * 3 * a1, 1e-12 * b.predicted_high_temp);
    EXPECT_NEAR(b.predicted_power, 5.0 * q * b.predicted_high_temp, 1e-12 * b.predicted_power);
}

TEST(PlanBudget, GenericPathSkipsSeries) {
    const auto spec = nearest_neighbor_ising(6, 1.0, 1.0);
    const ErrorBudget b = plan_budget(spec, 0.1, 1e-2);
    EXPECT_EQ(b.epsilon_h, 0.0);
    EXPECT_EQ(b.epsilon_inner, 1e-2);
    EXPECT_EQ(b.predicted_total, b.predicted_power);
}

TEST(PlanBudget, Errors) {
    EXPECT_THROW(plan_budget(chain(4), 4.0, 1e-2), BudgetError);
    EXPECT_THROW(plan_budget(chain(4), 0.1, 0.0), std::invalid_argument);
    EXPECT_THROW(plan_budget(chain(4), 0.1, 1.5), std::invalid_argument);
    EXPECT_THROW(plan_budget(chain(4), -0.1, 1e-2), std::invalid_argument);
}

TEST(Leaves, CommutingTermsFactor) {
    const auto spec = nearest_neighbor_ising(4, 0.0, 0.8);
    const MergePlan plan = make_plan(spec, 0.2, 1e-2);
    const auto leaves = leaf_gibbs_mpo<real>(plan, 0.2);
    const MatrixXr x = (MatrixXr(2, 2) << 0, 1, 1, 0).finished();
    const MatrixXr one = expm_sym(0.8 * x, -0.2);
    MatrixXr two(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) two.block(2 * i, 2 * j, 2, 2) = one(i, j) * one;
    for (const auto& l : leaves) EXPECT_LE((densify(l) - two).norm(), 1e-14);
}

TEST(Leaves, ZeroBetaIdentity) {
    const MergePlan plan = make_plan(chain(4), 0.0, 1e-2);
    for (const auto& l : leaf_gibbs_mpo<real>(plan, 0.0)) EXPECT_LE((densify(l) - MatrixXr::Identity(4, 4)).norm(), 1e-15);
}

TEST(Leaves, MatchDenseExponential) {
    const auto spec = chain(4);
    const double beta0 = model_constants(spec).beta0_max();
    const MergePlan plan = make_plan(spec, beta0, 1e-2);
    const auto leaves = leaf_gibbs_mpo<real>(plan, beta0);
    const MatrixXr h = dense_matrix<real>(restrict_to(plan.working, {1, 2}));
    EXPECT_LE((densify(leaves[0]) - expm_sym(h, -beta0)).norm(), 1e-12);
    EXPECT_LE(leaves[0].max_bond(), 4);
}

TEST(MergeLayer, DecoupledPairIsProduct) {
    const auto spec = nearest_neighbor_ising(4, 0.0, 0.5);
    const double beta0 = model_constants(spec).beta0_max();
    const MergePlan plan = make_plan(spec, beta0, 1e-2);
    const auto leaves = leaf_gibbs_mpo<real>(plan, beta0);
    const auto merged = merge_layer<real>(leaves, plan, 2, beta0, PipelineOptions{});
    ASSERT_EQ(merged.size(), 1u);
    const MatrixXr expected = densify(concat(leaves[0], leaves[1]));
    EXPECT_LE((densify(merged[0]) - expected).norm(), 1e-14 * expected.norm());
}

TEST(MergeLayer, OneLayerWithinPrediction) {
    const auto spec = chain(4);
    const double beta0 = model_constants(spec).beta0_max();
    const MergePlan plan = make_plan(spec, beta0, 1e-2);
    LayerRecord rec;
    const auto merged = merge_layer<real>(leaf_gibbs_mpo<real>(plan, beta0), plan, 2, beta0, PipelineOptions{}, &rec);
    const MatrixXr exact = expm_sym(dense_matrix<real>(plan.working), -beta0);
    const double err = (densify(merged[0]) - exact).norm() / exact.norm();
    EXPECT_LE(err, plan.budget.a2 * plan.budget.delta0);
    EXPECT_TRUE(rec.certified);
    EXPECT_THROW(merge_layer<real>(merged, plan, 1, beta0, PipelineOptions{}), std::invalid_argument);
}

TEST(Pipeline, SingleStepEqualsHighTemperature) {
    const auto spec = chain(4);
    const double beta0 = model_constants(spec).beta0_max();
    const auto res = build_gibbs_mpo<real>(spec, beta0, 1e-2);
    EXPECT_EQ(res.report.budget.q, 1);
    const MergePlan plan = make_plan(spec, beta0, 1e-2);
    const auto high = build_high_temp_mpo<real>(plan, beta0, PipelineOptions{});
    EXPECT_LE((densify(res.mpo) - densify(high)).norm(), 1e-13 * densify(high).norm());
}

TEST(Pipeline, SixSitesFourSteps) {
    const auto spec = chain(6);
    const double beta = 4.0 * model_constants(spec).beta0_max();
    const auto res = build_gibbs_mpo<real>(spec, beta, 1e-2);
    ASSERT_EQ(res.report.errors.size(), 3u);
    EXPECT_LE(max_error(res.report), 1e-2);
    ASSERT_TRUE(res.report.partition_error);
    EXPECT_LE(*res.report.partition_error, 1e-2);
    const MatrixXr exact = expm_sym(dense_matrix<real>(spec), -beta);
    EXPECT_NEAR(*res.report.partition_exact, exact.trace(), 1e-10 * exact.trace());
    EXPECT_EQ(res.report.certification, "certified");
    EXPECT_TRUE(res.report.passed);
    EXPECT_EQ(res.report.layers.size(), 3u);
}

TEST(Pipeline, OddChain) {
    const auto res = build_gibbs_mpo<real>(chain(5), 0.05, 1e-2);
    EXPECT_LE(max_error(res.report), 1e-2);
}

TEST(Pipeline, ComplexHeisenberg) {
    const auto spec = power_law_heisenberg(4, 3.0);
    EXPECT_TRUE(needs_complex(spec));
    EXPECT_THROW(build_gibbs_mpo<real>(spec, 0.01, 1e-2), std::domain_error);
    const auto res = build_gibbs_mpo<cplx>(spec, 0.05, 1e-2);
    EXPECT_LE(max_error(res.report), 1e-2);
}

TEST(Pipeline, HeuristicLabelUnderTruncation) {
    PipelineOptions opts;
    opts.policy = CompressionPolicy::fixed_tolerance(1e-12);
    const auto res = build_gibbs_mpo<real>(chain(4), 0.02, 1e-2, opts);
    EXPECT_EQ(res.report.certification, "heuristic");
    EXPECT_EQ(res.report.policy, "tol=1e-12");
}

TEST(Pipeline, BeyondDenseCapKeepsPredictions) {
    PipelineOptions opts;
    opts.dense_cap = 16;
    const auto res = build_gibbs_mpo<real>(chain(6), 0.02, 1e-2, opts);
    EXPECT_FALSE(res.report.oracle_used);
    EXPECT_TRUE(res.report.errors.empty());
    EXPECT_GT(res.report.budget.predicted_total, 0.0);
}

TEST(RealTime, ZeroTimeIsIdentity) {
    const auto res = build_real_time_mpo(chain(4), 0.0, 1e-2);
    EXPECT_LE((densify(res.mpo) - MatrixXc::Identity(16, 16)).norm(), 1e-14);
    EXPECT_EQ(res.report.certification, "empirical");
}

TEST(RealTime, ZeroHamiltonianIsIdentity) {
    HamiltonianSpec empty;
    empty.n = 4;
    const auto res = build_real_time_mpo(empty, 0.7, 1e-2);
    EXPECT_LE((densify(res.mpo) - MatrixXc::Identity(16, 16)).norm(), 1e-14);
}

TEST(RealTime, SixSitesHalfUnit) {
    const auto spec = chain(6);
    PipelineOptions opts;
    opts.pnorms = {kInfinityNorm};
    const auto res = build_real_time_mpo(spec, 0.5, 1e-2, opts);
    Eigen::SelfAdjointEigenSolver<MatrixXr> es(dense_matrix<real>(spec));
    const Eigen::VectorXcd phase = (cplx(0, -0.5) * es.eigenvalues().cast<cplx>().array()).exp().matrix();
    const MatrixXc u = es.eigenvectors().cast<cplx>() * phase.asDiagonal() * es.eigenvectors().transpose().cast<cplx>();
    Eigen::JacobiSVD<MatrixXc> svd(u - densify(res.mpo));
    EXPECT_LE(svd.singularValues()(0), 1e-2);
    EXPECT_FALSE(res.report.partition_error.has_value());
}

TEST(Describe, Policies) {
    EXPECT_EQ(describe(CompressionPolicy::none()), "none");
    EXPECT_EQ(describe(CompressionPolicy::exact()), "exact");
    EXPECT_EQ(describe(CompressionPolicy::fixed_max_bond(12)), "maxbond=12");
}
