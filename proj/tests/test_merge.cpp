#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lrgibbs/merge.hpp"
#include "lrgibbs/oracle.hpp"

using namespace lrg;

namespace {

// Psi from two independent eigendecompositions.
MatrixXr psi_reference(const MatrixXr& hab, const MatrixXr& hsplit, double beta0) {
    Eigen::SelfAdjointEigenSolver<MatrixXr> e1(hab), e2(hsplit);
    const MatrixXr a = e1.eigenvectors() * (-beta0 * e1.eigenvalues().array()).exp().matrix().asDiagonal() *
                       e1.eigenvectors().transpose();
    const MatrixXr b = e2.eigenvectors() * (beta0 * e2.eigenvalues().array()).exp().matrix().asDiagonal() *
                       e2.eigenvectors().transpose();
    return a * b;
}

double op_norm(const MatrixXr& a) {
    Eigen::JacobiSVD<MatrixXr> svd(a);
    return svd.singularValues()(0);
}

HamiltonianSpec chain(int n) { return power_law_ising(n, 3.0, 1.0, 1.0); }

}  // namespace

TEST(Constants, ClosedForms) {
    const ModelConstants c{2.0, 1.5, 2};
    EXPECT_DOUBLE_EQ(c.c(), 48.0);
    EXPECT_DOUBLE_EQ(c.beta0_max(), 1.0 / 192.0);
    EXPECT_DOUBLE_EQ(c.c0(), std::exp(1.5 / 48.0));
    EXPECT_DOUBLE_EQ(c.a1(), 12.0 * std::exp(1.5 / 32.0));
    EXPECT_DOUBLE_EQ(c.a2(), 2.0 * std::exp(1.5 / 192.0));
    const ModelConstants zero{0.0, 0.0, 2};
    EXPECT_TRUE(std::isinf(zero.beta0_max()));
    EXPECT_EQ(zero.c0(), 1.0);
}

TEST(TruncationOrder, DeltaEqualsC0) {
    const ModelConstants c{1.3, 0.9, 2};
    EXPECT_EQ(truncation_order_for(c.c0(), c.g, c.k, c.g_tilde), 0);
}

TEST(TruncationOrder, PowerOfTwo) {
    const ModelConstants c{1.3, 0.9, 2};
    EXPECT_EQ(truncation_order_for(c.c0() / 8.0, c.g, c.k, c.g_tilde), 3);
}

TEST(TruncationOrder, BaselBoundaryExample) {
    const double gt = std::numbers::pi * std::numbers::pi / 6.0;
    const double c0 = std::exp(gt / (6.0 * 1.287 * 4.0));
    const int expected = static_cast<int>(std::ceil(std::log(c0 / 1e-4) / std::log(2.0)));
    EXPECT_EQ(truncation_order_for(1e-4, 1.287, 2, gt), expected);
    EXPECT_EQ(expected, 14);
}

TEST(TruncationOrder, RejectsOutOfRange) {
    EXPECT_THROW(truncation_order_for(0.0, 1.0, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(truncation_order_for(5.0, 1.0, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(truncation_order_for(NAN, 1.0, 2, 1.0), std::invalid_argument);
}

TEST(MergeSpec, RequiresAdjacentRegions) {
    EXPECT_THROW(make_merge_spec(chain(6), {1, 2}, {4, 6}, 0.001, 3), std::invalid_argument);
    EXPECT_THROW(make_merge_spec(chain(6), {1, 3}, {4, 6}, 0.001, kMaxTruncationOrder + 1), std::invalid_argument);
}

TEST(MergeSpec, CertifiedRegime) {
    const auto spec = chain(4);
    const ModelConstants c = model_constants(spec);
    auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, c.beta0_max(), 8, c);
    EXPECT_TRUE(ms.certified());
    ms.beta0 = 2.0 * c.beta0_max();
    EXPECT_FALSE(ms.certified());
    EXPECT_THROW(build_merge_mpo<real>(ms), BudgetError);
    ms.force = true;
    EXPECT_NO_THROW(build_merge_mpo<real>(ms));
}

TEST(BuildMerge, DecoupledIsIdentity) {
    const auto spec = nearest_neighbor_ising(4, 0.0, 0.7);
    const double beta0 = model_constants(spec).beta0_max();
    for (int m0 : {0, 1, 4, 9}) {
        const MatrixXr psi = densify(build_merge_mpo<real>(make_merge_spec(spec, {1, 2}, {3, 4}, beta0, m0)).mpo);
        EXPECT_LE((psi - MatrixXr::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-14) << m0;
    }
}

TEST(BuildMerge, OrderZeroIsIdentity) {
    const auto spec = chain(4);
    const auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, model_constants(spec).beta0_max(), 0);
    EXPECT_EQ(densify(build_merge_mpo<real>(ms).mpo), MatrixXr::Identity(16, 16));
}

TEST(BuildMerge, TruncationBoundN4) {
    const auto spec = chain(4);
    const ModelConstants c = model_constants(spec);
    const double beta0 = 1.0 / (96.0 * c.g);
    const auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, beta0, 8, c);
    const MatrixXr psi = psi_reference(dense_matrix<real>(ms.spec_ab), dense_matrix<real>(ms.spec_split), beta0);
    const MatrixXr approx = densify(build_merge_mpo<real>(ms).mpo);
    EXPECT_LE(op_norm(psi - approx), c.c0() * std::ldexp(1.0, -8));
}

TEST(BuildMerge, LedgerBoundsStructuralBond) {
    const auto spec = chain(4);
    const ModelConstants c = model_constants(spec);
    for (int m0 : {1, 2, 3}) {
        const auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, c.beta0_max(), m0, c);
        const auto op = build_merge_mpo<real>(ms, CompressionPolicy::none());
        const double cap = (m0 + 1.0) * (m0 + 1.0) * std::pow(op.hamiltonian_bond, m0);
        EXPECT_LE(op.mpo.max_bond(), cap) << m0;
        EXPECT_LE(op.mpo.max_bond(), std::pow(10.0, op.ledger_log10) * (1 + 1e-12)) << m0;
    }
}

TEST(BuildMerge, PoliciesAgree) {
    const auto spec = chain(4);
    const auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, model_constants(spec).beta0_max(), 3);
    const MatrixXr a = densify(build_merge_mpo<real>(ms, CompressionPolicy::none(), 1 << 14).mpo);
    const MatrixXr b = densify(build_merge_mpo<real>(ms, CompressionPolicy::exact()).mpo);
    EXPECT_LE((a - b).norm(), 1e-11 * a.norm());
}

TEST(BuildMerge, ComplexBetaMatchesReal) {
    const auto spec = chain(4);
    const double beta0 = model_constants(spec).beta0_max();
    const auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, beta0, 6);
    const MatrixXc a = densify(build_merge_mpo<cplx>(ms).mpo);
    const MatrixXr b = densify(build_merge_mpo<real>(ms).mpo);
    EXPECT_LE((a - b.cast<cplx>()).norm(), 1e-13 * b.norm());
}

TEST(MergeLedger, SumInLogSpace) {
    double sum = 0.0;
    for (int m = 0; m <= 5; ++m) sum += (m + 1) * std::pow(7.0, m);
    EXPECT_NEAR(merge_ledger_log10(7, 5), std::log10(sum), 1e-12);
    EXPECT_TRUE(std::isfinite(merge_ledger_log10(500, 60)));
}

TEST(Certify, SweepBoundedN6) {
    const auto spec = chain(6);
    const ModelConstants c = model_constants(spec);
    for (int m0 = 2; m0 <= 12; m0 += 2) {
        const auto rep = certify_truncation<real>(make_merge_spec(spec, {1, 3}, {4, 6}, c.beta0_max(), m0, c), 0);
        EXPECT_LE(rep.measured, rep.bound) << m0;
        EXPECT_TRUE(rep.passed);
    }
}

TEST(Certify, ZeroBeta) {
    const auto rep = certify_truncation<real>(make_merge_spec(chain(4), {1, 2}, {3, 4}, 0.0, 3), 3);
    EXPECT_LE(rep.measured, 1e-13);
    for (const auto& o : rep.orders)
        if (o.m > 0) EXPECT_EQ(o.norm, 0.0);
}

TEST(Certify, RandomTwoLocalModel) {
    // Pair couplings with XX, YZ and ZZ parts plus fields.
    PairModel pair;
    pair.alpha = 3.5;
    pair.coupling = MatrixXr::Zero(4, 4);
    pair.coupling(1, 1) = 0.6;
    pair.coupling(2, 3) = -0.4;
    pair.coupling(3, 2) = -0.4;
    pair.coupling(3, 3) = 0.9;
    pair.onsite = Eigen::VectorXd::Zero(4);
    pair.onsite(1) = 0.3;
    pair.onsite(3) = -0.2;
    const auto spec = make_pair_hamiltonian("mixed", 6, 2, pair);
    const ModelConstants c = model_constants(spec);
    const auto rep = certify_truncation<cplx>(make_merge_spec(spec, {1, 2}, {3, 6}, c.beta0_max(), 6, c), 10);
    EXPECT_TRUE(rep.certified);
    EXPECT_LE(rep.measured, rep.bound);
    for (const auto& o : rep.orders) EXPECT_LE(o.norm, o.bound) << o.m;
}

TEST(Certify, UncertifiedPointIsFlagged) {
    const auto spec = chain(4);
    const ModelConstants c = model_constants(spec);
    auto ms = make_merge_spec(spec, {1, 2}, {3, 4}, c.beta0_max(), 2, c);
    ms.delta0 = 1e-6;
    EXPECT_FALSE(certify_truncation<real>(ms, 0).certified);
}
