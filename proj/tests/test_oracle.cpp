#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lrgibbs/oracle.hpp"

using namespace lrg;

namespace {

HamiltonianSpec zz_pair() {
    HamiltonianSpec spec;
    spec.n = 2;
    spec.terms.push_back({{1, 2}, {3, 3}, 1.0});
    return spec;
}

MatrixXr random_real(long dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    MatrixXr m(dim, dim);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

}  // namespace

TEST(GibbsDense, ZeroBetaIsIdentity) {
    EXPECT_TRUE(gibbs_dense<real>(power_law_ising(3, 3.0, 1.0, 1.0), 0.0).isApprox(MatrixXr::Identity(8, 8)));
}

TEST(GibbsDense, DiagonalHamiltonian) {
    const auto spec = power_law_ising(3, 3.0, 0.8, 0.0);
    const MatrixXr h = dense_matrix<real>(spec);
    const MatrixXr g = gibbs_dense<real>(spec, 0.7);
    for (long i = 0; i < 8; ++i) EXPECT_NEAR(g(i, i), std::exp(-0.7 * h(i, i)), 1e-14);
    EXPECT_NEAR((g - MatrixXr(g.diagonal().asDiagonal())).norm(), 0.0, 1e-14);
}

TEST(GibbsDense, ZzPairByHand) {
    const MatrixXr g = gibbs_dense<real>(zz_pair(), 1.0);
    const double lo = std::exp(-1.0), hi = std::exp(1.0);
    const Eigen::Vector4d expected(lo, hi, hi, lo);
    EXPECT_LE((g.diagonal() - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GibbsDense, ImaginaryBetaIsUnitary) {
    const MatrixXc u = gibbs_dense<cplx>(power_law_ising(3, 3.0, 1.0, 1.0), cplx(0.0, 0.4));
    EXPECT_TRUE((u * u.adjoint()).isApprox(MatrixXc::Identity(8, 8), 1e-13));
}

TEST(GibbsDense, SemigroupAndPositivity) {
    const auto spec = power_law_ising(4, 3.0, 1.0, 0.6);
    const MatrixXr a = gibbs_dense<real>(spec, 0.3), b = gibbs_dense<real>(spec, 0.5);
    EXPECT_LE((a * b - gibbs_dense<real>(spec, 0.8)).norm(), 1e-10 * a.norm() * b.norm());
    EXPECT_TRUE(a.isApprox(a.transpose()));
    Eigen::SelfAdjointEigenSolver<MatrixXr> es(a);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Schatten, IdentityNorms) {
    const MatrixXr id = MatrixXr::Identity(4, 4);
    EXPECT_DOUBLE_EQ(schatten_norm<real>(id, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(schatten_norm<real>(id, kInfinityNorm), 1.0);
    EXPECT_NEAR(schatten_norm<real>(id, 3.0), std::cbrt(4.0), 1e-15);
}

TEST(Schatten, FrobeniusFromEntries) {
    std::mt19937_64 rng(3);
    const MatrixXr a = random_real(8, rng);
    double sum = 0.0;
    for (long i = 0; i < a.size(); ++i) sum += a.data()[i] * a.data()[i];
    EXPECT_NEAR(schatten_norm<real>(a, 2.0), std::sqrt(sum), 1e-12);
}

TEST(Schatten, NormOrdering) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const MatrixXr a = random_real(6, rng);
        const double inf = schatten_norm<real>(a, kInfinityNorm), one = schatten_norm<real>(a, 1.0);
        for (double p : {1.5, 2.0, 3.0, 7.0}) {
            const double v = schatten_norm<real>(a, p);
            EXPECT_LE(inf, v * (1 + 1e-14));
            EXPECT_LE(v, one * (1 + 1e-14));
        }
    }
}

TEST(Schatten, RejectsSmallP) { EXPECT_THROW(schatten_norm<real>(MatrixXr::Identity(2, 2), 0.5), std::invalid_argument); }

TEST(RelativeError, Basics) {
    std::mt19937_64 rng(5);
    const MatrixXr a = random_real(5, rng), b = random_real(5, rng);
    EXPECT_EQ(relative_error<real>(a, a, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(relative_error<real>(a, MatrixXr::Zero(5, 5), 1.0), 1.0);
    Eigen::JacobiSVD<MatrixXr> sd(a - b), sa(a);
    EXPECT_NEAR(relative_error<real>(a, b, kInfinityNorm), sd.singularValues()(0) / sa.singularValues()(0), 1e-13);
    EXPECT_NEAR(relative_error<real>(a, b, 1.0), sd.singularValues().sum() / sa.singularValues().sum(), 1e-13);
    EXPECT_THROW(relative_error<real>(MatrixXr::Zero(2, 2), a.topLeftCorner(2, 2), 2.0), std::domain_error);
}

TEST(PartitionFunction, Basics) {
    EXPECT_NEAR(partition_function(power_law_ising(3, 3.0, 1.0, 1.0), 0.0), 8.0, 1e-12);
    HamiltonianSpec empty;
    empty.n = 3;
    EXPECT_NEAR(partition_function(empty, 2.0), 8.0, 1e-12);
    EXPECT_NEAR(partition_function(zz_pair(), 1.0), 2 * std::exp(-1.0) + 2 * std::exp(1.0), 1e-12);
}

TEST(PartitionFunction, LargeBetaDoesNotOverflowOddly) {
    const auto spec = power_law_ising(4, 3.0, 1.0, 1.0);
    const double z = partition_function(spec, 3.0);
    EXPECT_NEAR(z, gibbs_dense<real>(spec, 3.0).trace(), 1e-10 * z);
}

TEST(Kron, LeadingFactor) {
    const MatrixXr a = (MatrixXr(2, 2) << 1, 2, 3, 4).finished();
    const MatrixXr b = MatrixXr::Identity(2, 2);
    const MatrixXr k = kron<real>(a, b);
    EXPECT_EQ(k(0, 2), 2.0);
    EXPECT_EQ(k(3, 1), 3.0);
    EXPECT_EQ(k(2, 0), 3.0);
}

TEST(MergingOperator, OrdersSumToOperator) {
    const auto spec = power_law_ising(4, 3.0, 1.0, 1.0);
    const MatrixXr hab = dense_matrix<real>(spec);
    const MatrixXr hsplit = dense_matrix<real>(split_hamiltonian(spec, {1, 2}, {3, 4}));
    const double beta0 = 0.05;
    MatrixXr sum = MatrixXr::Zero(16, 16);
    for (int m = 0; m <= 25; ++m) sum += merging_order_dense<real>(hab, hsplit, beta0, m);
    const MatrixXr psi = merging_operator_dense<real>(hab, hsplit, beta0);
    EXPECT_LE((sum - psi).norm(), 1e-12 * psi.norm());
    EXPECT_TRUE(merging_order_dense<real>(hab, hsplit, beta0, 0).isApprox(MatrixXr::Identity(16, 16)));
}
