#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lrgibbs/expsum.hpp"
#include "lrgibbs/model.hpp"
#include "lrgibbs/oracle.hpp"

using namespace lrg;

namespace {

// Closed forms in long double.
long double spacing_ld(long double alpha, long double eps) {
    const long double pi = 3.141592653589793238462643383279502884L;
    return 2 * pi / (std::log(3.0L) + alpha * std::log(1 / std::cos(1.0L)) + std::log(1 / eps));
}

}  // namespace

TEST(FitKernel, ClosedFormsAlpha3) {
    const ExpSumApprox s = fit_kernel(3.0, 1e-3);
    const long double x = spacing_ld(3.0L, 1e-3L);
    EXPECT_NEAR(s.x, static_cast<double>(x), 1e-15);
    EXPECT_NEAR(s.x, 0.6377, 5e-5);
    EXPECT_EQ(s.m, static_cast<int>(std::ceil(2 / x * std::log(6.0L / 1e-3L))));
    EXPECT_EQ(s.m, 28);
    EXPECT_EQ(s.size(), 57u);
}

TEST(FitKernel, CertifiedSupError) {
    const ExpSumApprox s = fit_kernel(3.0, 1e-3);
    EXPECT_LE(s.certified_sup_error, kKernelErrorConstant * 1e-3);
    for (int r = 1; r <= 200; ++r) EXPECT_LE(std::abs(s.evaluate(r) - std::pow(r, -3.0)), 1e-3) << r;
}

TEST(FitKernel, GridOfAlphaAndEpsilon) {
    for (double alpha : {2.5, 3.0, 4.0})
        for (double eps : {1e-2, 1e-3, 1e-4})
            EXPECT_LE(fit_kernel(alpha, eps).certified_sup_error, kKernelErrorConstant * eps) << alpha << " " << eps;
}

TEST(FitKernel, LargerEpsilonFewerTerms) {
    int prev = fit_kernel(3.0, 1e-6).m;
    for (double eps : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
        const int m = fit_kernel(3.0, eps).m;
        EXPECT_LE(m, prev);
        prev = m;
    }
}

TEST(FitKernel, RejectsEpsilonOutsideUnitInterval) {
    EXPECT_THROW(fit_kernel(3.0, 1.0), std::invalid_argument);
    EXPECT_THROW(fit_kernel(3.0, 0.0), std::invalid_argument);
    EXPECT_THROW(fit_kernel(1.5, 1e-2), std::invalid_argument);
}

TEST(FitKernel, NearBoundaryFlag) {
    EXPECT_TRUE(fit_kernel(2.5, 1e-2).near_boundary);
    EXPECT_FALSE(fit_kernel(3.0, 1e-2).near_boundary);
}

TEST(FitKernel, TermCountGrowsAsLogSquared) {
    // ln(2m+1) against ln ln(n/eps_H), closed forms only.
    const int n = 8;
    std::vector<double> x, y;
    for (int i = 0; i <= 12; ++i) {
        const double eps_h = std::pow(10.0, -4.0 - 3.0 * i);
        const double kernel = eps_h / (n * n);
        const double sp = node_spacing(3.0, kernel);
        const int m = truncation_half_width(3.0, kernel, sp);
        x.push_back(std::log(std::log(n / eps_h)));
        y.push_back(std::log(2.0 * m + 1.0));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    EXPECT_NEAR(sxy / sxx, 2.0, 0.3);
}

TEST(ApproximateHamiltonian, OperatorNormErrorN6) {
    const auto spec = power_law_ising(6, 3.0, 1.0, 0.0);
    const auto approx = approximate_hamiltonian(spec, 1e-2);
    Eigen::SelfAdjointEigenSolver<MatrixXr> es(dense_matrix<real>(spec) - dense_matrix<real>(approx.spec));
    EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-2);
    EXPECT_GT(approx.series.size(), 0u);
}

TEST(ApproximateHamiltonian, UpToEightSites) {
    for (int n : {3, 5, 8})
        for (double eps_h : {1e-1, 1e-3}) {
            const auto spec = power_law_ising(n, 2.5, 1.0, 1.0);
            const auto approx = approximate_hamiltonian(spec, eps_h);
            Eigen::SelfAdjointEigenSolver<MatrixXr> es(dense_matrix<real>(spec) - dense_matrix<real>(approx.spec));
            EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), eps_h) << n;
        }
}

TEST(ApproximateHamiltonian, InfiniteToleranceRejected) {
    EXPECT_THROW(approximate_hamiltonian(power_law_ising(4, 3.0), INFINITY), std::invalid_argument);
}

TEST(ApproximateHamiltonian, NearestNeighborUnchanged) {
    const auto spec = nearest_neighbor_ising(5, 1.0, 0.3);
    const auto approx = approximate_hamiltonian(spec, 1e-2);
    EXPECT_EQ(approx.series.size(), 0u);
    EXPECT_EQ(dense_matrix<real>(approx.spec), dense_matrix<real>(spec));
}

TEST(ApproximateHamiltonian, LongRangeGenericSpecNotApplicable) {
    HamiltonianSpec spec;
    spec.n = 4;
    spec.terms.push_back({{1, 3}, {3, 3}, 1.0});
    EXPECT_THROW(approximate_hamiltonian(spec, 1e-2), NotApplicable);
}

TEST(ApproximateHamiltonian, SeriesJson) {
    const auto json = series_to_json(fit_kernel(3.0, 1e-2));
    EXPECT_NE(json.find("\"certified_sup_error\""), std::string::npos);
    EXPECT_NE(json.find("\"terms\""), std::string::npos);
}
