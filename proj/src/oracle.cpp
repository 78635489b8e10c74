#include "lrgibbs/oracle.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lrg {

template <typename Scalar>
Matrix<Scalar> exp_hermitian(const Matrix<Scalar>& h, Scalar factor) {
    if (h.rows() != h.cols()) throw ShapeMismatch("exp_hermitian needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(h);
    if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
    Vector<Scalar> w(h.rows());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::exp(factor * eig.eigenvalues()(i));
    return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().adjoint();
}

template <typename Scalar>
Matrix<Scalar> gibbs_dense(const HamiltonianSpec& spec, Scalar beta, long cap) {
    return exp_hermitian<Scalar>(dense_matrix<Scalar>(spec, cap), -beta);
}

double partition_function(const HamiltonianSpec& spec, double beta, long cap) {
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(dense_matrix<cplx>(spec, cap), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
    // Shift by the ground energy so the sum cannot overflow before the final scale.
    const Eigen::VectorXd& e = eig.eigenvalues();
    const double e0 = e.minCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) sum += std::exp(-beta * (e(i) - e0));
    return sum * std::exp(-beta * e0);
}

template <typename Scalar>
double schatten_norm(const Matrix<Scalar>& a, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("Schatten norm needs p >= 1");
    if (a.size() == 0) return 0.0;
    const Eigen::VectorXd sigma = Eigen::BDCSVD<Matrix<Scalar>>(a).singularValues();
    if (std::isinf(p)) return sigma(0);
    if (p == 1.0) return sigma.sum();
    if (p == 2.0) return sigma.norm();
    // Scale by sigma_max to keep sigma^p representable.
    const double top = sigma(0);
    if (top == 0.0) return 0.0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) sum += std::pow(sigma(i) / top, p);
    return top * std::pow(sum, 1.0 / p);
}

template <typename Scalar>
double relative_error(const Matrix<Scalar>& a, const Matrix<Scalar>& b, double p) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("relative_error shape mismatch");
    const double base = schatten_norm<Scalar>(a, p);
    if (base == 0.0) throw std::domain_error("relative error undefined for a zero reference");
    return schatten_norm<Scalar>(a - b, p) / base;
}

template <typename Scalar>
Matrix<Scalar> merging_operator_dense(const Matrix<Scalar>& h_ab, const Matrix<Scalar>& h_split, Scalar beta0) {
    return exp_hermitian<Scalar>(h_ab, -beta0) * exp_hermitian<Scalar>(h_split, beta0);
}

template <typename Scalar>
Matrix<Scalar> merging_order_dense(const Matrix<Scalar>& h_ab, const Matrix<Scalar>& h_split, Scalar beta0,
                                   int m) {
    if (m < 0) throw std::invalid_argument("series order must be >= 0");
    const Eigen::Index dim = h_ab.rows();
    // x_pow[s] = (-beta0 H_AB)^s / s!, y_pow[s] = (beta0 (H_A+H_B))^s / s!
    std::vector<Matrix<Scalar>> x_pow{Matrix<Scalar>::Identity(dim, dim)};
    std::vector<Matrix<Scalar>> y_pow{Matrix<Scalar>::Identity(dim, dim)};
    for (int s = 1; s <= m; ++s) {
        x_pow.push_back(x_pow.back() * h_ab * (-beta0 / Scalar(s)));
        y_pow.push_back(y_pow.back() * h_split * (beta0 / Scalar(s)));
    }
    Matrix<Scalar> out = Matrix<Scalar>::Zero(dim, dim);
    for (int s1 = 0; s1 <= m; ++s1) out.noalias() += x_pow[s1] * y_pow[m - s1];
    return out;
}

template <typename Scalar>
Matrix<Scalar> kron(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
    Matrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

#define LRG_ORACLE_INSTANTIATE(S)                                                       \
    template Matrix<S> exp_hermitian<S>(const Matrix<S>&, S);                           \
    template Matrix<S> gibbs_dense<S>(const HamiltonianSpec&, S, long);                 \
    template double schatten_norm<S>(const Matrix<S>&, double);                         \
    template double relative_error<S>(const Matrix<S>&, const Matrix<S>&, double);      \
    template Matrix<S> merging_operator_dense<S>(const Matrix<S>&, const Matrix<S>&, S); \
    template Matrix<S> merging_order_dense<S>(const Matrix<S>&, const Matrix<S>&, S, int); \
    template Matrix<S> kron<S>(const Matrix<S>&, const Matrix<S>&);

LRG_ORACLE_INSTANTIATE(real)
LRG_ORACLE_INSTANTIATE(cplx)

}  // namespace lrg
