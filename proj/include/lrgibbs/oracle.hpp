#pragma once

#include <limits>

#include "lrgibbs/model.hpp"
#include "lrgibbs/types.hpp"

namespace lrg {

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

/// exp(factor * h) for Hermitian h, through its eigendecomposition.
template <typename Scalar>
Matrix<Scalar> exp_hermitian(const Matrix<Scalar>& h, Scalar factor);

/// Unnormalized e^{-beta H}. Beta may be complex (beta = i t gives e^{-iHt}).
template <typename Scalar>
Matrix<Scalar> gibbs_dense(const HamiltonianSpec& spec, Scalar beta, long cap = kDefaultDenseCap);

/// Z = tr e^{-beta H} for real beta.
double partition_function(const HamiltonianSpec& spec, double beta, long cap = kDefaultDenseCap);

/// [tr |A|^p]^{1/p} from singular values; p = kInfinityNorm gives sigma_max.
/// Throws std::invalid_argument for p < 1.
template <typename Scalar>
double schatten_norm(const Matrix<Scalar>& a, double p);

/// ||A - B||_p / ||A||_p. Throws std::domain_error when ||A||_p = 0.
template <typename Scalar>
double relative_error(const Matrix<Scalar>& a, const Matrix<Scalar>& b, double p);

/// Psi = e^{-beta0 H_AB} e^{beta0 (H_A + H_B)} from the two dense Hamiltonians.
template <typename Scalar>
Matrix<Scalar> merging_operator_dense(const Matrix<Scalar>& h_ab, const Matrix<Scalar>& h_split,
                                      Scalar beta0);

/// Order-m part of the series of Psi in beta0:
///   beta0^m sum_{s1+s2=m} (-1)^{s1} H_AB^{s1} (H_A+H_B)^{s2} / (s1! s2!).
template <typename Scalar>
Matrix<Scalar> merging_order_dense(const Matrix<Scalar>& h_ab, const Matrix<Scalar>& h_split,
                                   Scalar beta0, int m);

/// Kronecker product A (x) B with A on the leading sites.
template <typename Scalar>
Matrix<Scalar> kron(const Matrix<Scalar>& a, const Matrix<Scalar>& b);

#define LRG_ORACLE_EXTERN(S)                                                                  \
    extern template Matrix<S> exp_hermitian<S>(const Matrix<S>&, S);                          \
    extern template Matrix<S> gibbs_dense<S>(const HamiltonianSpec&, S, long);                \
    extern template double schatten_norm<S>(const Matrix<S>&, double);                        \
    extern template double relative_error<S>(const Matrix<S>&, const Matrix<S>&, double);     \
    extern template Matrix<S> merging_operator_dense<S>(const Matrix<S>&, const Matrix<S>&, S); \
    extern template Matrix<S> merging_order_dense<S>(const Matrix<S>&, const Matrix<S>&, S, int); \
    extern template Matrix<S> kron<S>(const Matrix<S>&, const Matrix<S>&);

LRG_ORACLE_EXTERN(real)
LRG_ORACLE_EXTERN(cplx)

#undef LRG_ORACLE_EXTERN

}  // namespace lrg
