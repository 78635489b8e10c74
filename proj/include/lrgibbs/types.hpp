#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

namespace lrg {

using real = double;
using cplx = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXr = Matrix<real>;
using MatrixXc = Matrix<cplx>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

/// Converts a complex value to Scalar. Throws if Scalar is real and the
/// imaginary part is not exactly zero.
template <typename Scalar>
Scalar scalar_cast(cplx z) {
    if constexpr (is_complex_v<Scalar>) {
        return z;
    } else {
        if (z.imag() != 0.0) throw std::domain_error("complex value in real-scalar context");
        return z.real();
    }
}

// Error hierarchy. Callers (the CLI in particular) map these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionCapExceeded : Error {
    using Error::Error;
};

struct BondCapExceeded : Error {
    BondCapExceeded(const std::string& what, double log10_estimate)
        : Error(what), log10_estimate(log10_estimate) {}
    double log10_estimate;
};

struct BudgetError : Error {
    using Error::Error;
};

struct NotApplicable : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// Default dense oracle cap: 2^12 states.
inline constexpr long kDefaultDenseCap = 1L << 12;

}  // namespace lrg
