#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lrgibbs/model.hpp"

namespace lrg {

/// Constant in |r^-alpha - series(r)| <= zeta * eps for r >= 1.
///
/// The quadrature bound is eps + 2/(e^{alpha x}-1) (eps/(2 alpha))^{2 alpha},
/// and the second term is below 1e-8 eps for alpha >= 2, eps < 1. The
/// largest observed ratio error/eps on the certification grid is 0.235
/// (alpha = 4, eps = 1e-2) over alpha in {2.5, 3, 4}, eps in {1e-2, 1e-3, 1e-4}.
inline constexpr double kKernelErrorConstant = 1.0;

/// Certification grid: r = 1, 1 + 2^-4, ..., 2^16.
inline constexpr double kGridStep = 1.0 / 16.0;
inline constexpr double kGridMax = 65536.0;

/// Kernel tolerances above this are clamped: the series needs eps < 1, and a
/// tighter kernel only lowers ||H - H~||.
inline constexpr double kMaxKernelEpsilon = 0.5;

/// Truncated trapezoidal exponential sum for r^-alpha:
///   r^-alpha ~ sum_{s=-m}^{m} (x / Gamma(alpha)) e^{alpha s x} exp(-e^{s x} r).
struct ExpSumApprox {
    double alpha = 0.0;
    double epsilon = 0.0;
    double x = 0.0;
    int m = 0;
    std::vector<KernelTerm> terms;  // s = -m .. m
    double certified_sup_error = 0.0;
    // alpha < 3: the boundary bound zeta(alpha-1) grows without limit as alpha -> 2,
    // and alpha = 2 itself lies outside the certified regime.
    bool near_boundary = false;

    double evaluate(double r) const;
    std::size_t size() const { return terms.size(); }
};

double node_spacing(double alpha, double epsilon);
int truncation_half_width(double alpha, double epsilon, double x);

/// Builds the series and certifies it on the grid. Throws std::invalid_argument
/// for epsilon outside (0, 1) or alpha < 2.
ExpSumApprox fit_kernel(double alpha, double epsilon, double grid_max = kGridMax);

/// max |r^-alpha - series(r)| over the grid r in [1, grid_max].
double sup_error_on_grid(const ExpSumApprox& series, double grid_max = kGridMax);

struct ApproximateHamiltonian {
    HamiltonianSpec spec;  // H~ (exponential-sum kernel), or the input if nothing to approximate
    ExpSumApprox series;   // empty when the input has no long-range part
    double epsilon_h = 0.0;
    double kernel_epsilon = 0.0;
};

/// Replaces r^-alpha by a series with kernel error eps = eps_H / (Jbar zeta n^2),
/// clamped to kMaxKernelEpsilon, so that ||H - H~|| <= eps_H. Specs with
/// nearest-neighbor terms only come back unchanged; other non-pair input
/// throws NotApplicable.
ApproximateHamiltonian approximate_hamiltonian(const HamiltonianSpec& spec, double epsilon_h);

/// Whether the spec has a long-range part that the series would replace.
bool has_long_range_part(const HamiltonianSpec& spec);

/// JSON text with weights, rates and the certified error.
std::string series_to_json(const ExpSumApprox& series);

}  // namespace lrg
