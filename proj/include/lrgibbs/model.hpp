#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lrgibbs/types.hpp"

namespace lrg {

// Single-site operator basis
//
// Index 0 is the identity. For d = 2 the remaining elements are the Pauli
// matrices X, Y, Z. For d > 2 they are the generalized Gell-Mann matrices,
// rescaled to unit operator norm: symmetric, antisymmetric, then diagonal.

/// The d*d unit-norm basis operators on one site.
const std::vector<MatrixXc>& single_site_basis(int d);

/// Whether basis element `index` has purely real entries.
bool basis_is_real(int d, int index);

/// Parses "I", "X", "Y", "Z" (d = 2) or "g<index>" (any d).
int basis_index(int d, const std::string& name);
std::string basis_name(int d, int index);

/// Closed site range [lo, hi], 1-indexed.
struct Interval {
    int lo = 1;
    int hi = 1;

    int size() const { return hi - lo + 1; }
    bool contains(int site) const { return lo <= site && site <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Coefficient times a tensor product of basis operators. `sites` is sorted
/// and duplicate-free; `ops[i]` acts on `sites[i]`.
struct LocalTerm {
    std::vector<int> sites;
    std::vector<int> ops;
    double coefficient = 0.0;
};

/// One term w * exp(-rate * r) of an exponential-sum kernel.
struct KernelTerm {
    double weight = 0.0;
    double rate = 0.0;
};

/// Translation-invariant 2-local couplings
///
///   H = sum_{i<i'} K(|i-i'|) sum_{xi,xi'} J_{xi,xi'} P_{i,xi} P_{i',xi'}
///       + sum_i sum_xi h_xi P_{i,xi}
///
/// with K either the power law r^-alpha or an exponential sum.
struct PairModel {
    enum class Kernel { PowerLaw, ExpSum };

    Kernel kernel = Kernel::PowerLaw;
    double alpha = 3.0;
    std::vector<KernelTerm> series;  // ExpSum only
    MatrixXr coupling;               // d^2 x d^2; row/col 0 (identity) must be zero
    Eigen::VectorXd onsite;          // d^2; entry 0 must be zero

    double kernel_at(int r) const;
    /// Sum of |J_{xi,xi'}|.
    double coupling_weight() const;
};

struct HamiltonianSpec {
    std::string name;
    int n = 1;
    int d = 2;
    int k = 2;
    std::vector<LocalTerm> terms;
    std::optional<double> alpha;
    std::optional<PairModel> pair;

    bool is_real() const;
    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

HamiltonianSpec make_pair_hamiltonian(std::string name, int n, int d, PairModel pair);

// Bundled models. J multiplies the coupling matrix, hx is the transverse field.
HamiltonianSpec power_law_ising(int n, double alpha, double J = 1.0, double hx = 0.0);
HamiltonianSpec power_law_heisenberg(int n, double alpha, double J = 1.0);
HamiltonianSpec nearest_neighbor_ising(int n, double J = 1.0, double hx = 0.0);

/// Terms with support inside `region`, still on all n sites.
HamiltonianSpec subset_hamiltonian(const HamiltonianSpec& spec, Interval region);

/// Terms touching both [1, cut] and [cut+1, n].
HamiltonianSpec boundary_interaction(const HamiltonianSpec& spec, int cut);

/// Terms inside `region`, re-indexed onto region.size() sites. Pair-model
/// metadata survives since the couplings are translation invariant.
HamiltonianSpec restrict_to(const HamiltonianSpec& spec, Interval region);

/// Sum of (H_A) and (H_B) on the sites of A u B, re-indexed; A and B adjacent.
HamiltonianSpec split_hamiltonian(const HamiltonianSpec& spec, Interval a, Interval b);

/// max_i sum_{Z ni i} |coefficient|.
double extensivity_constant(const HamiltonianSpec& spec);

struct BoundaryBound {
    double measured = 0.0;           // max over cuts of sum of crossing |coefficients|
    std::optional<double> analytic;  // J * zeta(alpha - 1), power-law models only
};

/// Throws NotApplicable for power-law models with alpha <= 2.
BoundaryBound boundary_bound(const HamiltonianSpec& spec);

/// zeta(s) for s > 1.
double riemann_zeta(double s);

/// Hermitian d^n x d^n matrix of the Hamiltonian. Throws DimensionCapExceeded.
template <typename Scalar>
Matrix<Scalar> dense_matrix(const HamiltonianSpec& spec, long cap = kDefaultDenseCap);

/// d^n, or -1 on overflow past 2^62.
long hilbert_dimension(int n, int d);

extern template Matrix<real> dense_matrix<real>(const HamiltonianSpec&, long);
extern template Matrix<cplx> dense_matrix<cplx>(const HamiltonianSpec&, long);

}  // namespace lrg
