#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lrgibbs/model.hpp"
#include "lrgibbs/types.hpp"

namespace lrg {

/// Matrix product operator on n sites of local dimension d.
///
/// Core j is a 4-index tensor W_j[l, s, s', r] (left bond, ket, bra, right
/// bond) stored column-major with l fastest, i.e. as a (Dl*d*d) x Dr matrix.
/// The same buffer read as Dl x (d*d*Dr) is the right unfolding. The encoded
/// operator is
///
///   M = sum W_1[s1,s1'] W_2[s2,s2'] ... W_n[sn,sn'] |s1..sn><s1'..sn'|
///
/// with site 1 the most significant tensor factor. Boundary bonds are 1.
template <typename Scalar>
class Mpo {
public:
    using Core = Matrix<Scalar>;

    Mpo() = default;
    /// Takes ownership of the cores; checks all shapes.
    Mpo(int d, std::vector<Core> cores, std::vector<int> bonds);

    int sites() const { return static_cast<int>(cores_.size()); }
    int local_dim() const { return d_; }

    /// n+1 entries, bond_profile()[j] is the bond between sites j and j+1
    /// (0-based sites); the first and last entries are 1.
    const std::vector<int>& bond_profile() const { return bonds_; }
    int max_bond() const;

    /// 0-based site access.
    const Core& core(int site) const { return cores_[site]; }
    Core& core(int site) { return cores_[site]; }
    int left_bond(int site) const { return bonds_[site]; }
    int right_bond(int site) const { return bonds_[site + 1]; }

    Scalar& at(int site, int l, int s, int sp, int r) {
        return cores_[site](l + bonds_[site] * (s + d_ * sp), r);
    }
    Scalar at(int site, int l, int s, int sp, int r) const {
        return cores_[site](l + bonds_[site] * (s + d_ * sp), r);
    }

    /// Replaces core `site` and the bonds on both sides of it.
    void set_core(int site, Core core, int left, int right);

    /// Number of stored scalars.
    long parameter_count() const;

private:
    int d_ = 2;
    std::vector<Core> cores_;
    std::vector<int> bonds_;
};

struct CompressionPolicy {
    enum class Mode { None, FixedTolerance, FixedMaxBond };

    Mode mode = Mode::None;
    double tolerance = 0.0;  // relative discarded Frobenius weight per cut
    int max_bond = 1;

    static CompressionPolicy none() { return {}; }
    /// Numerical rank only: no singular value above the rank floor is dropped.
    static CompressionPolicy exact() { return {Mode::FixedTolerance, 0.0, 1}; }
    static CompressionPolicy fixed_tolerance(double tol) { return {Mode::FixedTolerance, tol, 1}; }
    static CompressionPolicy fixed_max_bond(int bond) { return {Mode::FixedMaxBond, 0.0, bond}; }

    bool truncates() const { return mode != Mode::None; }
    bool lossless() const { return mode == Mode::FixedTolerance && tolerance == 0.0; }
    void validate() const;
};

/// Singular values at or below kRankFloor * sigma_max count as numerically zero.
inline constexpr double kRankFloor = 64.0 * 2.220446049250313e-16;

/// Hard cap on any bond produced by structural (uncompressed) arithmetic.
inline constexpr int kDefaultBondCap = 1024;

template <typename Scalar>
struct Compressed {
    Mpo<Scalar> mpo;
    double discarded_weight = 0.0;  // sum of discarded squared singular values
};

template <typename Scalar>
Mpo<Scalar> identity_mpo(int n, int d);

template <typename Scalar>
Mpo<Scalar> zero_mpo(int n, int d);

/// Finite-state-automaton MPO for a term list, or the exponential-decay
/// layout when the spec carries an exponential-sum pair kernel.
template <typename Scalar>
Mpo<Scalar> hamiltonian_mpo(const HamiltonianSpec& spec);

/// log10 of the generic bond bound n^k d^k.
double generic_bond_bound_log10(const HamiltonianSpec& spec);

/// Exact product A*B; bonds multiply.
template <typename Scalar>
Mpo<Scalar> multiply(const Mpo<Scalar>& a, const Mpo<Scalar>& b, int bond_cap = kDefaultBondCap);

/// Product with on-the-fly reduction (exact QR sweep, then truncating SVD
/// sweep per policy). With Mode::None this is the exact product.
template <typename Scalar>
Compressed<Scalar> multiply(const Mpo<Scalar>& a, const Mpo<Scalar>& b,
                            const CompressionPolicy& policy, int bond_cap = kDefaultBondCap);

/// Exact sum; interior bonds add.
template <typename Scalar>
Mpo<Scalar> add(const Mpo<Scalar>& a, const Mpo<Scalar>& b);

template <typename Scalar>
Mpo<Scalar> scale(const Mpo<Scalar>& a, Scalar c);

/// Tensor product: A on the first sites, B on the following ones.
template <typename Scalar>
Mpo<Scalar> concat(const Mpo<Scalar>& a, const Mpo<Scalar>& b);

template <typename Scalar>
Compressed<Scalar> compress(const Mpo<Scalar>& a, const CompressionPolicy& policy);

/// Left fold A*A*...*A (Q factors). With Mode::None bonds are the Q-th powers
/// and BondCapExceeded is thrown before any product would exceed bond_cap.
template <typename Scalar>
Compressed<Scalar> power(const Mpo<Scalar>& a, int q, const CompressionPolicy& policy,
                         int bond_cap = kDefaultBondCap);

template <typename Scalar>
Matrix<Scalar> densify(const Mpo<Scalar>& a, long cap = kDefaultDenseCap);

/// SVD sweep of a dense d^n x d^n operator into an MPO.
template <typename Scalar>
Mpo<Scalar> from_dense(const Matrix<Scalar>& op, int n, int d,
                       const CompressionPolicy& policy = CompressionPolicy::exact());

template <typename Scalar>
Scalar trace(const Mpo<Scalar>& a);

template <typename Scalar>
double frobenius_norm(const Mpo<Scalar>& a);

/// Converts a real MPO to complex scalars.
Mpo<cplx> to_complex(const Mpo<real>& a);

// Binary container
//
//   offset  size  field
//   0       6     magic "LRGMPO"
//   6       2     version, uint16 (currently 1)
//   8       1     scalar field: 0 real, 1 complex
//   9       7     reserved, zero
//   16      8     n, uint64
//   24      8     d, uint64
//   32      8(n+1) bond dimensions, uint64
//   ...           per site: Dl*d*d*Dr pairs (re, im) of IEEE-754 float64,
//                 row-major over (l, s, s', r)
//
// All integers and floats are little-endian.

inline constexpr std::uint16_t kMpoFormatVersion = 1;

template <typename Scalar>
void write_mpo(std::ostream& out, const Mpo<Scalar>& a);

/// Throws Error on malformed input, or when a complex container with
/// nonzero imaginary parts is read as real.
template <typename Scalar>
Mpo<Scalar> read_mpo(std::istream& in);

#define LRG_MPO_EXTERN(S)                                                                  \
    extern template class Mpo<S>;                                                          \
    extern template Mpo<S> identity_mpo<S>(int, int);                                      \
    extern template Mpo<S> zero_mpo<S>(int, int);                                          \
    extern template Mpo<S> hamiltonian_mpo<S>(const HamiltonianSpec&);                     \
    extern template Mpo<S> multiply<S>(const Mpo<S>&, const Mpo<S>&, int);                 \
    extern template Compressed<S> multiply<S>(const Mpo<S>&, const Mpo<S>&,                \
                                              const CompressionPolicy&, int);              \
    extern template Mpo<S> add<S>(const Mpo<S>&, const Mpo<S>&);                           \
    extern template Mpo<S> scale<S>(const Mpo<S>&, S);                                     \
    extern template Mpo<S> concat<S>(const Mpo<S>&, const Mpo<S>&);                        \
    extern template Compressed<S> compress<S>(const Mpo<S>&, const CompressionPolicy&);    \
    extern template Compressed<S> power<S>(const Mpo<S>&, int, const CompressionPolicy&,   \
                                           int);                                           \
    extern template Matrix<S> densify<S>(const Mpo<S>&, long);                             \
    extern template Mpo<S> from_dense<S>(const Matrix<S>&, int, int,                       \
                                         const CompressionPolicy&);                        \
    extern template S trace<S>(const Mpo<S>&);                                             \
    extern template double frobenius_norm<S>(const Mpo<S>&);                               \
    extern template void write_mpo<S>(std::ostream&, const Mpo<S>&);                       \
    extern template Mpo<S> read_mpo<S>(std::istream&);

LRG_MPO_EXTERN(real)
LRG_MPO_EXTERN(cplx)

#undef LRG_MPO_EXTERN

}  // namespace lrg
