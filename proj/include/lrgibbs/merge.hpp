#pragma once

#include <optional>
#include <vector>

#include "lrgibbs/model.hpp"
#include "lrgibbs/mpo.hpp"

namespace lrg {

/// Largest truncation order the builder accepts.
inline constexpr int kMaxTruncationOrder = 60;

/// Constants (g, g~, k) that enter every bound.
struct ModelConstants {
    double g = 0.0;
    double g_tilde = 0.0;
    int k = 2;

    /// C = 6 g k^2.
    double c() const { return 6.0 * g * k * k; }
    /// 1 / (24 g k^2); infinite for g = 0.
    double beta0_max() const;
    /// c0 = e^{g~ / (6 g k^2)}; 1 for g = 0.
    double c0() const;
    /// a1 = 12 e^{g~ / (4 g k^2)}.
    double a1() const;
    /// a2 = 2 e^{g~ / (24 g k^2)}.
    double a2() const;
};

/// g and g~ measured from the spec.
ModelConstants model_constants(const HamiltonianSpec& spec);

/// Smallest m0 >= 0 with m0 >= log2(c0 / delta0). Throws std::invalid_argument
/// unless delta0 lies in (0, max(1, c0)].
int truncation_order_for(double delta0, double g, int k, double g_tilde);

struct MergeOperatorSpec {
    Interval region_a;  // chain coordinates
    Interval region_b;
    cplx beta0 = 0.0;
    int m0 = 0;
    HamiltonianSpec spec_ab;     // H on A u B, re-indexed to 1..|AB|
    HamiltonianSpec spec_split;  // H_A + H_B on the same sites
    HamiltonianSpec spec_a;      // H_A on 1..|A|
    HamiltonianSpec spec_b;      // H_B on 1..|B|
    ModelConstants constants;
    std::optional<double> delta0;
    bool force = false;  // build outside the certified regime

    void validate() const;
    /// |beta0| <= 1/(24 g k^2), and m0 >= log2(c0/delta0) when delta0 is set.
    bool certified() const;
};

/// Merge spec for adjacent blocks of `spec`. Constants default to those of the
/// merged block.
MergeOperatorSpec make_merge_spec(const HamiltonianSpec& spec, Interval a, Interval b, cplx beta0, int m0,
                                  std::optional<ModelConstants> constants = std::nullopt);

template <typename Scalar>
struct MergeOperator {
    Mpo<Scalar> mpo;
    int hamiltonian_bond = 0;     // D_H, structural
    double ledger_log10 = 0.0;    // log10 sum_{m<=m0} (m+1) D_H^m
    double discarded_weight = 0.0;
    bool certified = false;
};

/// log10 of sum_{m=0}^{m0} (m+1) D^m.
double merge_ledger_log10(int bond, int m0);

/// Truncated merging operator as an MPO on the sites of A u B. Throws
/// BudgetError outside the certified regime unless ms.force is set.
template <typename Scalar>
MergeOperator<Scalar> build_merge_mpo(const MergeOperatorSpec& ms,
                                      const CompressionPolicy& policy = CompressionPolicy::exact(),
                                      int bond_cap = kDefaultBondCap);

struct OrderNorm {
    int m = 0;
    double norm = 0.0;
    double bound = 0.0;  // (2 C |beta0|)^m e^{g~/C}
};

struct TruncationReport {
    std::string model;
    int sites = 0;
    cplx beta0 = 0.0;
    int m0 = 0;
    double c0 = 1.0;
    double measured = 0.0;  // ||Psi - Psi~||_inf
    double bound = 0.0;     // c0 2^{-m0}
    std::vector<OrderNorm> orders;
    bool certified = false;
    bool passed = false;
};

/// Dense comparison of Psi~ with Psi. `max_order` limits the per-order norms.
template <typename Scalar>
TruncationReport certify_truncation(const MergeOperatorSpec& ms, int max_order = 10,
                                        long cap = kDefaultDenseCap);

extern template MergeOperator<real> build_merge_mpo<real>(const MergeOperatorSpec&, const CompressionPolicy&,
                                                          int);
extern template MergeOperator<cplx> build_merge_mpo<cplx>(const MergeOperatorSpec&, const CompressionPolicy&,
                                                          int);
extern template TruncationReport certify_truncation<real>(const MergeOperatorSpec&, int, long);
extern template TruncationReport certify_truncation<cplx>(const MergeOperatorSpec&, int, long);

}  // namespace lrg
