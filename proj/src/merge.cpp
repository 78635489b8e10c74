#include "lrgibbs/merge.hpp"

#include <cmath>
#include <limits>

#include "lrgibbs/oracle.hpp"

namespace lrg {

double ModelConstants::beta0_max() const {
    if (g == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (24.0 * g * k * k);
}

double ModelConstants::c0() const { return g == 0.0 ? 1.0 : std::exp(g_tilde / c()); }
double ModelConstants::a1() const { return g == 0.0 ? 12.0 : 12.0 * std::exp(g_tilde / (4.0 * g * k * k)); }
double ModelConstants::a2() const { return g == 0.0 ? 2.0 : 2.0 * std::exp(g_tilde / (24.0 * g * k * k)); }

ModelConstants model_constants(const HamiltonianSpec& spec) {
    ModelConstants out;
    out.g = extensivity_constant(spec);
    out.g_tilde = spec.n > 1 ? boundary_bound(spec).measured : 0.0;
    out.k = spec.k;
    return out;
}

int truncation_order_for(double delta0, double g, int k, double g_tilde) {
    const ModelConstants c{g, g_tilde, k};
    if (!(delta0 > 0.0 && delta0 <= std::max(1.0, c.c0())))
        throw std::invalid_argument("delta0 must lie in (0, max(1, c0)]");
    const double order = std::log2(c.c0() / delta0);
    // Absorb rounding in log2 so exact powers of two land on the integer.
    return std::max(0, static_cast<int>(std::ceil(order - 1e-12)));
}

void MergeOperatorSpec::validate() const {
    if (region_a.hi + 1 != region_b.lo) throw std::invalid_argument("merge regions must be adjacent");
    if (region_a.lo > region_a.hi || region_b.lo > region_b.hi) throw std::invalid_argument("empty merge region");
    if (m0 < 0 || m0 > kMaxTruncationOrder)
        throw std::invalid_argument("m0 must lie in [0, " + std::to_string(kMaxTruncationOrder) + "]");
    const int n = region_a.size() + region_b.size();
    if (spec_ab.n != n || spec_split.n != n || spec_a.n != region_a.size() || spec_b.n != region_b.size())
        throw std::invalid_argument("merge specs do not match the regions");
}

bool MergeOperatorSpec::certified() const {
    if (std::abs(beta0) > constants.beta0_max() * (1.0 + 1e-12)) return false;
    if (delta0 && m0 < truncation_order_for(*delta0, constants.g, constants.k, constants.g_tilde)) return false;
    return true;
}

MergeOperatorSpec make_merge_spec(const HamiltonianSpec& spec, Interval a, Interval b, cplx beta0, int m0,
                                  std::optional<ModelConstants> constants) {
    MergeOperatorSpec ms;
    ms.region_a = a;
    ms.region_b = b;
    ms.beta0 = beta0;
    ms.m0 = m0;
    const Interval ab{a.lo, b.hi};
    ms.spec_ab = restrict_to(spec, ab);
    ms.spec_split = split_hamiltonian(spec, a, b);
    ms.spec_a = restrict_to(spec, a);
    ms.spec_b = restrict_to(spec, b);
    ms.constants = constants ? *constants : model_constants(ms.spec_ab);
    ms.validate();
    return ms;
}

double merge_ledger_log10(int bond, int m0) {
    // Summed in log space: the terms reach D^60.
    const double log_d = std::log10(static_cast<double>(bond));
    double top = 0.0;
    for (int m = 0; m <= m0; ++m) top = std::max(top, std::log10(m + 1.0) + m * log_d);
    double sum = 0.0;
    for (int m = 0; m <= m0; ++m) sum += std::pow(10.0, std::log10(m + 1.0) + m * log_d - top);
    return top + std::log10(sum);
}

namespace {

template <typename Scalar>
struct Arithmetic {
    CompressionPolicy policy;
    int bond_cap;
    double discarded = 0.0;

    Mpo<Scalar> mul(const Mpo<Scalar>& a, const Mpo<Scalar>& b) {
        if (!policy.truncates()) return multiply(a, b, bond_cap);
        auto out = multiply(a, b, policy, bond_cap);
        discarded += out.discarded_weight;
        return std::move(out.mpo);
    }

    Mpo<Scalar> sum(const Mpo<Scalar>& a, const Mpo<Scalar>& b) {
        Mpo<Scalar> out = add(a, b);
        if (!policy.truncates()) {
            if (out.max_bond() > bond_cap)
                throw BondCapExceeded("merge sum bond " + std::to_string(out.max_bond()) + " exceeds bond cap",
                                      std::log10(static_cast<double>(out.max_bond())));
            return out;
        }
        auto reduced = compress(out, policy);
        discarded += reduced.discarded_weight;
        return std::move(reduced.mpo);
    }
};

}  // namespace

template <typename Scalar>
MergeOperator<Scalar> build_merge_mpo(const MergeOperatorSpec& ms, const CompressionPolicy& policy, int bond_cap) {
    ms.validate();
    policy.validate();
    MergeOperator<Scalar> out;
    out.certified = ms.certified();
    if (!out.certified && !ms.force)
        throw BudgetError("merge outside the certified regime (|beta0| or m0); set force to build anyway");

    const int na = ms.region_a.size();
    const int nb = ms.region_b.size();
    const int d = ms.spec_ab.d;
    const Scalar beta0 = scalar_cast<Scalar>(ms.beta0);

    Mpo<Scalar> h_ab = hamiltonian_mpo<Scalar>(ms.spec_ab);
    Mpo<Scalar> h_split = add(concat(hamiltonian_mpo<Scalar>(ms.spec_a), identity_mpo<Scalar>(nb, d)),
                              concat(identity_mpo<Scalar>(na, d), hamiltonian_mpo<Scalar>(ms.spec_b)));
    out.hamiltonian_bond = std::max(h_ab.max_bond(), h_split.max_bond());
    out.ledger_log10 = merge_ledger_log10(out.hamiltonian_bond, ms.m0);
    if (policy.truncates()) {
        h_ab = compress(h_ab, CompressionPolicy::exact()).mpo;
        h_split = compress(h_split, CompressionPolicy::exact()).mpo;
    }

    Arithmetic<Scalar> ar{policy, bond_cap};
    const Mpo<Scalar> x = scale(h_ab, Scalar(-1) * beta0);
    const Mpo<Scalar> y = scale(h_split, beta0);
    const Mpo<Scalar> id = identity_mpo<Scalar>(na + nb, d);

    // partial[j] = sum_{s<=j} Y^s / s!
    std::vector<Mpo<Scalar>> partial{id};
    Mpo<Scalar> power = id;
    for (int j = 1; j <= ms.m0; ++j) {
        power = scale(ar.mul(power, y), Scalar(1.0 / j));
        partial.push_back(ar.sum(partial.back(), power));
    }
    // Horner in X: U_{m0} = partial[0], U_s = partial[m0-s] + X U_{s+1} / (s+1).
    Mpo<Scalar> u = partial[0];
    for (int s = ms.m0 - 1; s >= 0; --s)
        u = ar.sum(partial[ms.m0 - s], scale(ar.mul(x, u), Scalar(1.0 / (s + 1))));
    out.mpo = std::move(u);
    out.discarded_weight = ar.discarded;
    return out;
}

template <typename Scalar>
TruncationReport certify_truncation(const MergeOperatorSpec& ms, int max_order, long cap) {
    ms.validate();
    TruncationReport rep;
    rep.model = ms.spec_ab.name;
    rep.sites = ms.spec_ab.n;
    rep.beta0 = ms.beta0;
    rep.m0 = ms.m0;
    rep.c0 = ms.constants.c0();
    rep.bound = rep.c0 * std::ldexp(1.0, -ms.m0);
    rep.certified = ms.certified();

    MergeOperatorSpec forced = ms;
    forced.force = true;
    const Matrix<Scalar> approx = densify(build_merge_mpo<Scalar>(forced).mpo, cap);
    const Matrix<Scalar> h_ab = dense_matrix<Scalar>(ms.spec_ab, cap);
    const Matrix<Scalar> h_split = dense_matrix<Scalar>(ms.spec_split, cap);
    const Scalar beta0 = scalar_cast<Scalar>(ms.beta0);
    const Matrix<Scalar> exact = merging_operator_dense<Scalar>(h_ab, h_split, beta0);
    rep.measured = schatten_norm<Scalar>(exact - approx, kInfinityNorm);

    const double c = ms.constants.c();
    const double tail = c == 0.0 ? 1.0 : std::exp(ms.constants.g_tilde / c);
    for (int m = 0; m <= max_order; ++m) {
        OrderNorm o;
        o.m = m;
        o.norm = schatten_norm<Scalar>(merging_order_dense<Scalar>(h_ab, h_split, beta0, m), kInfinityNorm);
        o.bound = std::pow(2.0 * c * std::abs(ms.beta0), m) * tail;
        rep.orders.push_back(o);
    }
    rep.passed = rep.measured <= rep.bound;
    for (const auto& o : rep.orders) rep.passed = rep.passed && o.norm <= o.bound;
    return rep;
}

template MergeOperator<real> build_merge_mpo<real>(const MergeOperatorSpec&, const CompressionPolicy&, int);
template MergeOperator<cplx> build_merge_mpo<cplx>(const MergeOperatorSpec&, const CompressionPolicy&, int);
template TruncationReport certify_truncation<real>(const MergeOperatorSpec&, int, long);
template TruncationReport certify_truncation<cplx>(const MergeOperatorSpec&, int, long);

}  // namespace lrg
