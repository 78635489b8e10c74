#include "lrgibbs/mpo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace lrg {

namespace {

template <typename Scalar>
using Map = Eigen::Map<Matrix<Scalar>>;
template <typename Scalar>
using ConstMap = Eigen::Map<const Matrix<Scalar>>;

void require_same_shape(int na, int da, int nb, int db) {
    if (na != nb || da != db)
        throw ShapeMismatch("MPO shape mismatch: (n=" + std::to_string(na) + ", d=" +
                            std::to_string(da) + ") vs (n=" + std::to_string(nb) +
                            ", d=" + std::to_string(db) + ")");
}

// Contracts one site of the product A*B into a left reduction matrix R:
//   T[x, s, s'', ra, rb] = sum R[x, (la, lb)] A[la, s, s', ra] B[lb, s', s'', rb]
// Returned as (X*d*d) x (Ra*Rb), i.e. an MPO core with left bond X.
template <typename Scalar>
Matrix<Scalar> contract_site(const Matrix<Scalar>& r, const Matrix<Scalar>& a, int da, int ra,
                             const Matrix<Scalar>& b, int db, int rb, int d) {
    const Eigen::Index chi = r.rows();
    const ConstMap<Scalar> a_right(a.data(), da, static_cast<Eigen::Index>(d) * d * ra);
    const ConstMap<Scalar> b_mat(b.data(), static_cast<Eigen::Index>(db) * d,
                                 static_cast<Eigen::Index>(d) * rb);

    // U[(x, s, ra), (lb, s')]
    Matrix<Scalar> u(chi * d * ra, static_cast<Eigen::Index>(db) * d);
    for (int lb = 0; lb < db; ++lb) {
        const Matrix<Scalar> m = r.middleCols(static_cast<Eigen::Index>(lb) * da, da) * a_right;
        for (int rr = 0; rr < ra; ++rr)
            for (int sp = 0; sp < d; ++sp)
                for (int s = 0; s < d; ++s)
                    u.col(lb + static_cast<Eigen::Index>(db) * sp)
                        .segment(chi * (s + static_cast<Eigen::Index>(d) * rr), chi) =
                        m.col(s + d * sp + static_cast<Eigen::Index>(d) * d * rr);
    }
    // V[(x, s, ra), (s'', rb)]
    const Matrix<Scalar> v = u * b_mat;
    Matrix<Scalar> t(chi * d * d, static_cast<Eigen::Index>(ra) * rb);
    for (int rbi = 0; rbi < rb; ++rbi)
        for (int rai = 0; rai < ra; ++rai)
            for (int spp = 0; spp < d; ++spp)
                for (int s = 0; s < d; ++s)
                    t.col(rai + static_cast<Eigen::Index>(ra) * rbi)
                        .segment(chi * (s + static_cast<Eigen::Index>(d) * spp), chi) =
                        v.col(spp + static_cast<Eigen::Index>(d) * rbi)
                            .segment(chi * (s + static_cast<Eigen::Index>(d) * rai), chi);
    return t;
}

struct Truncation {
    int keep = 1;
    double discarded = 0.0;
};

Truncation choose_rank(const Eigen::VectorXd& sigma, const CompressionPolicy& policy) {
    const int count = static_cast<int>(sigma.size());
    Truncation out;
    if (count == 0) return out;
    out.keep = count;
    if (policy.mode != CompressionPolicy::Mode::None) {
        const double floor = kRankFloor * sigma(0);
        out.keep = 0;
        while (out.keep < count && sigma(out.keep) > floor) ++out.keep;
        out.keep = std::max(out.keep, 1);
        if (policy.mode == CompressionPolicy::Mode::FixedTolerance && policy.tolerance > 0.0) {
            const double budget = policy.tolerance * policy.tolerance * sigma.squaredNorm();
            double dropped = sigma.tail(count - out.keep).squaredNorm();
            while (out.keep > 1) {
                const double next = sigma(out.keep - 1) * sigma(out.keep - 1);
                if (dropped + next > budget) break;
                dropped += next;
                --out.keep;
            }
        }
        if (policy.mode == CompressionPolicy::Mode::FixedMaxBond)
            out.keep = std::min(out.keep, policy.max_bond);
    }
    out.discarded = sigma.tail(count - out.keep).squaredNorm();
    return out;
}

// Left-orthonormalizes cores 0..n-2 with Householder QR. Exact up to rounding;
// bonds shrink to min(Dl*d*d, Dr).
template <typename Scalar>
void left_canonicalize(Mpo<Scalar>& m) {
    const int d = m.local_dim();
    for (int i = 0; i + 1 < m.sites(); ++i) {
        const auto& core = m.core(i);
        const Eigen::Index rows = core.rows();
        const Eigen::Index cols = core.cols();
        const Eigen::Index k = std::min(rows, cols);
        Eigen::HouseholderQR<Matrix<Scalar>> qr(core);
        Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(rows, k);
        Matrix<Scalar> r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
        const int left = m.left_bond(i);
        const int next_right = m.right_bond(i + 1);
        const ConstMap<Scalar> next(m.core(i + 1).data(), cols,
                                    static_cast<Eigen::Index>(d) * d * next_right);
        Matrix<Scalar> merged = r * next;
        m.set_core(i, std::move(q), left, static_cast<int>(k));
        m.set_core(i + 1,
                   Map<Scalar>(merged.data(), k * d * d, next_right),
                   static_cast<int>(k), next_right);
    }
}

// Right-to-left truncating SVD sweep over a left-canonical MPO.
template <typename Scalar>
double right_truncate(Mpo<Scalar>& m, const CompressionPolicy& policy) {
    const int d = m.local_dim();
    double discarded = 0.0;
    for (int i = m.sites() - 1; i > 0; --i) {
        const int left = m.left_bond(i);
        const int right = m.right_bond(i);
        const ConstMap<Scalar> unfolded(m.core(i).data(), left,
                                        static_cast<Eigen::Index>(d) * d * right);
        Eigen::BDCSVD<Matrix<Scalar>> svd(unfolded, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd sigma = svd.singularValues();
        const Truncation cut = choose_rank(sigma, policy);
        discarded += cut.discarded;
        const int keep = cut.keep;

        Matrix<Scalar> vh = svd.matrixV().leftCols(keep).adjoint();
        Matrix<Scalar> us = svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal();

        const int prev_left = m.left_bond(i - 1);
        Matrix<Scalar> prev = m.core(i - 1) * us;
        m.set_core(i, Map<Scalar>(vh.data(), static_cast<Eigen::Index>(keep) * d * d, right),
                   keep, right);
        m.set_core(i - 1, std::move(prev), prev_left, keep);
    }
    return discarded;
}

template <typename Scalar>
void check_bond_cap(const Mpo<Scalar>& a, const Mpo<Scalar>& b, int cap) {
    for (std::size_t i = 0; i < a.bond_profile().size(); ++i) {
        const long product = static_cast<long>(a.bond_profile()[i]) * b.bond_profile()[i];
        if (product > cap) {
            const double estimate = std::log10(static_cast<double>(a.max_bond())) +
                                    std::log10(static_cast<double>(b.max_bond()));
            throw BondCapExceeded("product bond " + std::to_string(product) +
                                      " exceeds bond cap " + std::to_string(cap),
                                  estimate);
        }
    }
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error("truncated MPO container");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

constexpr char kMagic[6] = {'L', 'R', 'G', 'M', 'P', 'O'};

}  // namespace

// -- Mpo --------------------------------------------------------------------

template <typename Scalar>
Mpo<Scalar>::Mpo(int d, std::vector<Core> cores, std::vector<int> bonds)
    : d_(d), cores_(std::move(cores)), bonds_(std::move(bonds)) {
    if (d_ < 1) throw std::invalid_argument("local dimension must be positive");
    if (cores_.empty()) throw std::invalid_argument("MPO needs at least one site");
    if (bonds_.size() != cores_.size() + 1)
        throw std::invalid_argument("bond profile must have n+1 entries");
    if (bonds_.front() != 1 || bonds_.back() != 1)
        throw std::invalid_argument("boundary bonds must be 1");
    for (std::size_t i = 0; i < cores_.size(); ++i) {
        if (bonds_[i] < 1) throw std::invalid_argument("bond dimensions must be positive");
        if (cores_[i].rows() != static_cast<Eigen::Index>(bonds_[i]) * d_ * d_ ||
            cores_[i].cols() != bonds_[i + 1])
            throw std::invalid_argument("core " + std::to_string(i) + " does not match bonds");
    }
}

template <typename Scalar>
int Mpo<Scalar>::max_bond() const {
    return *std::max_element(bonds_.begin(), bonds_.end());
}

template <typename Scalar>
void Mpo<Scalar>::set_core(int site, Core core, int left, int right) {
    if (core.rows() != static_cast<Eigen::Index>(left) * d_ * d_ || core.cols() != right)
        throw std::invalid_argument("core shape does not match bonds");
    cores_[site] = std::move(core);
    bonds_[site] = left;
    bonds_[site + 1] = right;
}

template <typename Scalar>
long Mpo<Scalar>::parameter_count() const {
    long total = 0;
    for (const auto& c : cores_) total += static_cast<long>(c.size());
    return total;
}

void CompressionPolicy::validate() const {
    if (!(tolerance >= 0.0)) throw std::invalid_argument("compression tolerance must be >= 0");
    if (max_bond < 1) throw std::invalid_argument("compression max bond must be >= 1");
}

// -- construction -----------------------------------------------------------

template <typename Scalar>
Mpo<Scalar> identity_mpo(int n, int d) {
    if (n < 1) throw std::invalid_argument("identity MPO needs n >= 1");
    typename Mpo<Scalar>::Core core = Matrix<Scalar>::Zero(d * d, 1);
    for (int s = 0; s < d; ++s) core(s + d * s, 0) = Scalar(1);
    return Mpo<Scalar>(d, std::vector(n, core), std::vector<int>(n + 1, 1));
}

template <typename Scalar>
Mpo<Scalar> zero_mpo(int n, int d) {
    if (n < 1) throw std::invalid_argument("zero MPO needs n >= 1");
    return Mpo<Scalar>(d, std::vector(n, Matrix<Scalar>::Zero(d * d, 1).eval()),
                       std::vector<int>(n + 1, 1));
}

double generic_bond_bound_log10(const HamiltonianSpec& spec) {
    return spec.k * (std::log10(static_cast<double>(spec.n)) + std::log10(static_cast<double>(spec.d)));
}

namespace {

template <typename Scalar>
void add_block(Mpo<Scalar>& m, int site, int l, int r, const MatrixXc& op, cplx factor, bool accumulate) {
    const int d = m.local_dim();
    for (int sp = 0; sp < d; ++sp)
        for (int s = 0; s < d; ++s) {
            const Scalar value = scalar_cast<Scalar>(factor * op(s, sp));
            if (accumulate) m.at(site, l, s, sp, r) += value;
            else m.at(site, l, s, sp, r) = value;
        }
}

template <typename Scalar>
Mpo<Scalar> allocate(int n, int d, const std::vector<int>& bonds) {
    std::vector<Matrix<Scalar>> cores;
    for (int i = 0; i < n; ++i)
        cores.push_back(Matrix<Scalar>::Zero(static_cast<Eigen::Index>(bonds[i]) * d * d, bonds[i + 1]));
    return Mpo<Scalar>(d, std::move(cores), bonds);
}

// Automaton over partial terms. At interior cut c the states are
// 0 (nothing applied yet), 1 (term completed) and one state per distinct
// prefix {(site, op) : site <= c} of a term still open across c.
template <typename Scalar>
Mpo<Scalar> automaton_mpo(const HamiltonianSpec& spec) {
    const int n = spec.n;
    const int d = spec.d;
    const auto& basis = single_site_basis(d);
    using Prefix = std::vector<std::pair<int, int>>;
    std::vector<std::map<Prefix, int>> states(n + 1);

    auto prefix_at = [](const LocalTerm& t, int cut) {
        Prefix p;
        for (std::size_t i = 0; i < t.sites.size() && t.sites[i] <= cut; ++i)
            p.emplace_back(t.sites[i], t.ops[i]);
        return p;
    };
    for (const auto& t : spec.terms)
        for (int c = t.sites.front(); c < t.sites.back(); ++c) {
            auto& table = states[c];
            table.try_emplace(prefix_at(t, c), static_cast<int>(table.size()) + 2);
        }

    std::vector<int> bonds(n + 1);
    for (int c = 0; c <= n; ++c) bonds[c] = (c == 0 || c == n) ? 1 : 2 + static_cast<int>(states[c].size());
    Mpo<Scalar> m = allocate<Scalar>(n, d, bonds);

    // Index of the "not started" state at a cut (absent at cut n) and of the
    // "finished" state (absent at cut 0).
    auto idle = [](int) { return 0; };
    auto done = [n](int c) { return c == n ? 0 : 1; };
    auto state_of = [&](const LocalTerm& t, int c) {
        if (c < t.sites.front()) return idle(c);
        if (c >= t.sites.back()) return done(c);
        return states[c].at(prefix_at(t, c));
    };

    const MatrixXc& id = basis[0];
    for (int j = 1; j <= n; ++j) {
        const int site = j - 1;
        if (j < n) add_block(m, site, idle(j - 1), idle(j), id, 1.0, false);
        if (j > 1) add_block(m, site, done(j - 1), done(j), id, 1.0, false);
        for (const auto& [prefix, index] : states[j - 1]) {
            auto it = states[j].find(prefix);
            if (it != states[j].end()) add_block(m, site, index, it->second, id, 1.0, false);
        }
        for (const auto& t : spec.terms) {
            const auto pos = std::find(t.sites.begin(), t.sites.end(), j);
            if (pos == t.sites.end()) continue;
            const MatrixXc& op = basis[t.ops[pos - t.sites.begin()]];
            const int from = state_of(t, j - 1);
            const int to = state_of(t, j);
            if (j == t.sites.back()) add_block(m, site, from, to, op, t.coefficient, true);
            else add_block(m, site, from, to, op, 1.0, false);
        }
    }
    return m;
}

// Exponential-decay layout: per series term and coupling row xi, a carry
// state that picks up exp(-rate) on every site it crosses.
template <typename Scalar>
Mpo<Scalar> exponential_sum_mpo(const HamiltonianSpec& spec) {
    const int n = spec.n;
    const int d = spec.d;
    const int dd = d * d;
    const auto& pair = *spec.pair;
    const auto& basis = single_site_basis(d);

    std::vector<int> rows;
    for (int xi = 1; xi < dd; ++xi)
        if (!pair.coupling.row(xi).isZero(0.0)) rows.push_back(xi);
    const int per_term = static_cast<int>(rows.size());
    const int carries = per_term * static_cast<int>(pair.series.size());

    std::vector<int> bonds(n + 1, 2 + carries);
    bonds.front() = 1;
    bonds.back() = 1;
    Mpo<Scalar> m = allocate<Scalar>(n, d, bonds);

    MatrixXc field = MatrixXc::Zero(d, d);
    for (int xi = 1; xi < dd; ++xi) field += pair.onsite(xi) * basis[xi];
    std::vector<MatrixXc> closing;
    for (int xi : rows) {
        MatrixXc op = MatrixXc::Zero(d, d);
        for (int xj = 1; xj < dd; ++xj) op += pair.coupling(xi, xj) * basis[xj];
        closing.push_back(op);
    }

    auto idle = [](int) { return 0; };
    auto done = [n](int c) { return c == n ? 0 : 1; };
    const MatrixXc& id = basis[0];
    for (int j = 1; j <= n; ++j) {
        const int site = j - 1;
        if (j < n) add_block(m, site, idle(j - 1), idle(j), id, 1.0, false);
        if (j > 1) add_block(m, site, done(j - 1), done(j), id, 1.0, false);
        add_block(m, site, idle(j - 1), done(j), field, 1.0, true);
        for (std::size_t s = 0; s < pair.series.size(); ++s) {
            const auto& term = pair.series[s];
            const double decay = std::exp(-term.rate);
            const double close = term.weight == 0.0 ? 0.0 : std::exp(std::log(term.weight) - term.rate);
            for (int p = 0; p < per_term; ++p) {
                const int carry = 2 + static_cast<int>(s) * per_term + p;
                if (j < n) add_block(m, site, idle(j - 1), carry, basis[rows[p]], 1.0, false);
                if (j > 1 && j < n) add_block(m, site, carry, carry, id, decay, false);
                if (j > 1) add_block(m, site, carry, done(j), closing[p], close, true);
            }
        }
    }
    return m;
}

}  // namespace

template <typename Scalar>
Mpo<Scalar> hamiltonian_mpo(const HamiltonianSpec& spec) {
    spec.validate();
    if (!is_complex_v<Scalar> && !spec.is_real())
        throw std::domain_error("Hamiltonian has complex basis factors; use complex scalars");
    if (spec.pair && spec.pair->kernel == PairModel::Kernel::ExpSum) return exponential_sum_mpo<Scalar>(spec);
    return automaton_mpo<Scalar>(spec);
}

// -- arithmetic -------------------------------------------------------------

template <typename Scalar>
Mpo<Scalar> multiply(const Mpo<Scalar>& a, const Mpo<Scalar>& b, int bond_cap) {
    require_same_shape(a.sites(), a.local_dim(), b.sites(), b.local_dim());
    check_bond_cap(a, b, bond_cap);
    const int d = a.local_dim();
    std::vector<Matrix<Scalar>> cores;
    std::vector<int> bonds(a.sites() + 1);
    for (int i = 0; i <= a.sites(); ++i) bonds[i] = a.bond_profile()[i] * b.bond_profile()[i];
    for (int i = 0; i < a.sites(); ++i) {
        const Matrix<Scalar> r = Matrix<Scalar>::Identity(bonds[i], bonds[i]);
        cores.push_back(contract_site(r, a.core(i), a.left_bond(i), a.right_bond(i), b.core(i),
                                      b.left_bond(i), b.right_bond(i), d));
    }
    return Mpo<Scalar>(d, std::move(cores), std::move(bonds));
}

template <typename Scalar>
Compressed<Scalar> multiply(const Mpo<Scalar>& a, const Mpo<Scalar>& b, const CompressionPolicy& policy,
                            int bond_cap) {
    policy.validate();
    if (!policy.truncates()) return {multiply(a, b, bond_cap), 0.0};
    require_same_shape(a.sites(), a.local_dim(), b.sites(), b.local_dim());
    const int n = a.sites();
    const int d = a.local_dim();
    std::vector<Matrix<Scalar>> cores;
    std::vector<int> bonds(n + 1, 1);
    Matrix<Scalar> r = Matrix<Scalar>::Identity(1, 1);
    for (int i = 0; i < n; ++i) {
        Matrix<Scalar> t = contract_site(r, a.core(i), a.left_bond(i), a.right_bond(i), b.core(i),
                                         b.left_bond(i), b.right_bond(i), d);
        if (i + 1 == n) {
            cores.push_back(std::move(t));
            break;
        }
        const Eigen::Index k = std::min(t.rows(), t.cols());
        Eigen::HouseholderQR<Matrix<Scalar>> qr(t);
        cores.push_back(qr.householderQ() * Matrix<Scalar>::Identity(t.rows(), k));
        r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
        bonds[i + 1] = static_cast<int>(k);
    }
    Mpo<Scalar> out(d, std::move(cores), std::move(bonds));
    const double discarded = right_truncate(out, policy);
    return {std::move(out), discarded};
}

template <typename Scalar>
Mpo<Scalar> add(const Mpo<Scalar>& a, const Mpo<Scalar>& b) {
    require_same_shape(a.sites(), a.local_dim(), b.sites(), b.local_dim());
    const int n = a.sites();
    const int d = a.local_dim();
    std::vector<int> bonds(n + 1, 1);
    for (int i = 1; i < n; ++i) bonds[i] = a.bond_profile()[i] + b.bond_profile()[i];
    Mpo<Scalar> out = allocate<Scalar>(n, d, bonds);
    for (int i = 0; i < n; ++i) {
        const int lshift = i == 0 ? 0 : a.left_bond(i);
        const int rshift = i + 1 == n ? 0 : a.right_bond(i);
        for (int sp = 0; sp < d; ++sp)
            for (int s = 0; s < d; ++s) {
                for (int r = 0; r < a.right_bond(i); ++r)
                    for (int l = 0; l < a.left_bond(i); ++l) out.at(i, l, s, sp, r) += a.at(i, l, s, sp, r);
                for (int r = 0; r < b.right_bond(i); ++r)
                    for (int l = 0; l < b.left_bond(i); ++l)
                        out.at(i, l + lshift, s, sp, r + rshift) += b.at(i, l, s, sp, r);
            }
    }
    return out;
}

template <typename Scalar>
Mpo<Scalar> scale(const Mpo<Scalar>& a, Scalar c) {
    Mpo<Scalar> out = a;
    out.core(0) *= c;
    return out;
}

template <typename Scalar>
Mpo<Scalar> concat(const Mpo<Scalar>& a, const Mpo<Scalar>& b) {
    if (a.local_dim() != b.local_dim()) throw ShapeMismatch("concat needs equal local dimension");
    std::vector<Matrix<Scalar>> cores;
    std::vector<int> bonds(a.bond_profile().begin(), a.bond_profile().end() - 1);
    for (int i = 0; i < a.sites(); ++i) cores.push_back(a.core(i));
    for (int i = 0; i < b.sites(); ++i) cores.push_back(b.core(i));
    bonds.insert(bonds.end(), b.bond_profile().begin(), b.bond_profile().end());
    return Mpo<Scalar>(a.local_dim(), std::move(cores), std::move(bonds));
}

template <typename Scalar>
Compressed<Scalar> compress(const Mpo<Scalar>& a, const CompressionPolicy& policy) {
    policy.validate();
    if (!policy.truncates()) return {a, 0.0};
    Mpo<Scalar> out = a;
    left_canonicalize(out);
    const double discarded = right_truncate(out, policy);
    return {std::move(out), discarded};
}

template <typename Scalar>
Compressed<Scalar> power(const Mpo<Scalar>& a, int q, const CompressionPolicy& policy, int bond_cap) {
    if (q < 1) throw std::invalid_argument("power needs Q >= 1");
    policy.validate();
    Compressed<Scalar> out{a, 0.0};
    for (int step = 2; step <= q; ++step) {
        if (!policy.truncates()) {
            try {
                check_bond_cap(out.mpo, a, bond_cap);
            } catch (const BondCapExceeded& e) {
                throw BondCapExceeded(std::string(e.what()) + " at factor " + std::to_string(step) + " of " +
                                          std::to_string(q),
                                      q * std::log10(static_cast<double>(a.max_bond())));
            }
            out.mpo = multiply(out.mpo, a, bond_cap);
        } else {
            auto next = multiply(out.mpo, a, policy, bond_cap);
            out.mpo = std::move(next.mpo);
            out.discarded_weight += next.discarded_weight;
        }
    }
    return out;
}

// -- dense bridge -----------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> densify(const Mpo<Scalar>& a, long cap) {
    const int n = a.sites();
    const int d = a.local_dim();
    const long dim = hilbert_dimension(n, d);
    if (dim < 0 || dim > cap)
        throw DimensionCapExceeded("dense dimension d^n exceeds cap " + std::to_string(cap));
    // env rows: ket + d^i * bra over the first i sites; columns: bond.
    Matrix<Scalar> env = Matrix<Scalar>::Ones(1, 1);
    long block = 1;
    for (int i = 0; i < n; ++i) {
        const int right = a.right_bond(i);
        const ConstMap<Scalar> core(a.core(i).data(), a.left_bond(i), static_cast<Eigen::Index>(d) * d * right);
        const Matrix<Scalar> g = env * core;
        const long next_block = block * d;
        Matrix<Scalar> next(next_block * next_block, right);
        for (int r = 0; r < right; ++r)
            for (int sp = 0; sp < d; ++sp)
                for (int s = 0; s < d; ++s)
                    for (long bra = 0; bra < block; ++bra)
                        for (long ket = 0; ket < block; ++ket)
                            next((ket * d + s) + next_block * (bra * d + sp), r) =
                                g(ket + block * bra, s + d * sp + static_cast<Eigen::Index>(d) * d * r);
        env = std::move(next);
        block = next_block;
    }
    return Map<Scalar>(env.data(), dim, dim);
}

template <typename Scalar>
Mpo<Scalar> from_dense(const Matrix<Scalar>& op, int n, int d, const CompressionPolicy& policy) {
    const long dim = hilbert_dimension(n, d);
    if (op.rows() != dim || op.cols() != dim) throw ShapeMismatch("dense operator is not d^n x d^n");
    policy.validate();
    // Vectorize with site-1 (ket, bra) pair fastest.
    Vector<Scalar> v(dim * dim);
    std::vector<int> ket(n), bra(n);
    for (long col = 0; col < dim; ++col) {
        for (long row = 0; row < dim; ++row) {
            long rr = row, cc = col;
            for (int j = n - 1; j >= 0; --j) {
                ket[j] = static_cast<int>(rr % d);
                bra[j] = static_cast<int>(cc % d);
                rr /= d;
                cc /= d;
            }
            long index = 0;
            for (int j = n - 1; j >= 0; --j) index = index * d * d + ket[j] + d * bra[j];
            v(index) = op(row, col);
        }
    }
    std::vector<Matrix<Scalar>> cores;
    std::vector<int> bonds(n + 1, 1);
    Matrix<Scalar> rest = Map<Scalar>(v.data(), 1, v.size());
    for (int i = 0; i + 1 < n; ++i) {
        const Eigen::Index rows = static_cast<Eigen::Index>(bonds[i]) * d * d;
        const Eigen::Index cols = rest.size() / rows;
        const ConstMap<Scalar> unfolded(rest.data(), rows, cols);
        Eigen::BDCSVD<Matrix<Scalar>> svd(unfolded, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd sigma = svd.singularValues();
        const int keep = choose_rank(sigma, policy).keep;
        cores.push_back(svd.matrixU().leftCols(keep));
        rest = sigma.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
        bonds[i + 1] = keep;
    }
    cores.push_back(Map<Scalar>(rest.data(), static_cast<Eigen::Index>(bonds[n - 1]) * d * d, 1));
    return Mpo<Scalar>(d, std::move(cores), std::move(bonds));
}

template <typename Scalar>
Scalar trace(const Mpo<Scalar>& a) {
    const int d = a.local_dim();
    Matrix<Scalar> env = Matrix<Scalar>::Ones(1, 1);
    for (int i = 0; i < a.sites(); ++i) {
        Matrix<Scalar> diag = Matrix<Scalar>::Zero(a.left_bond(i), a.right_bond(i));
        for (int s = 0; s < d; ++s)
            for (int r = 0; r < a.right_bond(i); ++r)
                for (int l = 0; l < a.left_bond(i); ++l) diag(l, r) += a.at(i, l, s, s, r);
        env = env * diag;
    }
    return env(0, 0);
}

template <typename Scalar>
double frobenius_norm(const Mpo<Scalar>& a) {
    const int d = a.local_dim();
    Matrix<Scalar> env = Matrix<Scalar>::Ones(1, 1);
    for (int i = 0; i < a.sites(); ++i) {
        const int left = a.left_bond(i);
        const int right = a.right_bond(i);
        Matrix<Scalar> next = Matrix<Scalar>::Zero(right, right);
        for (int ss = 0; ss < d * d; ++ss) {
            const auto block = a.core(i).middleRows(static_cast<Eigen::Index>(ss) * left, left);
            next.noalias() += block.adjoint() * env * block;
        }
        env = std::move(next);
    }
    return std::sqrt(std::abs(env(0, 0)));
}

Mpo<cplx> to_complex(const Mpo<real>& a) {
    std::vector<MatrixXc> cores;
    for (int i = 0; i < a.sites(); ++i) cores.push_back(a.core(i).cast<cplx>());
    return Mpo<cplx>(a.local_dim(), std::move(cores), a.bond_profile());
}

// -- serialization ----------------------------------------------------------

template <typename Scalar>
void write_mpo(std::ostream& out, const Mpo<Scalar>& a) {
    const int d = a.local_dim();
    out.write(kMagic, sizeof kMagic);
    const char version[2] = {static_cast<char>(kMpoFormatVersion & 0xff),
                             static_cast<char>(kMpoFormatVersion >> 8)};
    out.write(version, 2);
    const char field = is_complex_v<Scalar> ? 1 : 0;
    out.write(&field, 1);
    const char reserved[7] = {};
    out.write(reserved, 7);
    put_u64(out, static_cast<std::uint64_t>(a.sites()));
    put_u64(out, static_cast<std::uint64_t>(d));
    for (int b : a.bond_profile()) put_u64(out, static_cast<std::uint64_t>(b));
    for (int i = 0; i < a.sites(); ++i)
        for (int l = 0; l < a.left_bond(i); ++l)
            for (int s = 0; s < d; ++s)
                for (int sp = 0; sp < d; ++sp)
                    for (int r = 0; r < a.right_bond(i); ++r) {
                        const cplx z = a.at(i, l, s, sp, r);
                        put_f64(out, z.real());
                        put_f64(out, z.imag());
                    }
    if (!out) throw Error("failed writing MPO container");
}

template <typename Scalar>
Mpo<Scalar> read_mpo(std::istream& in) {
    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, kMagic, 6) != 0) throw Error("not an MPO container");
    unsigned char head[10];
    if (!in.read(reinterpret_cast<char*>(head), 10)) throw Error("truncated MPO container");
    const unsigned version = head[0] | (head[1] << 8);
    if (version != kMpoFormatVersion) throw Error("unsupported MPO container version " + std::to_string(version));
    if (head[2] > 1) throw Error("invalid scalar field tag");
    const std::uint64_t n = get_u64(in);
    const std::uint64_t d = get_u64(in);
    if (n < 1 || n > (1u << 20) || d < 1 || d > 64) throw Error("implausible MPO header");
    std::vector<int> bonds(n + 1);
    for (auto& b : bonds) {
        const std::uint64_t v = get_u64(in);
        if (v < 1 || v > (1u << 24)) throw Error("implausible bond dimension");
        b = static_cast<int>(v);
    }
    Mpo<Scalar> m = allocate<Scalar>(static_cast<int>(n), static_cast<int>(d), bonds);
    const int dd = static_cast<int>(d);
    for (int i = 0; i < static_cast<int>(n); ++i)
        for (int l = 0; l < m.left_bond(i); ++l)
            for (int s = 0; s < dd; ++s)
                for (int sp = 0; sp < dd; ++sp)
                    for (int r = 0; r < m.right_bond(i); ++r) {
                        const double re = get_f64(in);
                        const double im = get_f64(in);
                        if constexpr (!is_complex_v<Scalar>)
                            if (im != 0.0) throw Error("complex MPO container read with real scalars");
                        m.at(i, l, s, sp, r) = scalar_cast<Scalar>(cplx(re, im));
                    }
    return m;
}

#define LRG_MPO_INSTANTIATE(S)                                                                      \
    template class Mpo<S>;                                                                          \
    template Mpo<S> identity_mpo<S>(int, int);                                                      \
    template Mpo<S> zero_mpo<S>(int, int);                                                          \
    template Mpo<S> hamiltonian_mpo<S>(const HamiltonianSpec&);                                     \
    template Mpo<S> multiply<S>(const Mpo<S>&, const Mpo<S>&, int);                                 \
    template Compressed<S> multiply<S>(const Mpo<S>&, const Mpo<S>&, const CompressionPolicy&, int); \
    template Mpo<S> add<S>(const Mpo<S>&, const Mpo<S>&);                                           \
    template Mpo<S> scale<S>(const Mpo<S>&, S);                                                     \
    template Mpo<S> concat<S>(const Mpo<S>&, const Mpo<S>&);                                        \
    template Compressed<S> compress<S>(const Mpo<S>&, const CompressionPolicy&);                    \
    template Compressed<S> power<S>(const Mpo<S>&, int, const CompressionPolicy&, int);             \
    template Matrix<S> densify<S>(const Mpo<S>&, long);                                             \
    template Mpo<S> from_dense<S>(const Matrix<S>&, int, int, const CompressionPolicy&);            \
    template S trace<S>(const Mpo<S>&);                                                             \
    template double frobenius_norm<S>(const Mpo<S>&);                                               \
    template void write_mpo<S>(std::ostream&, const Mpo<S>&);                                       \
    template Mpo<S> read_mpo<S>(std::istream&);

LRG_MPO_INSTANTIATE(real)
LRG_MPO_INSTANTIATE(cplx)

}  // namespace lrg
