#include "lrgibbs/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace lrg {

namespace {

std::vector<MatrixXc> build_basis(int d) {
    std::vector<MatrixXc> basis;
    basis.push_back(MatrixXc::Identity(d, d));
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            MatrixXc m = MatrixXc::Zero(d, d);
            m(j, k) = 1.0;
            m(k, j) = 1.0;
            basis.push_back(m);
        }
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            MatrixXc m = MatrixXc::Zero(d, d);
            m(j, k) = cplx(0.0, -1.0);
            m(k, j) = cplx(0.0, 1.0);
            basis.push_back(m);
        }
    }
    for (int l = 1; l < d; ++l) {
        MatrixXc m = MatrixXc::Zero(d, d);
        for (int j = 0; j < l; ++j) m(j, j) = 1.0 / l;
        m(l, l) = -1.0;
        basis.push_back(m);
    }
    return basis;
}

void check_interval(const HamiltonianSpec& spec, Interval region) {
    if (region.lo < 1 || region.hi > spec.n || region.lo > region.hi)
        throw std::invalid_argument("interval [" + std::to_string(region.lo) + "," +
                                    std::to_string(region.hi) + "] outside chain of " +
                                    std::to_string(spec.n) + " sites");
}

bool inside(const LocalTerm& t, Interval region) {
    return region.contains(t.sites.front()) && region.contains(t.sites.back());
}

bool crosses(const LocalTerm& t, int cut) {
    return t.sites.front() <= cut && t.sites.back() > cut;
}

}  // namespace

const std::vector<MatrixXc>& single_site_basis(int d) {
    if (d < 2) throw std::invalid_argument("local dimension must be at least 2");
    static std::mutex mutex;
    static std::map<int, std::vector<MatrixXc>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(d);
    if (it == cache.end()) it = cache.emplace(d, build_basis(d)).first;
    return it->second;
}

bool basis_is_real(int d, int index) {
    return single_site_basis(d).at(index).imag().isZero(0.0);
}

int basis_index(int d, const std::string& name) {
    if (d == 2) {
        if (name == "I") return 0;
        if (name == "X") return 1;
        if (name == "Y") return 2;
        if (name == "Z") return 3;
    }
    if (name.size() > 1 && name[0] == 'g') {
        std::size_t used = 0;
        int index = -1;
        try {
            index = std::stoi(name.substr(1), &used);
        } catch (const std::exception&) {
        }
        if (used == name.size() - 1 && index >= 0 && index < d * d) return index;
    }
    throw std::invalid_argument("unknown basis operator '" + name + "' for d=" + std::to_string(d));
}

std::string basis_name(int d, int index) {
    if (d == 2 && index >= 0 && index < 4) return std::string(1, "IXYZ"[index]);
    return "g" + std::to_string(index);
}

double PairModel::kernel_at(int r) const {
    if (kernel == Kernel::PowerLaw) return std::pow(static_cast<double>(r), -alpha);
    double sum = 0.0;
    for (const auto& term : series) {
        if (term.weight == 0.0) continue;
        sum += std::exp(std::log(term.weight) - term.rate * r);
    }
    return sum;
}

double PairModel::coupling_weight() const { return coupling.cwiseAbs().sum(); }

bool HamiltonianSpec::is_real() const {
    for (const auto& t : terms)
        for (int op : t.ops)
            if (!basis_is_real(d, op)) return false;
    return true;
}

void HamiltonianSpec::validate() const {
    if (n < 1) throw std::invalid_argument("n must be positive");
    if (d < 2) throw std::invalid_argument("d must be at least 2");
    if (k < 1) throw std::invalid_argument("k must be positive");
    for (const auto& t : terms) {
        if (t.sites.empty()) throw std::invalid_argument("term with empty support");
        if (t.sites.size() != t.ops.size())
            throw std::invalid_argument("term sites/ops length mismatch");
        if (static_cast<int>(t.sites.size()) > k)
            throw std::invalid_argument("term support exceeds locality k=" + std::to_string(k));
        for (std::size_t i = 0; i < t.sites.size(); ++i) {
            if (t.sites[i] < 1 || t.sites[i] > n)
                throw std::invalid_argument("term site out of range");
            if (i > 0 && t.sites[i] <= t.sites[i - 1])
                throw std::invalid_argument("term sites must be strictly increasing");
            if (t.ops[i] < 1 || t.ops[i] >= d * d)
                throw std::invalid_argument("term operator index must be a non-identity basis element");
        }
        if (!std::isfinite(t.coefficient)) throw std::invalid_argument("non-finite coefficient");
    }
    if (pair) {
        const int dd = d * d;
        if (pair->coupling.rows() != dd || pair->coupling.cols() != dd)
            throw std::invalid_argument("coupling matrix must be d^2 x d^2");
        if (pair->onsite.size() != dd) throw std::invalid_argument("onsite vector must have d^2 entries");
        if (!pair->coupling.row(0).isZero(0.0) || !pair->coupling.col(0).isZero(0.0) ||
            pair->onsite(0) != 0.0)
            throw std::invalid_argument("identity component of pair couplings must vanish");
    }
}

HamiltonianSpec make_pair_hamiltonian(std::string name, int n, int d, PairModel pair) {
    HamiltonianSpec spec;
    spec.name = std::move(name);
    spec.n = n;
    spec.d = d;
    spec.k = 2;
    const int dd = d * d;
    for (int i = 1; i <= n; ++i) {
        for (int xi = 1; xi < dd; ++xi) {
            if (pair.onsite.size() == dd && pair.onsite(xi) != 0.0)
                spec.terms.push_back({{i}, {xi}, pair.onsite(xi)});
        }
    }
    for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            const double kr = pair.kernel_at(j - i);
            if (kr == 0.0) continue;
            for (int xi = 1; xi < dd; ++xi)
                for (int xj = 1; xj < dd; ++xj)
                    if (pair.coupling(xi, xj) != 0.0)
                        spec.terms.push_back({{i, j}, {xi, xj}, kr * pair.coupling(xi, xj)});
        }
    }
    if (pair.kernel == PairModel::Kernel::PowerLaw) spec.alpha = pair.alpha;
    spec.pair = std::move(pair);
    spec.validate();
    return spec;
}

HamiltonianSpec power_law_ising(int n, double alpha, double J, double hx) {
    PairModel pair;
    pair.alpha = alpha;
    pair.coupling = MatrixXr::Zero(4, 4);
    pair.coupling(3, 3) = J;
    pair.onsite = Eigen::VectorXd::Zero(4);
    pair.onsite(1) = hx;
    return make_pair_hamiltonian("power_law_ising", n, 2, std::move(pair));
}

HamiltonianSpec power_law_heisenberg(int n, double alpha, double J) {
    PairModel pair;
    pair.alpha = alpha;
    pair.coupling = MatrixXr::Zero(4, 4);
    for (int xi = 1; xi < 4; ++xi) pair.coupling(xi, xi) = J;
    pair.onsite = Eigen::VectorXd::Zero(4);
    return make_pair_hamiltonian("power_law_heisenberg", n, 2, std::move(pair));
}

HamiltonianSpec nearest_neighbor_ising(int n, double J, double hx) {
    HamiltonianSpec spec;
    spec.name = "nearest_neighbor_ising";
    spec.n = n;
    spec.d = 2;
    spec.k = 2;
    if (hx != 0.0)
        for (int i = 1; i <= n; ++i) spec.terms.push_back({{i}, {1}, hx});
    if (J != 0.0)
        for (int i = 1; i < n; ++i) spec.terms.push_back({{i, i + 1}, {3, 3}, J});
    spec.validate();
    return spec;
}

HamiltonianSpec subset_hamiltonian(const HamiltonianSpec& spec, Interval region) {
    check_interval(spec, region);
    HamiltonianSpec out = spec;
    out.pair.reset();
    out.terms.clear();
    for (const auto& t : spec.terms)
        if (inside(t, region)) out.terms.push_back(t);
    if (region == Interval{1, spec.n}) out.pair = spec.pair;
    return out;
}

HamiltonianSpec boundary_interaction(const HamiltonianSpec& spec, int cut) {
    if (cut < 1 || cut >= spec.n)
        throw std::invalid_argument("cut must satisfy 1 <= cut < n");
    HamiltonianSpec out = spec;
    out.pair.reset();
    out.terms.clear();
    for (const auto& t : spec.terms)
        if (crosses(t, cut)) out.terms.push_back(t);
    return out;
}

HamiltonianSpec restrict_to(const HamiltonianSpec& spec, Interval region) {
    check_interval(spec, region);
    HamiltonianSpec out;
    out.name = spec.name;
    out.n = region.size();
    out.d = spec.d;
    out.k = spec.k;
    out.alpha = spec.alpha;
    out.pair = spec.pair;
    const int shift = region.lo - 1;
    for (const auto& t : spec.terms) {
        if (!inside(t, region)) continue;
        LocalTerm moved = t;
        for (int& s : moved.sites) s -= shift;
        out.terms.push_back(std::move(moved));
    }
    return out;
}

HamiltonianSpec split_hamiltonian(const HamiltonianSpec& spec, Interval a, Interval b) {
    if (a.hi + 1 != b.lo) throw std::invalid_argument("blocks must be adjacent");
    const Interval ab{a.lo, b.hi};
    HamiltonianSpec out = restrict_to(spec, ab);
    out.pair.reset();
    const int cut = a.size();
    std::erase_if(out.terms, [cut](const LocalTerm& t) { return crosses(t, cut); });
    return out;
}

double extensivity_constant(const HamiltonianSpec& spec) {
    std::vector<double> load(spec.n + 1, 0.0);
    for (const auto& t : spec.terms)
        for (int s : t.sites) load[s] += std::abs(t.coefficient);
    return *std::max_element(load.begin(), load.end());
}

double riemann_zeta(double s) {
    if (!(s > 1.0)) throw std::domain_error("zeta(s) requires s > 1");
    return std::riemann_zeta(s);
}

BoundaryBound boundary_bound(const HamiltonianSpec& spec) {
    BoundaryBound out;
    if (spec.alpha) {
        if (!(*spec.alpha > 2.0))
            throw NotApplicable("boundary interaction is not uniformly bounded for alpha <= 2");
        const double jbar = spec.pair ? spec.pair->coupling_weight() : 1.0;
        out.analytic = jbar * riemann_zeta(*spec.alpha - 1.0);
    }
    // Prefix sums over cut positions: a term crosses cuts first..last-1.
    std::vector<double> crossing(spec.n + 1, 0.0);
    for (const auto& t : spec.terms) {
        const double w = std::abs(t.coefficient);
        for (int c = t.sites.front(); c < t.sites.back(); ++c) crossing[c] += w;
    }
    out.measured = *std::max_element(crossing.begin(), crossing.end());
    if (out.analytic && out.measured > *out.analytic * (1.0 + 1e-12))
        throw std::logic_error("boundary norm exceeds the zeta(alpha-1) bound");
    return out;
}

long hilbert_dimension(int n, int d) {
    long dim = 1;
    for (int i = 0; i < n; ++i) {
        if (dim > (1L << 62) / d) return -1;
        dim *= d;
    }
    return dim;
}

template <typename Scalar>
Matrix<Scalar> dense_matrix(const HamiltonianSpec& spec, long cap) {
    const long dim = hilbert_dimension(spec.n, spec.d);
    if (dim < 0 || dim > cap)
        throw DimensionCapExceeded("dense dimension d^n exceeds cap " + std::to_string(cap));
    const auto& basis = single_site_basis(spec.d);
    const int d = spec.d;
    std::vector<long> stride(spec.n + 1);
    for (int j = 1; j <= spec.n; ++j) stride[j] = hilbert_dimension(spec.n - j, d);

    Matrix<Scalar> h = Matrix<Scalar>::Zero(dim, dim);
    for (const auto& t : spec.terms) {
        const int m = static_cast<int>(t.sites.size());
        const long combos = hilbert_dimension(m, d);
        for (long col = 0; col < dim; ++col) {
            long base = col;
            std::vector<int> digit(m);
            for (int i = 0; i < m; ++i) {
                digit[i] = static_cast<int>((col / stride[t.sites[i]]) % d);
                base -= digit[i] * stride[t.sites[i]];
            }
            for (long c = 0; c < combos; ++c) {
                cplx amp = t.coefficient;
                long row = base;
                long rest = c;
                for (int i = m - 1; i >= 0; --i) {
                    const int out_digit = static_cast<int>(rest % d);
                    rest /= d;
                    amp *= basis[t.ops[i]](out_digit, digit[i]);
                    row += out_digit * stride[t.sites[i]];
                }
                if (amp != 0.0) h(row, col) += scalar_cast<Scalar>(amp);
            }
        }
    }
    return h;
}

template Matrix<real> dense_matrix<real>(const HamiltonianSpec&, long);
template Matrix<cplx> dense_matrix<cplx>(const HamiltonianSpec&, long);

}  // namespace lrg
