#include "lrgibbs/expsum.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

namespace lrg {

double ExpSumApprox::evaluate(double r) const {
    double sum = 0.0;
    for (const auto& t : terms) sum += std::exp(std::log(t.weight) - t.rate * r);
    return sum;
}

double node_spacing(double alpha, double epsilon) {
    return 2.0 * std::numbers::pi /
           (std::log(3.0) + alpha * std::log(1.0 / std::cos(1.0)) + std::log(1.0 / epsilon));
}

int truncation_half_width(double alpha, double epsilon, double x) {
    return static_cast<int>(std::ceil((2.0 / x) * std::log(2.0 * alpha / epsilon)));
}

double sup_error_on_grid(const ExpSumApprox& series, double grid_max) {
    const long points = static_cast<long>(std::floor((grid_max - 1.0) / kGridStep)) + 1;
    // Terms whose exponent is below -745 underflow to zero for every r >= 1.
    std::vector<KernelTerm> live;
    for (const auto& t : series.terms)
        if (std::log(t.weight) - t.rate > -745.0) live.push_back(t);
    double worst = 0.0;
    for (long i = 0; i < points; ++i) {
        const double r = 1.0 + kGridStep * static_cast<double>(i);
        double sum = 0.0;
        for (const auto& t : live) sum += std::exp(std::log(t.weight) - t.rate * r);
        worst = std::max(worst, std::abs(std::pow(r, -series.alpha) - sum));
    }
    return worst;
}

ExpSumApprox fit_kernel(double alpha, double epsilon, double grid_max) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("kernel epsilon must lie in (0, 1)");
    if (!(alpha >= 2.0)) throw std::invalid_argument("exponential-sum fit requires alpha >= 2");
    ExpSumApprox out;
    out.alpha = alpha;
    out.epsilon = epsilon;
    out.near_boundary = alpha < 3.0;
    out.x = node_spacing(alpha, epsilon);
    out.m = truncation_half_width(alpha, epsilon, out.x);
    const double prefactor = out.x / std::tgamma(alpha);
    for (int s = -out.m; s <= out.m; ++s) {
        const double sx = s * out.x;
        out.terms.push_back({prefactor * std::exp(alpha * sx), std::exp(sx)});
    }
    out.certified_sup_error = sup_error_on_grid(out, grid_max);
    return out;
}

namespace {

bool nearest_neighbor_only(const HamiltonianSpec& spec) {
    for (const auto& t : spec.terms)
        if (t.sites.back() - t.sites.front() > 1) return false;
    return true;
}

}  // namespace

bool has_long_range_part(const HamiltonianSpec& spec) {
    if (!spec.pair) return false;
    const auto& pair = *spec.pair;
    return pair.kernel == PairModel::Kernel::PowerLaw && spec.n > 2 && !pair.coupling.isZero(0.0);
}

ApproximateHamiltonian approximate_hamiltonian(const HamiltonianSpec& spec, double epsilon_h) {
    if (!(epsilon_h > 0.0) || !std::isfinite(epsilon_h))
        throw std::invalid_argument("epsilon_H must be positive and finite");
    if (!spec.pair && !nearest_neighbor_only(spec))
        throw NotApplicable("exponential-sum approximation needs a 2-local pair model");
    ApproximateHamiltonian out;
    out.epsilon_h = epsilon_h;
    if (!has_long_range_part(spec)) {
        out.spec = spec;
        return out;
    }
    const auto& pair = *spec.pair;
    const double jbar = pair.coupling_weight();
    const double n = spec.n;
    out.kernel_epsilon = std::min(kMaxKernelEpsilon, epsilon_h / (jbar * kKernelErrorConstant * n * n));
    // Only integer separations up to n-1 are ever evaluated.
    out.series = fit_kernel(pair.alpha, out.kernel_epsilon, std::max(2.0, n));

    PairModel approx = pair;
    approx.kernel = PairModel::Kernel::ExpSum;
    approx.series = out.series.terms;
    out.spec = make_pair_hamiltonian(spec.name + "~", spec.n, spec.d, std::move(approx));
    out.spec.k = spec.k;
    return out;
}

std::string series_to_json(const ExpSumApprox& series) {
    nlohmann::json j;
    j["format"] = "lrgibbs.expsum";
    j["version"] = 1;
    j["alpha"] = series.alpha;
    j["epsilon"] = series.epsilon;
    j["x"] = series.x;
    j["m"] = series.m;
    j["zeta"] = kKernelErrorConstant;
    j["certified_sup_error"] = series.certified_sup_error;
    auto& terms = j["terms"] = nlohmann::json::array();
    for (int i = 0; i < static_cast<int>(series.terms.size()); ++i)
        terms.push_back({{"s", i - series.m},
                         {"weight", series.terms[i].weight},
                         {"rate", series.terms[i].rate}});
    return j.dump(2);
}

}  // namespace lrg
