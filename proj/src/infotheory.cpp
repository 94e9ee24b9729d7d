#include "otom/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace otom {

namespace {

constexpr double kEigenFloor = 1e-14;
constexpr double kClip = 1e-9;

double entropy_of(const ComplexMatrix& m) {
    double s = 0.0;
    for (double l : herm_eigenvalues(m))
        if (l > kEigenFloor) s -= l * std::log2(l);
    return std::max(s, 0.0);
}

void require_disjoint(std::initializer_list<const LabelSet*> sets) {
    std::vector<std::string> all;
    for (const auto* s : sets) all.insert(all.end(), s->begin(), s->end());
    std::sort(all.begin(), all.end());
    const auto dup = std::adjacent_find(all.begin(), all.end());
    if (dup != all.end()) throw std::invalid_argument("label '" + *dup + "' appears in more than one set");
}

LabelSet join(const LabelSet& a, const LabelSet& b) {
    LabelSet out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

double clipped(double v, const char* what) {
    if (v >= 0.0) return v;
    if (v >= -kClip) return 0.0;
    std::ostringstream os;
    os << what << " is " << v << " bits; the input is not a valid state";
    throw NumericalError(os.str());
}

}  // namespace

double entropy(const DensityMatrix& rho) { return entropy_of(rho.matrix()); }

double marginal_entropy(const DensityMatrix& rho, std::span<const std::string> labels) {
    if (labels.empty()) return 0.0;
    for (const auto& l : labels) (void)rho.layout().index_of(l);
    if (labels.size() == rho.layout().size()) return entropy(rho);
    return entropy_of(partial_trace(rho.matrix(), rho.layout(), labels).matrix);
}

double qmi(const DensityMatrix& rho, const LabelSet& x, const LabelSet& y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("qmi: label sets must be non-empty");
    require_disjoint({&x, &y});
    const double v = marginal_entropy(rho, x) + marginal_entropy(rho, y) - marginal_entropy(rho, join(x, y));
    return clipped(v, "mutual information");
}

double cqmi(const DensityMatrix& rho, const LabelSet& x, const LabelSet& y, const LabelSet& z) {
    if (x.empty() || y.empty()) throw std::invalid_argument("cqmi: label sets must be non-empty");
    require_disjoint({&x, &y, &z});
    const double v = marginal_entropy(rho, join(x, z)) + marginal_entropy(rho, join(y, z)) -
                     marginal_entropy(rho, join(join(x, y), z)) - marginal_entropy(rho, z);
    return clipped(v, "conditional mutual information");
}

double log_negativity(const DensityMatrix& rho, const LabelSet& cut) {
    const double n = trace_norm(partial_transpose(rho.matrix(), rho.layout(), cut));
    return std::max(std::log2(n), 0.0);
}

CorrelationReport correlation_report(const OtomChoi& choi) {
    const auto& r = choi.state;
    CorrelationReport c;
    c.i_ai_bo = qmi(r, {"a_i"}, {"b_o"});
    c.i_bi_co = qmi(r, {"b_i"}, {"c_o"});
    c.i_nonmarkov = qmi(r, {"a_i", "b_o"}, {"b_i", "c_o"});
    c.cqmi_ai_co_given_b = cqmi(r, {"a_i"}, {"c_o"}, {"b_o", "b_i"});
    c.log_negativity = log_negativity(r, {"b_i", "c_o"});
    return c;
}

std::vector<double> default_phi_grid() {
    std::vector<double> g(9);
    for (int i = 0; i < 9; ++i) g[i] = std::numbers::pi / 2 * i / 8.0;
    return g;
}

void validate_phi_grid(std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("phi grid is empty");
    const auto has = [&](double v) {
        return std::any_of(grid.begin(), grid.end(), [&](double g) { return std::abs(g - v) < 1e-12; });
    };
    for (double g : grid)
        if (!std::isfinite(g)) throw std::invalid_argument("phi grid contains a non-finite value");
    if (!has(0.0) || !has(std::numbers::pi / 2))
        throw std::invalid_argument("phi grid must contain both 0 and pi/2");
}

DeltaResult delta_from_terms(const AnalyticTerms& terms, std::span<const double> grid) {
    validate_phi_grid(grid);
    DeltaResult r;
    r.phi.assign(grid.begin(), grid.end());
    for (double phi : grid) r.qmi.push_back(qmi(conditional_choi_analytic_from_terms(terms, phi), {"a_i"}, {"c_o"}));
    const auto [lo, hi] = std::minmax_element(r.qmi.begin(), r.qmi.end());
    r.delta = (*hi < 1e-9) ? 1.0 : std::clamp(*lo / *hi, 0.0, 1.0);
    return r;
}

DeltaResult delta(const ProcessSpec& process, std::span<const double> grid) {
    validate_phi_grid(grid);
    return delta_from_terms(analytic_terms(process), grid);
}

}  // namespace otom
