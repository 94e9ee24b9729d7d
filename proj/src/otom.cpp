#include "otom/otom.hpp"

#include <cmath>
#include <sstream>

namespace otom {

// ---------------------------------------------------------------------------
// Evolutions

ComplexMatrix Evolution::dense() const {
    const std::size_t d = dim();
    ComplexMatrix u(d, d);
    std::vector<cd> col(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::fill(col.begin(), col.end(), cd{});
        col[j] = 1.0;
        forward(col);
        for (std::size_t i = 0; i < d; ++i) u(i, j) = col[i];
    }
    return u;
}

DenseEvolution::DenseEvolution(ComplexMatrix u, std::size_t probe_dim)
    : u_(std::move(u)), u_dag_(u_.adjoint()), probe_dim_(probe_dim) {
    if (!u_.square()) throw std::invalid_argument("DenseEvolution: matrix must be square");
    if (probe_dim_ == 0 || u_.rows() % probe_dim_ != 0)
        throw std::invalid_argument("DenseEvolution: probe dimension does not divide the matrix dimension");
}

void DenseEvolution::forward(std::span<cd> psi) const {
    const auto out = u_.apply(psi);
    std::copy(out.begin(), out.end(), psi.begin());
}

void DenseEvolution::backward(std::span<cd> psi) const {
    const auto out = u_dag_.apply(psi);
    std::copy(out.begin(), out.end(), psi.begin());
}

double unitarity_defect(const Evolution& e, std::uint64_t seed, int samples) {
    SeededRng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const auto v = random_state_vector(e.dim(), rng);
        auto w = v;
        e.forward(w);
        double n = 0.0;
        for (const auto& x : w) n += std::norm(x);
        worst = std::max(worst, std::abs(std::sqrt(n) - 1.0));
        e.backward(w);
        for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(w[i] - v[i]));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Ensembles and processes

StateEnsemble StateEnsemble::from_density(const DensityMatrix& rho) {
    const auto eig = herm_eigen(rho.matrix());
    StateEnsemble ens;
    const std::size_t d = rho.dim();
    for (std::size_t c = d; c-- > 0;) {
        if (eig.eigenvalues[c] < 1e-14) continue;
        std::vector<cd> v(d);
        for (std::size_t r = 0; r < d; ++r) v[r] = eig.eigenvectors(r, c);
        ens.weights.push_back(eig.eigenvalues[c]);
        ens.states.push_back(std::move(v));
    }
    return ens;
}

StateEnsemble StateEnsemble::pure(std::vector<cd> psi) {
    StateEnsemble ens;
    ens.weights.push_back(1.0);
    ens.states.push_back(std::move(psi));
    return ens;
}

StateEnsemble StateEnsemble::basis_state(std::size_t dim, std::size_t index) {
    if (index >= dim) throw std::invalid_argument("StateEnsemble::basis_state: index out of range");
    std::vector<cd> v(dim);
    v[index] = 1.0;
    return pure(std::move(v));
}

StateEnsemble StateEnsemble::maximally_mixed(std::size_t dim) {
    StateEnsemble ens;
    for (std::size_t i = 0; i < dim; ++i) {
        ens.weights.push_back(1.0 / static_cast<double>(dim));
        std::vector<cd> v(dim);
        v[i] = 1.0;
        ens.states.push_back(std::move(v));
    }
    return ens;
}

ComplexMatrix StateEnsemble::density() const {
    const std::size_t d = dim();
    ComplexMatrix rho(d, d);
    for (std::size_t k = 0; k < states.size(); ++k) rho += ComplexMatrix::outer(states[k], states[k]) * cd(weights[k]);
    return rho;
}

std::string target_name(const ButterflyTarget& t) {
    if (std::holds_alternative<ProbeTarget>(t)) return "probe";
    return "system" + std::to_string(std::get<SystemQubitTarget>(t).bit);
}

SubsystemLayout target_register_layout(std::size_t probe_dim, std::size_t system_dim, const ButterflyTarget& t) {
    if (std::holds_alternative<ProbeTarget>(t)) return SubsystemLayout({probe_dim, system_dim}, {"target", "S"});
    const std::size_t bit = std::get<SystemQubitTarget>(t).bit;
    if (!is_power_of_two(system_dim) || system_dim < 2)
        throw std::invalid_argument("system-qubit butterfly requires a power-of-two system dimension");
    if (bit >= 63 || (std::size_t{2} << bit) > system_dim) {
        std::ostringstream os;
        os << "system-qubit butterfly bit " << bit << " out of range for system dimension " << system_dim;
        throw std::invalid_argument(os.str());
    }
    const std::size_t lo = std::size_t{1} << bit;
    const std::size_t hi = system_dim / (2 * lo);
    return SubsystemLayout({probe_dim, hi, 2, lo}, {"P", "S_high", "target", "S_low"});
}

ProcessSpec::ProcessSpec(std::shared_ptr<const Evolution> forward, StateEnsemble rho_s, ButterflyTarget target)
    : forward_(std::move(forward)), rho_(std::move(rho_s)), target_(target) {
    if (!forward_) throw std::invalid_argument("ProcessSpec: missing forward evolution");
    if (rho_.states.empty() || rho_.weights.size() != rho_.states.size())
        throw std::invalid_argument("ProcessSpec: empty or malformed system-state ensemble");
    double wsum = 0.0;
    for (std::size_t k = 0; k < rho_.states.size(); ++k) {
        if (rho_.states[k].size() != forward_->system_dim())
            throw std::invalid_argument("ProcessSpec: system state dimension does not match the evolution");
        if (!(rho_.weights[k] >= 0.0)) throw std::invalid_argument("ProcessSpec: negative ensemble weight");
        double n = 0.0;
        for (const auto& x : rho_.states[k]) n += std::norm(x);
        if (std::abs(n - 1.0) > 1e-10) throw std::invalid_argument("ProcessSpec: ensemble state not normalized");
        wsum += rho_.weights[k];
    }
    if (std::abs(wsum - 1.0) > 1e-10) throw std::invalid_argument("ProcessSpec: ensemble weights do not sum to 1");
    layout_ = target_register_layout(forward_->probe_dim(), forward_->system_dim(), target_);
    const double defect = unitarity_defect(*forward_);
    if (defect > 1e-10) {
        std::ostringstream os;
        os << "ProcessSpec: forward evolution is not unitary (defect " << defect << ")";
        throw std::invalid_argument(os.str());
    }
}

ProcessSpec::ProcessSpec(std::shared_ptr<const Evolution> forward, const DensityMatrix& rho_s, ButterflyTarget target)
    : ProcessSpec(std::move(forward), StateEnsemble::from_density(rho_s), target) {}

std::size_t ProcessSpec::target_dim() const { return layout_.dim_of("target"); }

// ---------------------------------------------------------------------------
// Helpers

namespace {

// Index arithmetic for splitting one factor out of a flat register index.
struct FactorSplit {
    std::size_t stride;
    std::size_t dim;
    std::size_t total;

    FactorSplit(const SubsystemLayout& layout, const std::string& label)
        : stride(layout.strides()[layout.index_of(label)]), dim(layout.dim_of(label)), total(layout.total_dim()) {}

    std::size_t rest_dim() const { return total / dim; }
    std::size_t digit(std::size_t i) const { return (i / stride) % dim; }
    std::size_t rest(std::size_t i) const { return (i / (stride * dim)) * stride + i % stride; }
    std::size_t join(std::size_t d, std::size_t r) const { return (r / stride) * stride * dim + d * stride + r % stride; }
};

void check_square(const Instrument& x, std::size_t d, const char* what) {
    if (x.dim_in() != d || x.dim_out() != d) {
        std::ostringstream os;
        os << what << " instrument must act on dimension " << d << " (got " << x.dim_out() << "x" << x.dim_in() << ")";
        throw std::invalid_argument(os.str());
    }
}

// U M and M U† via the evolution's vector action.
ComplexMatrix left_apply(const ComplexMatrix& m, const Evolution& e, bool adjoint) {
    const std::size_t d = m.rows();
    ComplexMatrix out(d, m.cols());
    std::vector<cd> col(d);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        for (std::size_t i = 0; i < d; ++i) col[i] = m(i, j);
        adjoint ? e.backward(col) : e.forward(col);
        for (std::size_t i = 0; i < d; ++i) out(i, j) = col[i];
    }
    return out;
}

ComplexMatrix conjugate_by(const ComplexMatrix& m, const Evolution& e, bool adjoint) {
    // U m U† = (U (U m)†)†
    return left_apply(left_apply(m, e, adjoint).adjoint(), e, adjoint).adjoint();
}

ComplexMatrix apply_instrument_on(const Instrument& x, const ComplexMatrix& m, const SubsystemLayout& layout,
                                  const std::string& label) {
    const std::vector<std::string> t{label};
    ComplexMatrix out(m.rows(), m.cols());
    for (const auto& [l, r] : x.pairs()) out += embed_operator(l, layout, t) * m * embed_operator(r, layout, t).adjoint();
    return out;
}

ComplexMatrix prepared_probe(const Instrument& a, const std::optional<ComplexMatrix>& rho_p, std::size_t dp) {
    ComplexMatrix rp = rho_p ? *rho_p : ComplexMatrix::identity(dp) * cd(1.0 / static_cast<double>(dp));
    if (rp.rows() != dp || rp.cols() != dp) throw std::invalid_argument("probe input state has the wrong dimension");
    return a.apply(rp);
}

// sum_k R_k† L_k, so that tr(C[sigma]) = tr(gamma sigma)
ComplexMatrix measurement_effect(const Instrument& c) {
    ComplexMatrix g(c.dim_in(), c.dim_in());
    for (const auto& [l, r] : c.pairs()) g += r.adjoint() * l;
    return g;
}

// Butterfly Choi reordered to (input, output) and transposed.
ComplexMatrix butterfly_kernel(const Instrument& b) {
    const std::size_t d = b.dim_in();
    ComplexMatrix m(d * d, d * d);
    for (const auto& [l, r] : b.pairs())
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t o = 0; o < d; ++o)
                for (std::size_t i2 = 0; i2 < d; ++i2)
                    for (std::size_t o2 = 0; o2 < d; ++o2) m(i * d + o, i2 * d + o2) += l(o2, i2) * std::conj(r(o, i));
    return m;
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return (m + m.adjoint()) * cd(0.5); }

DensityMatrix checked_state(const ComplexMatrix& m, SubsystemLayout layout, const char* what) {
    try {
        return DensityMatrix(m, std::move(layout));
    } catch (const std::invalid_argument& e) {
        throw NumericalError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Direct composition

cd compose_direct(const ProcessSpec& process, const Instrument& a, const Instrument& b, const Instrument& c,
                  const std::optional<ComplexMatrix>& rho_p) {
    const std::size_t dp = process.probe_dim(), ds = process.system_dim();
    check_square(a, dp, "preparation");
    check_square(b, process.target_dim(), "butterfly");
    check_square(c, dp, "measurement");

    const SubsystemLayout ps({dp, ds}, {"P", "S"});
    ComplexMatrix rp = rho_p ? *rho_p : ComplexMatrix::identity(dp) * cd(1.0 / static_cast<double>(dp));
    if (rp.rows() != dp || rp.cols() != dp) throw std::invalid_argument("probe input state has the wrong dimension");
    ComplexMatrix x = kron(rp, process.rho_s().density());
    x = apply_instrument_on(a, x, ps, "P");
    x = conjugate_by(x, process.evolution(), false);
    x = apply_instrument_on(b, x, process.register_layout(), "target");
    x = conjugate_by(x, process.evolution(), true);
    return apply_instrument_on(c, x, ps, "P").trace();
}

cd otoc_direct(const ComplexMatrix& u, const DensityMatrix& rho, const ComplexMatrix& v, const ComplexMatrix& w) {
    const std::size_t d = rho.dim();
    for (const auto* m : {&u, &v, &w})
        if (m->rows() != d || m->cols() != d) throw std::invalid_argument("otoc_direct: operator dimension mismatch");
    const ComplexMatrix wt = u.adjoint() * w * u;
    return (wt * v * wt.adjoint() * v.adjoint() * rho.matrix()).trace();
}

// ---------------------------------------------------------------------------
// Choi state

OtomChoi build_otom_choi(const ProcessSpec& process) {
    const auto& e = process.evolution();
    const std::size_t dp = process.probe_dim(), ds = process.system_dim(), dt = process.target_dim();
    const std::size_t d = dp * ds;
    const FactorSplit tsplit(process.register_layout(), "target");
    const auto& ens = process.rho_s();
    const std::size_t nk = ens.states.size();

    // Row (j, tau, t, c) of Y holds sqrt(w_k / (dp dt)) y_{j tau t}^k[c, S] at column (k, S).
    const std::size_t nrow = dp * dt * dt * dp;
    ComplexMatrix y(nrow, nk * ds);
    std::vector<cd> x(d), z(d);
    for (std::size_t k = 0; k < nk; ++k) {
        const double scale = std::sqrt(ens.weights[k] / static_cast<double>(dp * dt));
        for (std::size_t j = 0; j < dp; ++j) {
            std::fill(x.begin(), x.end(), cd{});
            for (std::size_t s = 0; s < ds; ++s) x[j * ds + s] = ens.states[k][s];
            e.forward(x);
            for (std::size_t tau = 0; tau < dt; ++tau)
                for (std::size_t t = 0; t < dt; ++t) {
                    // target digit tau moves to R1, R2's partner digit t takes its place
                    std::fill(z.begin(), z.end(), cd{});
                    for (std::size_t r = 0; r < tsplit.rest_dim(); ++r) z[tsplit.join(t, r)] = x[tsplit.join(tau, r)];
                    e.backward(z);
                    for (std::size_t c = 0; c < dp; ++c) {
                        const std::size_t row = ((j * dt + tau) * dt + t) * dp + c;
                        for (std::size_t s = 0; s < ds; ++s) y(row, k * ds + s) = scale * z[c * ds + s];
                    }
                }
        }
    }
    ComplexMatrix ups(nrow, nrow);
    for (std::size_t a = 0; a < nrow; ++a) {
        const auto ra = y.row(a);
        for (std::size_t b = a; b < nrow; ++b) {
            const auto rb = y.row(b);
            cd acc = 0.0;
            for (std::size_t q = 0; q < ra.size(); ++q) acc += ra[q] * std::conj(rb[q]);
            ups(a, b) = acc;
            ups(b, a) = std::conj(acc);
        }
        ups(a, a) = ups(a, a).real();
    }
    return {checked_state(ups, SubsystemLayout({dp, dt, dt, dp}, kOtomWires), "build_otom_choi")};
}

cd contract_choi(const OtomChoi& choi, const Instrument& a, const Instrument& b, const Instrument& c,
                 const std::optional<ComplexMatrix>& rho_p) {
    const std::size_t dp = choi.probe_dim(), dt = choi.target_dim();
    check_square(a, dp, "preparation");
    check_square(b, dt, "butterfly");
    check_square(c, dp, "measurement");
    const ComplexMatrix alpha = prepared_probe(a, rho_p, dp);
    const ComplexMatrix mb = butterfly_kernel(b);
    const ComplexMatrix gamma = measurement_effect(c);
    const auto& u = choi.state.matrix();
    const std::size_t nx = dt * dt;
    // d_P d_B tr[Y (alpha^T ⊗ M_B ⊗ gamma)]
    cd acc = 0.0;
    for (std::size_t j = 0; j < dp; ++j)
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t cc = 0; cc < dp; ++cc) {
                const auto row = u.row((j * nx + x) * dp + cc);
                for (std::size_t j2 = 0; j2 < dp; ++j2) {
                    const cd aj = alpha(j, j2);
                    if (aj == cd{}) continue;
                    for (std::size_t x2 = 0; x2 < nx; ++x2) {
                        const cd m = mb(x2, x);
                        if (m == cd{}) continue;
                        for (std::size_t c2 = 0; c2 < dp; ++c2) acc += row[(j2 * nx + x2) * dp + c2] * aj * m * gamma(c2, cc);
                    }
                }
            }
    return acc * static_cast<double>(dp * dt);
}

Instrument butterfly_instrument(const ButterflyParams& params) {
    if (!std::isfinite(params.phi)) throw std::invalid_argument("butterfly_instrument: phi must be finite");
    return Instrument::unitary(unitary_exp(pauli(3), params.phi));
}

ConditionalChoi conditional_choi(const OtomChoi& choi, const Instrument& b) {
    const std::size_t dp = choi.probe_dim(), dt = choi.target_dim();
    check_square(b, dt, "butterfly");
    const ComplexMatrix mb = butterfly_kernel(b);
    const auto& u = choi.state.matrix();
    const std::size_t nx = dt * dt;
    ComplexMatrix out(dp * dp, dp * dp);
    for (std::size_t j = 0; j < dp; ++j)
        for (std::size_t cc = 0; cc < dp; ++cc)
            for (std::size_t j2 = 0; j2 < dp; ++j2)
                for (std::size_t c2 = 0; c2 < dp; ++c2) {
                    cd acc = 0.0;
                    for (std::size_t x = 0; x < nx; ++x)
                        for (std::size_t x2 = 0; x2 < nx; ++x2)
                            acc += u((j * nx + x) * dp + cc, (j2 * nx + x2) * dp + c2) * mb(x2, x);
                    out(j * dp + cc, j2 * dp + c2) = acc * static_cast<double>(dt);
                }
    const cd tr = out.trace();
    if (std::abs(tr) < 1e-12)
        throw NumericalError("conditional_choi: contraction has zero trace (trace-annihilating butterfly)");
    out *= 1.0 / tr;
    return {checked_state(hermitian_part(out), SubsystemLayout({dp, dp}, {"a_i", "c_o"}), "conditional_choi"), tr};
}

// ---------------------------------------------------------------------------
// Closed form

AnalyticTerms analytic_terms_from_vectors(std::size_t dp, const StateEnsemble& rho_s,
                                          const std::vector<std::vector<std::vector<cd>>>& z) {
    const std::size_t ds = rho_s.dim();
    const std::size_t n = dp * dp;
    if (z.size() != rho_s.states.size()) throw std::invalid_argument("analytic terms: ensemble size mismatch");
    AnalyticTerms t{ComplexMatrix(n, n), ComplexMatrix(n, n), ComplexMatrix(n, n)};
    const double inv = 1.0 / static_cast<double>(dp);
    for (std::size_t j = 0; j < dp; ++j)
        for (std::size_t j2 = 0; j2 < dp; ++j2) t.psi_plus(j * dp + j, j2 * dp + j2) = inv;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double w = rho_s.weights[k] * inv;
        const auto& s = rho_s.states[k];
        if (z[k].size() != dp) throw std::invalid_argument("analytic terms: expected one vector per probe level");
        for (std::size_t j = 0; j < dp; ++j) {
            const auto& zj = z[k][j];
            if (zj.size() != dp * ds) throw std::invalid_argument("analytic terms: vector length mismatch");
            for (std::size_t c = 0; c < dp; ++c) {
                // cross: <j'|_P <s| on the right, nonzero only for c' = j'
                cd ov = 0.0;
                for (std::size_t q = 0; q < ds; ++q) ov += zj[c * ds + q] * std::conj(s[q]);
                for (std::size_t j2 = 0; j2 < dp; ++j2) t.cross(j * dp + c, j2 * dp + j2) += w * ov;
                for (std::size_t j2 = 0; j2 < dp; ++j2) {
                    const auto& zj2 = z[k][j2];
                    for (std::size_t c2 = 0; c2 < dp; ++c2) {
                        cd acc = 0.0;
                        for (std::size_t q = 0; q < ds; ++q) acc += zj[c * ds + q] * std::conj(zj2[c2 * ds + q]);
                        t.flipped(j * dp + c, j2 * dp + c2) += w * acc;
                    }
                }
            }
        }
    }
    return t;
}

AnalyticTerms analytic_terms(const ProcessSpec& process, ZConvention convention) {
    const auto& e = process.evolution();
    const std::size_t dp = process.probe_dim(), ds = process.system_dim();
    if (process.target_dim() != 2) throw std::invalid_argument("analytic conditional Choi needs a qubit target");
    const std::vector<std::string> target{"target"};
    const ComplexMatrix sz = pauli(3);
    const auto& ens = process.rho_s();
    std::vector<std::vector<std::vector<cd>>> z(ens.states.size());
    for (std::size_t k = 0; k < ens.states.size(); ++k) {
        for (std::size_t j = 0; j < dp; ++j) {
            std::vector<cd> v(dp * ds);
            for (std::size_t s = 0; s < ds; ++s) v[j * ds + s] = ens.states[k][s];
            if (convention == ZConvention::heisenberg) {
                e.forward(v);
                apply_local(v, process.register_layout(), sz, target);
                e.backward(v);
            } else {
                e.backward(v);
                apply_local(v, process.register_layout(), sz, target);
                e.forward(v);
            }
            z[k].push_back(std::move(v));
        }
    }
    return analytic_terms_from_vectors(dp, ens, z);
}

ComplexMatrix combine_analytic(const AnalyticTerms& t, double phi, double cross_sign) {
    const double c = std::cos(phi), s = std::sin(phi);
    return t.psi_plus * cd(c * c) + t.flipped * cd(s * s) + (t.cross - t.cross.adjoint()) * cd(0.0, cross_sign * c * s);
}

DensityMatrix conditional_choi_analytic_from_terms(const AnalyticTerms& terms, double phi) {
    const std::size_t dp = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(terms.psi_plus.rows()))));
    return checked_state(hermitian_part(combine_analytic(terms, phi)), SubsystemLayout({dp, dp}, {"a_i", "c_o"}),
                         "conditional_choi_analytic");
}

DensityMatrix conditional_choi_analytic(const ProcessSpec& process, double phi) {
    if (!std::isfinite(phi)) throw std::invalid_argument("conditional_choi_analytic: phi must be finite");
    return conditional_choi_analytic_from_terms(analytic_terms(process), phi);
}

}  // namespace otom
