#include "otom/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace otom {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

void ChoiAudit::include(const OtomChoi& choi) {
    const auto c = check_density(choi.state.matrix());
    hermitian_defect = std::max(hermitian_defect, c.hermitian_defect);
    trace_error = std::max(trace_error, c.trace_error);
    min_eigenvalue = checked == 0 ? c.min_eigenvalue : std::min(min_eigenvalue, c.min_eigenvalue);
    const std::vector<std::string> keep{"a_i"};
    const auto m = choi.state.marginal(keep).matrix();
    const auto want = ComplexMatrix::identity(m.rows()) * cd(1.0 / static_cast<double>(m.rows()));
    marginal_error = std::max(marginal_error, max_abs_diff(m, want));
    ++checked;
}

void ChoiAudit::merge(const ChoiAudit& o) {
    if (o.checked == 0) return;
    hermitian_defect = std::max(hermitian_defect, o.hermitian_defect);
    trace_error = std::max(trace_error, o.trace_error);
    min_eigenvalue = checked == 0 ? o.min_eigenvalue : std::min(min_eigenvalue, o.min_eigenvalue);
    marginal_error = std::max(marginal_error, o.marginal_error);
    checked += o.checked;
}

bool ChoiAudit::ok(double tol, double marginal_tol) const {
    return hermitian_defect <= tol && trace_error <= tol && min_eigenvalue >= -tol && marginal_error <= marginal_tol;
}

// ---------------------------------------------------------------------------

namespace {

Estimate estimate(std::span<const double> xs) {
    Estimate e;
    const double n = static_cast<double>(xs.size());
    e.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - e.mean) * (x - e.mean);
        e.stderr_mean = std::sqrt(ss / (n - 1) / n);
    }
    return e;
}

void check_finite_grid(std::span<const double> grid, const char* field) {
    for (double v : grid)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(field) + ": non-finite value");
    try {
        validate_phi_grid(grid);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(field) + ": " + e.what());
    }
}

}  // namespace

void HaarScalingConfig::validate() const {
    if (system_dims.empty()) throw std::invalid_argument("system_dims: must be non-empty");
    for (std::size_t i = 0; i < system_dims.size(); ++i) {
        if (system_dims[i] < 1) throw std::invalid_argument("system_dims: values must be >= 1");
        if (i > 0 && system_dims[i] <= system_dims[i - 1])
            throw std::invalid_argument("system_dims: must be strictly ascending");
    }
    if (system_dims.back() > 2048) throw std::invalid_argument("system_dims: values above 2048 are not supported");
    if (samples_per_dim < 1) throw std::invalid_argument("samples_per_dim: must be >= 1");
    check_finite_grid(phi_grid, "phi_grid");
}

HaarScalingResult run_haar_scaling(const HaarScalingConfig& cfg, const ExecutionOptions& exec) {
    cfg.validate();
    constexpr std::size_t kObs = kHaarObservables.size();
    const std::size_t per = cfg.samples_per_dim;
    const std::size_t items = cfg.system_dims.size() * per;
    std::vector<std::array<double, kObs>> values(items);
    std::vector<ChoiAudit> audits(items);
    const SeededRng root(cfg.seed);
    std::mutex progress_mu;
    std::size_t done = 0;

    parallel_for(items, exec.threads, [&](std::size_t item) {
        const std::size_t n = cfg.system_dims[item / per];
        const std::size_t sample = item % per;
        SeededRng rng = root.split((static_cast<std::uint64_t>(n) << 32) | sample);
        auto u = std::make_shared<DenseEvolution>(haar_unitary(2 * n, rng), 2);
        const StateEnsemble rho = cfg.rho_s == HaarInitialState::pure_zero ? StateEnsemble::basis_state(n, 0)
                                                                           : StateEnsemble::maximally_mixed(n);
        const ProcessSpec process(u, rho, ProbeTarget{});
        const OtomChoi choi = build_otom_choi(process);
        audits[item].include(choi);
        const auto rep = correlation_report(choi);
        const auto d = delta(process, cfg.phi_grid);
        values[item] = {rep.i_ai_bo, rep.i_bi_co, rep.i_nonmarkov, rep.cqmi_ai_co_given_b, rep.log_negativity,
                        d.delta};
        if (exec.progress) {
            std::lock_guard lock(progress_mu);
            ++done;
            std::ostringstream os;
            os << "haar N=" << n << " sample=" << sample << " (" << done << "/" << items << ")";
            exec.progress(os.str());
        }
    });

    HaarScalingResult out;
    for (std::size_t i = 0; i < cfg.system_dims.size(); ++i) {
        HaarScalingRow row;
        row.n = cfg.system_dims[i];
        row.samples = per;
        for (std::size_t o = 0; o < kObs; ++o) {
            std::vector<double> xs(per);
            for (std::size_t s = 0; s < per; ++s) xs[s] = values[i * per + s][o];
            row.observables[o] = estimate(xs);
        }
        out.rows.push_back(row);
    }
    for (const auto& a : audits) out.audit.merge(a);
    return out;
}

// ---------------------------------------------------------------------------

void QkrDeltaConfig::validate() const {
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("params: ") + e.what());
    }
    if (kicks_max < 1) throw std::invalid_argument("kicks_max: must be >= 1");
    if (targets.empty()) throw std::invalid_argument("targets: must be non-empty");
    for (const auto& t : targets) {
        try {
            target_register_layout(2, params.rotor_dim(), t);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("targets: ") + e.what());
        }
    }
    check_finite_grid(phi_grid, "phi_grid");
    if (smoothing_window < 1 || smoothing_window % 2 == 0)
        throw std::invalid_argument("smoothing_window: must be odd and >= 1");
    if (smoothing_window > kicks_max) throw std::invalid_argument("smoothing_window: must not exceed kicks_max");
}

namespace {

// Sign flip of sigma_z on the target factor, register order (spin, rotor).
void apply_target_z(std::span<cd> psi, std::size_t rotor_dim, const ButterflyTarget& target) {
    if (std::holds_alternative<ProbeTarget>(target)) {
        for (std::size_t r = 0; r < rotor_dim; ++r) psi[rotor_dim + r] = -psi[rotor_dim + r];
        return;
    }
    const std::size_t bit = std::get<SystemQubitTarget>(target).bit;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t r = 0; r < rotor_dim; ++r)
            if ((r >> bit) & 1U) psi[s * rotor_dim + r] = -psi[s * rotor_dim + r];
}

}  // namespace

std::vector<QkrDeltaSeries> run_qkr_delta(const QkrDeltaConfig& cfg, const ExecutionOptions& exec) {
    cfg.validate();
    const auto f = std::make_shared<const FloquetOperator>(cfg.params);
    const std::size_t d = cfg.params.rotor_dim();
    const std::size_t big_t = cfg.kicks_max;
    const SubsystemLayout layout({2, d}, {"spin", "rotor"});
    const std::size_t m0 = momentum_index(cfg.params, 0);

    std::vector<cd> start(d, 0.0);
    start[m0] = 1.0;
    const StateEnsemble rho = StateEnsemble::pure(start);

    // forward[t][j] = U^t |j>_spin |m=0>
    std::vector<std::array<std::vector<cd>, 2>> forward(big_t + 1);
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<cd> v(2 * d, 0.0);
        v[j * d + m0] = 1.0;
        forward[0][j] = v;
        for (std::size_t t = 1; t <= big_t; ++t) {
            f->apply(v, layout, KickDirection::forward);
            forward[t][j] = v;
        }
    }

    const std::size_t nt = cfg.targets.size();
    std::vector<std::vector<double>> raw(nt, std::vector<double>(big_t));
    std::mutex progress_mu;
    std::size_t done = 0;
    // largest t first so the long backward sweeps start early
    parallel_for(nt * big_t, exec.threads, [&](std::size_t item) {
        const std::size_t ti = item % nt;
        const std::size_t t = big_t - item / nt;
        std::vector<std::vector<std::vector<cd>>> z(1, std::vector<std::vector<cd>>(2));
        for (std::size_t j = 0; j < 2; ++j) {
            auto v = forward[t][j];
            apply_target_z(v, d, cfg.targets[ti]);
            f->apply(v, layout, KickDirection::backward, t);
            z[0][j] = std::move(v);
        }
        raw[ti][t - 1] = delta_from_terms(analytic_terms_from_vectors(2, rho, z), cfg.phi_grid).delta;
        if (exec.progress) {
            std::lock_guard lock(progress_mu);
            ++done;
            std::ostringstream os;
            os << "qkr k=" << cfg.params.k << " target=" << target_name(cfg.targets[ti]) << " t=" << t << " ("
               << done << "/" << nt * big_t << ")";
            exec.progress(os.str());
        }
    });

    std::vector<QkrDeltaSeries> out;
    for (std::size_t ti = 0; ti < nt; ++ti)
        out.push_back({cfg.targets[ti], raw[ti], moving_average(raw[ti], cfg.smoothing_window)});
    return out;
}

ConvergenceReport check_truncation_convergence(const QkrDeltaConfig& cfg, double tolerance,
                                               const ExecutionOptions& exec) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance: must be positive");
    QkrDeltaConfig doubled = cfg;
    doubled.params.n_trunc *= 2;
    const auto a = run_qkr_delta(cfg, exec);
    const auto b = run_qkr_delta(doubled, exec);
    ConvergenceReport r;
    r.rotor_dim = cfg.params.rotor_dim();
    r.doubled_dim = doubled.params.rotor_dim();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t t = 0; t < a[i].delta_raw.size(); ++t)
            r.max_difference = std::max(r.max_difference, std::abs(a[i].delta_raw[t] - b[i].delta_raw[t]));
    r.converged = r.max_difference < tolerance;
    return r;
}

// ---------------------------------------------------------------------------

std::string fit_model_name(FitModel m) {
    return m == FitModel::power_law ? "power_law" : "plateau_stretched_exp";
}

FitResult fit_powerlaw(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_powerlaw: xs and ys differ in length");
    if (xs.size() < 3) throw std::invalid_argument("fit_powerlaw: need at least 3 points");
    const std::size_t n = xs.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !std::isfinite(xs[i])) throw std::invalid_argument("fit_powerlaw: xs must be positive");
        if (!(ys[i] > 0.0) || !std::isfinite(ys[i])) throw std::invalid_argument("fit_powerlaw: ys must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_powerlaw: xs must not all be equal");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (intercept + slope * lx[i]);
        ss += e * e;
    }
    FitResult r;
    r.model = FitModel::power_law;
    r.constants = {std::exp(intercept), -slope};
    r.residual = std::sqrt(ss / static_cast<double>(n));
    return r;
}

namespace {

struct StretchedFit {
    std::array<double, 3> p{};  // xi, delta, gamma
    double ss = std::numeric_limits<double>::infinity();
    bool converged = false;
};

double stretched_ss(std::span<const double> u, std::span<const double> ys, const std::array<double, 3>& p) {
    double ss = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double e = ys[i] - (p[0] + p[1] * std::exp(-p[2] * u[i]));
        ss += e * e;
    }
    return ss;
}

// Linear least squares for (xi, delta) at fixed gamma.
std::array<double, 3> linear_start(std::span<const double> u, std::span<const double> ys, double gamma) {
    double s1 = 0, se = 0, see = 0, sy = 0, sey = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double e = std::exp(-gamma * u[i]);
        s1 += 1;
        se += e;
        see += e * e;
        sy += ys[i];
        sey += e * ys[i];
    }
    const double det = s1 * see - se * se;
    if (std::abs(det) < 1e-14 * std::max(1.0, s1 * see)) return {sy / s1, 0.0, gamma};
    return {(see * sy - se * sey) / det, (s1 * sey - se * sy) / det, gamma};
}

bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& x) {
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-300) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 3; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return true;
}

StretchedFit levenberg_marquardt(std::span<const double> u, std::span<const double> ys, std::array<double, 3> p) {
    StretchedFit f;
    double lambda = 1e-3;
    double ss = stretched_ss(u, ys, p);
    const double scale = std::max(1e-300, std::inner_product(ys.begin(), ys.end(), ys.begin(), 0.0));
    for (int it = 0; it < 500; ++it) {
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double e = std::exp(-p[2] * u[i]);
            const std::array<double, 3> g{1.0, e, -p[1] * u[i] * e};
            const double r = ys[i] - (p[0] + p[1] * e);
            for (int a = 0; a < 3; ++a) {
                jtr[a] += g[a] * r;
                for (int b = 0; b < 3; ++b) jtj[a][b] += g[a] * g[b];
            }
        }
        double gnorm = 0.0;
        for (int a = 0; a < 3; ++a) gnorm = std::max(gnorm, std::abs(jtr[a]));
        if (ss <= 1e-30 * scale || gnorm <= 1e-15 * std::sqrt(scale)) {
            f.converged = true;
            break;
        }
        bool improved = false;
        for (int tries = 0; tries < 40 && !improved; ++tries) {
            auto a = jtj;
            for (int k = 0; k < 3; ++k) a[k][k] += lambda * std::max(jtj[k][k], 1e-12);
            std::array<double, 3> step{};
            if (!solve3(a, jtr, step)) {
                lambda *= 10;
                continue;
            }
            std::array<double, 3> q{p[0] + step[0], p[1] + step[1], std::max(0.0, p[2] + step[2])};
            const double sq = stretched_ss(u, ys, q);
            if (std::isfinite(sq) && sq < ss) {
                const double rel = (ss - sq) / std::max(ss, 1e-300);
                p = q;
                ss = sq;
                lambda = std::max(lambda / 10, 1e-12);
                improved = true;
                if (rel < 1e-15) f.converged = true;
            } else {
                lambda *= 10;
            }
        }
        if (!improved) {
            // no descent direction left at any damping: a stationary point
            f.converged = true;
            break;
        }
        if (f.converged) break;
    }
    f.p = p;
    f.ss = ss;
    return f;
}

}  // namespace

FitResult fit_plateau_stretched_exp(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_plateau_stretched_exp: xs and ys differ in length");
    if (xs.size() < 4) throw std::invalid_argument("fit_plateau_stretched_exp: need at least 4 points");
    const std::size_t n = xs.size();
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] >= 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw std::invalid_argument("fit_plateau_stretched_exp: values must be finite with xs >= 0");
        u[i] = std::pow(xs[i], kStretchExponent);
    }
    std::vector<double> su = u;
    std::sort(su.begin(), su.end());
    const double u_mid = std::max(su[n / 2], 1e-12);

    StretchedFit best;
    double best_any = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 8; ++s) {
        const double gamma0 = std::pow(10.0, -2.0 + 3.0 * s / 7.0) / u_mid;
        const auto f = levenberg_marquardt(u, ys, linear_start(u, ys, gamma0));
        best_any = std::min(best_any, f.ss);
        if (f.converged && f.ss < best.ss) best = f;
    }
    if (!best.converged)
        throw FitError("fit_plateau_stretched_exp: no start converged", std::sqrt(best_any / static_cast<double>(n)));

    FitResult r;
    r.model = FitModel::plateau_stretched_exp;
    r.constants = {best.p[0], best.p[1], best.p[2]};
    r.residual = std::sqrt(best.ss / static_cast<double>(n));
    const double yscale = std::max({1.0, std::abs(best.p[0]), std::abs(best.p[1])});
    double spread = 0.0;
    for (double v : u) spread = std::max(spread, std::abs(std::exp(-best.p[2] * v) - std::exp(-best.p[2] * u[0])));
    r.identifiable = std::abs(best.p[1]) > 1e-9 * yscale && spread > 1e-9;
    if (!r.identifiable) {
        const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
        if (std::abs(best.p[1]) <= 1e-9 * yscale) r.constants[0] = mean;
    }
    return r;
}

std::vector<double> moving_average(std::span<const double> ys, std::size_t window) {
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("moving_average: window must be odd and >= 1");
    if (window > ys.size()) throw std::invalid_argument("moving_average: window exceeds series length");
    const std::size_t h = window / 2;
    const std::size_t n = ys.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= h ? i - h : 0;
        const std::size_t hi = std::min(n - 1, i + h);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += ys[j];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

}  // namespace otom
