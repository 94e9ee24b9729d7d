#include "otom/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "otom/experiments.hpp"
#include "otom/infotheory.hpp"
#include "otom/kicked_rotor.hpp"
#include "otom/otom.hpp"
#include "otom/selftest.hpp"

namespace otom {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// Validation failure tied to a flag; maps to exit code 2.
struct UsageError : std::invalid_argument {
    UsageError(const std::string& flag, const std::string& what) : std::invalid_argument(flag + ": " + what) {}
};

constexpr const char* kZConvention = "heisenberg (Z_t = U_t^dag sigma_z U_t)";
constexpr const char* kEntanglement = "log_negativity across (a_i b_o : b_i c_o), base 2";
constexpr const char* kButterfly = "B = exp(-i phi sigma_z) on the target";

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string short_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Options shared by every subcommand

struct Common {
    std::uint64_t seed = 1;
    std::size_t threads = std::max(1U, std::thread::hardware_concurrency());
    std::string out_dir = ".";
    std::string format = "csv";
    bool progress = false;
};

void add_common(CLI::App* sub, Common& c, bool with_format) {
    sub->add_option("--seed", c.seed, "RNG seed")->envname("OTOM_SEED")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads")->envname("OTOM_THREADS")->capture_default_str();
    sub->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
    if (with_format)
        sub->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_flag("--progress", c.progress, "Per-work-item progress lines on stderr");
}

ExecutionOptions exec_options(const Common& c, std::ostream& err) {
    ExecutionOptions e;
    e.threads = c.threads;
    if (c.progress) e.progress = [&err](const std::string& line) { err << line << '\n' << std::flush; };
    return e;
}

void validate_common(const Common& c) {
    if (c.threads < 1) throw UsageError("--threads", "must be >= 1");
}

void prepare_out_dir(const Common& c) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec || !fs::is_directory(c.out_dir)) throw UsageError("--out-dir", "cannot create directory " + c.out_dir);
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<double> phi_grid_from(const std::vector<double>& flag) {
    std::vector<double> g = flag.empty() ? default_phi_grid() : flag;
    for (double& v : g)
        if (!std::isfinite(v)) throw UsageError("--phi-grid", "values must be finite");
    try {
        validate_phi_grid(g);
    } catch (const std::invalid_argument& e) {
        throw UsageError("--phi-grid", e.what());
    }
    return g;
}

ButterflyTarget parse_target(const std::string& name, std::size_t bit) {
    if (name == "probe") return ProbeTarget{};
    return SystemQubitTarget{bit};
}

void check_target(const ButterflyTarget& t, std::size_t system_dim) {
    if (std::holds_alternative<ProbeTarget>(t)) return;
    if (!is_power_of_two(system_dim)) throw UsageError("--dim", "a system target needs a power-of-two dimension");
    try {
        target_register_layout(2, system_dim, t);
    } catch (const std::invalid_argument& e) {
        throw UsageError("--system-bit", e.what());
    }
}

std::string target_file_tag(const ButterflyTarget& t) {
    return std::holds_alternative<ProbeTarget>(t) ? "probe" : "system";
}

QkrParams qkr_params(double k, std::size_t dim, double hbar, const std::vector<double>& v) {
    if (!std::isfinite(k)) throw UsageError("--k", "must be finite");
    if (dim < 8 || dim % 2 != 0) throw UsageError("--dim", "must be even and >= 8");
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw UsageError("--hbar", "must be positive");
    if (v.size() != 3) throw UsageError("--v", "expected three comma-separated values v1,v2,v3");
    for (double x : v)
        if (!std::isfinite(x)) throw UsageError("--v", "values must be finite");
    QkrParams p;
    p.k = k;
    p.n_trunc = dim / 2;
    p.hbar_eff = hbar;
    p.v1 = v[0];
    p.v2 = v[1];
    p.v3 = v[2];
    return p;
}

ojson qkr_params_json(const QkrParams& p) {
    return ojson{{"k", p.k}, {"hbar_eff", p.hbar_eff}, {"rotor_dim", p.rotor_dim()}, {"v", {p.v1, p.v2, p.v3}}};
}

ojson complex_matrix_json(const ComplexMatrix& m) {
    ojson rows = ojson::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string metadata_comment(const ojson& meta) { return "# " + meta.dump() + "\n"; }

// ---------------------------------------------------------------------------
// haar

struct HaarOpts {
    std::vector<std::size_t> dims{2, 4, 8, 16, 32, 64, 128, 256};
    std::size_t samples = 50;
    std::string rho_s = "pure";
    std::vector<double> phi_grid;
};

ojson fit_json(const std::string& observable, FitModel model, const std::vector<double>& xs,
               const std::vector<double>& ys) {
    ojson j{{"observable", observable}, {"model", fit_model_name(model)}};
    try {
        if (model == FitModel::power_law) {
            const auto f = fit_powerlaw(xs, ys);
            j["constants"] = {{"alpha", f.constants[0]}, {"beta", f.constants[1]}};
            j["residual"] = f.residual;
            j["residual_space"] = "log";
        } else {
            const auto f = fit_plateau_stretched_exp(xs, ys);
            j["constants"] = {{"xi", f.constants[0]}, {"delta", f.constants[1]}, {"gamma", f.constants[2]}};
            j["exponent"] = kStretchExponent;
            j["residual"] = f.residual;
            j["identifiable"] = f.identifiable;
        }
    } catch (const FitError& e) {
        j["error"] = e.what();
        j["best_residual"] = e.best_residual();
    } catch (const std::invalid_argument& e) {
        j["error"] = e.what();
    }
    return j;
}

int cmd_haar(const Common& c, const HaarOpts& o, std::ostream& out, std::ostream& err) {
    validate_common(c);
    if (o.samples < 1) throw UsageError("--samples", "must be >= 1");
    if (o.dims.empty()) throw UsageError("--dims", "must list at least one dimension");
    for (std::size_t i = 0; i < o.dims.size(); ++i) {
        if (o.dims[i] < 1 || o.dims[i] > 2048) throw UsageError("--dims", "values must lie in [1, 2048]");
        if (i > 0 && o.dims[i] <= o.dims[i - 1]) throw UsageError("--dims", "must be strictly ascending");
    }
    HaarScalingConfig cfg;
    cfg.system_dims = o.dims;
    cfg.samples_per_dim = o.samples;
    cfg.seed = c.seed;
    cfg.phi_grid = phi_grid_from(o.phi_grid);
    cfg.rho_s = o.rho_s == "mixed" ? HaarInitialState::maximally_mixed : HaarInitialState::pure_zero;

    prepare_out_dir(c);
    const auto result = run_haar_scaling(cfg, exec_options(c, err));
    if (!result.audit.ok())
        throw NumericalError("OTOM Choi audit failed: min eigenvalue " + num(result.audit.min_eigenvalue) +
                             ", marginal error " + num(result.audit.marginal_error));

    ojson meta{{"artifact", kArtifactVersion},
               {"command", "haar"},
               {"seed", c.seed},
               {"dims", o.dims},
               {"samples", o.samples},
               {"rho_s", o.rho_s == "mixed" ? "maximally_mixed" : "pure |0>"},
               {"probe_dim", 2},
               {"target", "probe"},
               {"phi_grid", cfg.phi_grid},
               {"log_base", 2},
               {"z_convention", kZConvention},
               {"butterfly", kButterfly},
               {"entanglement", kEntanglement},
               {"cqmi", "I(a_i:c_o | b_o b_i)"},
               {"choi_audit",
                {{"checked", result.audit.checked},
                 {"hermitian_defect", result.audit.hermitian_defect},
                 {"trace_error", result.audit.trace_error},
                 {"min_eigenvalue", result.audit.min_eigenvalue},
                 {"a_i_marginal_error", result.audit.marginal_error}}}};

    const fs::path dir(c.out_dir);
    fs::path table;
    if (c.format == "csv") {
        std::ostringstream os;
        os << metadata_comment(meta) << "N,observable,mean,stderr,samples\n";
        for (const auto& row : result.rows)
            for (std::size_t k = 0; k < kHaarObservables.size(); ++k)
                os << row.n << ',' << kHaarObservables[k] << ',' << num(row.observables[k].mean) << ','
                   << num(row.observables[k].stderr_mean) << ',' << row.samples << '\n';
        table = dir / "haar_scaling.csv";
        write_atomic(table, os.str());
    } else {
        ojson rows = ojson::array();
        for (const auto& row : result.rows)
            for (std::size_t k = 0; k < kHaarObservables.size(); ++k)
                rows.push_back({{"N", row.n},
                                {"observable", kHaarObservables[k]},
                                {"mean", row.observables[k].mean},
                                {"stderr", row.observables[k].stderr_mean},
                                {"samples", row.samples}});
        table = dir / "haar_scaling.json";
        write_atomic(table, ojson{{"metadata", meta}, {"rows", rows}}.dump(2) + "\n");
    }

    std::vector<double> xs;
    for (const auto& row : result.rows) xs.push_back(static_cast<double>(row.n));
    auto series = [&](const std::string& name) {
        std::vector<double> ys;
        std::size_t k = 0;
        while (name != kHaarObservables[k]) ++k;
        for (const auto& row : result.rows) ys.push_back(row.observables[k].mean);
        return ys;
    };
    ojson fits = ojson::array();
    for (const char* name : {"I_ai_bo", "I_bi_co"}) fits.push_back(fit_json(name, FitModel::power_law, xs, series(name)));
    for (const char* name : {"I_aibo_bico", "I_ai_co_given_bobi", "log_negativity"})
        fits.push_back(fit_json(name, FitModel::plateau_stretched_exp, xs, series(name)));
    const fs::path fit_path = dir / "haar_fits.json";
    write_atomic(fit_path, ojson{{"metadata", meta}, {"fits", fits}}.dump(2) + "\n");

    out << "wrote " << table.string() << '\n' << "wrote " << fit_path.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// qkr

struct QkrOpts {
    std::vector<double> k{0.1, 1.0, 5.0};
    std::size_t kicks = 100;
    std::size_t dim = 256;
    double hbar = 1.0;
    std::vector<double> v{0.1, 0.2, 0.3};
    std::vector<std::string> targets{"probe", "system"};
    std::size_t system_bit = 0;
    std::size_t window = 5;
    std::vector<double> phi_grid;
    bool check_convergence = false;
    double convergence_tol = 1e-3;
};

int cmd_qkr(const Common& c, const QkrOpts& o, std::ostream& out, std::ostream& err) {
    validate_common(c);
    if (o.k.empty()) throw UsageError("--k", "must list at least one value");
    if (o.kicks < 1) throw UsageError("--kicks", "must be >= 1");
    if (o.window < 1 || o.window % 2 == 0) throw UsageError("--window", "must be odd and >= 1");
    if (o.window > o.kicks) throw UsageError("--window", "must not exceed --kicks");
    if (o.targets.empty()) throw UsageError("--targets", "must list at least one target");
    if (!(o.convergence_tol > 0.0)) throw UsageError("--convergence-tol", "must be positive");
    std::vector<ButterflyTarget> targets;
    for (const auto& t : o.targets) targets.push_back(parse_target(t, o.system_bit));
    std::vector<QkrDeltaConfig> cfgs;
    for (double k : o.k) {
        QkrDeltaConfig cfg;
        cfg.params = qkr_params(k, o.dim, o.hbar, o.v);
        cfg.kicks_max = o.kicks;
        cfg.targets = targets;
        cfg.phi_grid = phi_grid_from(o.phi_grid);
        cfg.smoothing_window = o.window;
        for (const auto& t : targets) check_target(t, cfg.params.rotor_dim());
        cfgs.push_back(cfg);
    }

    prepare_out_dir(c);
    const auto exec = exec_options(c, err);
    const fs::path dir(c.out_dir);
    for (const auto& cfg : cfgs) {
        const auto series = run_qkr_delta(cfg, exec);
        for (const auto& s : series) {
            ojson meta{{"artifact", kArtifactVersion},
                       {"command", "qkr"},
                       {"params", qkr_params_json(cfg.params)},
                       {"kicks", cfg.kicks_max},
                       {"target", target_name(s.target)},
                       {"probe", "spin"},
                       {"rho_s", "rotor momentum eigenstate |m=0>"},
                       {"phi_grid", cfg.phi_grid},
                       {"smoothing", "centred moving average, window " + std::to_string(cfg.smoothing_window) +
                                         ", truncated at the ends"},
                       {"log_base", 2},
                       {"z_convention", kZConvention},
                       {"butterfly", kButterfly}};
            const std::string stem = "qkr_delta_k" + short_num(cfg.params.k) + "_" + target_file_tag(s.target);
            fs::path path;
            if (c.format == "csv") {
                std::ostringstream os;
                os << metadata_comment(meta) << "t,delta_raw,delta_smoothed\n";
                for (std::size_t t = 0; t < s.delta_raw.size(); ++t)
                    os << t + 1 << ',' << num(s.delta_raw[t]) << ',' << num(s.delta_smoothed[t]) << '\n';
                path = dir / (stem + ".csv");
                write_atomic(path, os.str());
            } else {
                ojson rows = ojson::array();
                for (std::size_t t = 0; t < s.delta_raw.size(); ++t)
                    rows.push_back({{"t", t + 1}, {"delta_raw", s.delta_raw[t]}, {"delta_smoothed", s.delta_smoothed[t]}});
                path = dir / (stem + ".json");
                write_atomic(path, ojson{{"metadata", meta}, {"rows", rows}}.dump(2) + "\n");
            }
            out << "wrote " << path.string() << '\n';
        }
        if (o.check_convergence) {
            const auto r = check_truncation_convergence(cfg, o.convergence_tol, exec);
            const fs::path path = dir / ("qkr_convergence_k" + short_num(cfg.params.k) + ".json");
            ojson j{{"metadata",
                     {{"artifact", kArtifactVersion}, {"command", "qkr"}, {"params", qkr_params_json(cfg.params)}}},
                    {"rotor_dim", r.rotor_dim},
                    {"doubled_dim", r.doubled_dim},
                    {"kicks", cfg.kicks_max},
                    {"max_difference", r.max_difference},
                    {"tolerance", o.convergence_tol},
                    {"converged", r.converged}};
            write_atomic(path, j.dump(2) + "\n");
            out << "wrote " << path.string() << (r.converged ? " (converged)" : " (NOT converged)") << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// chirikov

struct ChirikovOpts {
    std::vector<double> k{0.1, 1.0, 5.0};
    std::string grid = "16x16";
    std::size_t iters = 500;
};

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument("");
        std::size_t used1 = 0, used2 = 0;
        const long a = std::stol(s.substr(0, x), &used1);
        const long b = std::stol(s.substr(x + 1), &used2);
        if (used1 != x || used2 != s.size() - x - 1 || a < 1 || b < 1) throw std::invalid_argument("");
        return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
    } catch (const std::exception&) {
        throw UsageError("--grid", "expected <n_theta>x<n_p> with positive integers, got '" + s + "'");
    }
}

int cmd_chirikov(const Common& c, const ChirikovOpts& o, std::ostream& out) {
    validate_common(c);
    if (o.k.empty()) throw UsageError("--k", "must list at least one value");
    for (double k : o.k)
        if (!std::isfinite(k)) throw UsageError("--k", "must be finite");
    if (o.iters < 1) throw UsageError("--iters", "must be >= 1");
    const auto [nt, np] = parse_grid(o.grid);
    prepare_out_dir(c);
    const auto grid = chirikov_grid(nt, np);
    const fs::path dir(c.out_dir);
    for (double k : o.k) {
        const auto orbits = chirikov_portrait(k, grid, o.iters);
        std::size_t regular = 0;
        for (const auto& orbit : orbits)
            if (orbit_momentum_spread(orbit) < 0.2) ++regular;
        ojson meta{{"artifact", kArtifactVersion},
                   {"command", "chirikov"},
                   {"k", k},
                   {"grid", o.grid},
                   {"grid_layout", "cell-centred, theta-major"},
                   {"iterations", o.iters},
                   {"map", "p' = p + k sin(theta), theta' = theta + p', both mod 2 pi"}};
        const std::string stem = "chirikov_k" + short_num(k);
        fs::path path;
        if (c.format == "csv") {
            std::ostringstream os;
            os << metadata_comment(meta) << "orbit_id,n,theta,p\n";
            for (std::size_t id = 0; id < orbits.size(); ++id)
                for (std::size_t n = 0; n < orbits[id].size(); ++n)
                    os << id << ',' << n + 1 << ',' << num(orbits[id][n].theta) << ',' << num(orbits[id][n].p) << '\n';
            path = dir / (stem + ".csv");
            write_atomic(path, os.str());
        } else {
            ojson js = ojson::array();
            for (std::size_t id = 0; id < orbits.size(); ++id) {
                ojson pts = ojson::array();
                for (const auto& s : orbits[id]) pts.push_back({s.theta, s.p});
                js.push_back({{"orbit_id", id}, {"initial", {grid[id].theta, grid[id].p}}, {"points", pts}});
            }
            path = dir / (stem + ".json");
            write_atomic(path, ojson{{"metadata", meta}, {"orbits", js}}.dump() + "\n");
        }
        out << "wrote " << path.string() << "  (orbits with p spread < 0.2: " << regular << "/" << orbits.size()
            << ")\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// choi

struct ChoiOpts {
    std::string process = "haar";
    std::size_t dim = 0;  // 0: per-process default
    std::string rho_s = "pure";
    std::size_t kicks = 1;
    double k = 1.0;
    double hbar = 1.0;
    std::vector<double> v{0.1, 0.2, 0.3};
    std::string target = "probe";
    std::size_t system_bit = 0;
    std::optional<double> phi;
};

int cmd_choi(const Common& c, const ChoiOpts& o, std::ostream& out) {
    validate_common(c);
    if (o.phi && !std::isfinite(*o.phi)) throw UsageError("--phi", "must be finite");
    const ButterflyTarget target = parse_target(o.target, o.system_bit);
    std::shared_ptr<const Evolution> evo;
    StateEnsemble rho;
    ojson params{{"process", o.process}};
    if (o.process == "qkr") {
        const std::size_t dim = o.dim == 0 ? 64 : o.dim;
        if (dim > 2048) throw UsageError("--dim", "must be <= 2048");
        if (o.kicks < 1) throw UsageError("--kicks", "must be >= 1");
        const auto p = qkr_params(o.k, dim, o.hbar, o.v);
        evo = std::make_shared<KickedRotorEvolution>(std::make_shared<const FloquetOperator>(p), o.kicks);
        std::vector<cd> m0(dim, 0.0);
        m0[momentum_index(p, 0)] = 1.0;
        rho = StateEnsemble::pure(m0);
        params["qkr"] = qkr_params_json(p);
        params["kicks"] = o.kicks;
        params["probe"] = "spin";
        params["rho_s"] = "rotor momentum eigenstate |m=0>";
    } else {
        const std::size_t dim = o.dim == 0 ? 2 : o.dim;
        if (dim > 512) throw UsageError("--dim", "must be <= 512 for dense processes");
        if (o.process == "trivial") {
            evo = std::make_shared<DenseEvolution>(ComplexMatrix::identity(2 * dim), 2);
        } else {
            SeededRng rng = SeededRng(c.seed).split(dim);
            evo = std::make_shared<DenseEvolution>(haar_unitary(2 * dim, rng), 2);
            params["seed"] = c.seed;
        }
        rho = o.rho_s == "mixed" ? StateEnsemble::maximally_mixed(dim) : StateEnsemble::basis_state(dim, 0);
        params["system_dim"] = dim;
        params["rho_s"] = o.rho_s == "mixed" ? "maximally_mixed" : "pure |0>";
    }
    params["target"] = target_name(target);

    check_target(target, evo->system_dim());
    const ProcessSpec process(evo, rho, target);
    prepare_out_dir(c);
    const OtomChoi choi = build_otom_choi(process);

    ojson meta{{"artifact", kArtifactVersion},
               {"command", "choi"},
               {"parameters", params},
               {"z_convention", kZConvention},
               {"butterfly", kButterfly},
               {"index_order", "row-major, first wire most significant"}};
    ojson doc;
    fs::path path;
    if (o.phi) {
        const auto cond = conditional_choi(choi, butterfly_instrument({*o.phi, target}));
        meta["phi"] = *o.phi;
        meta["raw_trace"] = {cond.raw_trace.real(), cond.raw_trace.imag()};
        meta["normalization"] = "divided by raw_trace";
        doc = ojson{{"metadata", meta},
                    {"wires", {"a_i", "c_o"}},
                    {"dims", cond.state.layout().dims()},
                    {"matrix", complex_matrix_json(cond.state.matrix())}};
        path = fs::path(c.out_dir) / "conditional_choi.json";
    } else {
        doc = ojson{{"metadata", meta},
                    {"wires", kOtomWires},
                    {"dims", choi.state.layout().dims()},
                    {"matrix", complex_matrix_json(choi.state.matrix())}};
        path = fs::path(c.out_dir) / "otom_choi.json";
    }
    write_atomic(path, doc.dump() + "\n");
    out << "wrote " << path.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// check

int cmd_check(const std::string& file, std::ostream& out) {
    std::ifstream f(file);
    if (!f) throw UsageError("file", "cannot open " + file);
    ComplexMatrix m;
    try {
        const auto j = nlohmann::json::parse(f);
        const auto& rows = j.at("matrix");
        const std::size_t n = rows.size();
        if (n == 0) throw std::invalid_argument("empty matrix");
        m = ComplexMatrix(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != n) throw std::invalid_argument("matrix is not square");
            for (std::size_t k = 0; k < n; ++k)
                m(i, k) = cd(rows[i][k].at(0).get<double>(), rows[i][k].at(1).get<double>());
        }
    } catch (const std::exception& e) {
        throw UsageError("file", std::string("malformed matrix JSON: ") + e.what());
    }
    const auto chk = check_density(m);
    const bool ok = chk.hermitian_defect <= 1e-10 && chk.min_eigenvalue >= -1e-10 && chk.trace_error <= 1e-10;
    out << (ok ? "VALID" : "INVALID") << " dim=" << m.rows() << " hermitian_defect=" << num(chk.hermitian_defect)
        << " min_eigenvalue=" << num(chk.min_eigenvalue) << " trace_error=" << num(chk.trace_error) << '\n';
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// selftest

int cmd_selftest(const Common& c, std::ostream& out) {
    const auto checks = run_selftest(c.seed);
    bool all = true;
    for (const auto& ch : checks) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s %-36s worst=%.3e tol=%.1e", ch.passed ? "PASS" : "FAIL", ch.name.c_str(),
                      ch.worst, ch.tolerance);
        out << buf << '\n';
        all = all && ch.passed;
    }
    out << (all ? "selftest passed" : "selftest FAILED") << " (" << checks.size() << " checks, seed " << c.seed
        << ")\n";
    return all ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"OTOM chaos diagnostics: Haar scaling, kicked-rotor Delta(t), Chirikov portraits, Choi dumps"};
    app.set_config("--config", "", "TOML/INI file with option values, one [section] per subcommand");
    app.require_subcommand(1);
    app.set_version_flag("--version", kArtifactVersion);

    Common common;

    HaarOpts haar;
    auto* h = app.add_subcommand("haar", "Haar-random scaling of OTOM correlations");
    add_common(h, common, true);
    h->add_option("--dims", haar.dims, "System dimensions N")->delimiter(',')->capture_default_str();
    h->add_option("--samples", haar.samples, "Haar samples per N")->capture_default_str();
    h->add_option("--rho-s", haar.rho_s, "Initial system state")->check(CLI::IsMember({"pure", "mixed"}))->capture_default_str();
    h->add_option("--phi-grid", haar.phi_grid, "Butterfly angles (must include 0 and pi/2)")->delimiter(',');

    QkrOpts qkr;
    auto* q = app.add_subcommand("qkr", "Delta(t) for the spin-coupled kicked rotor");
    add_common(q, common, true);
    q->add_option("--k", qkr.k, "Kick strengths")->delimiter(',')->capture_default_str();
    q->add_option("--kicks", qkr.kicks, "Number of kicks T")->capture_default_str();
    q->add_option("--dim", qkr.dim, "Rotor dimension 2N")->capture_default_str();
    q->add_option("--hbar", qkr.hbar, "Effective Planck constant")->capture_default_str();
    q->add_option("--v", qkr.v, "Spin couplings v1,v2,v3")->delimiter(',')->capture_default_str();
    q->add_option("--targets", qkr.targets, "Butterfly targets")
        ->delimiter(',')
        ->check(CLI::IsMember({"probe", "system"}))
        ->capture_default_str();
    q->add_option("--system-bit", qkr.system_bit, "Rotor index bit hit by the system butterfly (0 = LSB)")
        ->capture_default_str();
    q->add_option("--window", qkr.window, "Moving-average window (odd)")->capture_default_str();
    q->add_option("--phi-grid", qkr.phi_grid, "Butterfly angles (must include 0 and pi/2)")->delimiter(',');
    q->add_flag("--check-convergence", qkr.check_convergence, "Rerun at doubled 2N and compare");
    q->add_option("--convergence-tol", qkr.convergence_tol, "Tolerance for --check-convergence")->capture_default_str();

    ChirikovOpts chi;
    auto* ch = app.add_subcommand("chirikov", "Classical standard-map phase portraits");
    add_common(ch, common, true);
    ch->add_option("--k", chi.k, "Kick strengths")->delimiter(',')->capture_default_str();
    ch->add_option("--grid", chi.grid, "Initial-condition grid n_theta x n_p")->capture_default_str();
    ch->add_option("--iters", chi.iters, "Iterations per orbit")->capture_default_str();

    ChoiOpts choi;
    auto* co = app.add_subcommand("choi", "Dump the OTOM or a conditional Choi state as JSON");
    add_common(co, common, false);
    co->add_option("--process", choi.process, "Process")
        ->check(CLI::IsMember({"trivial", "haar", "qkr"}))
        ->capture_default_str();
    co->add_option("--dim", choi.dim, "System dimension (rotor dimension 2N for qkr)");
    co->add_option("--rho-s", choi.rho_s, "Initial system state for dense processes")
        ->check(CLI::IsMember({"pure", "mixed"}))
        ->capture_default_str();
    co->add_option("--kicks", choi.kicks, "Kicks (qkr)")->capture_default_str();
    co->add_option("--k", choi.k, "Kick strength (qkr)")->capture_default_str();
    co->add_option("--hbar", choi.hbar, "Effective Planck constant (qkr)")->capture_default_str();
    co->add_option("--v", choi.v, "Spin couplings (qkr)")->delimiter(',')->capture_default_str();
    co->add_option("--target", choi.target, "Butterfly target")
        ->check(CLI::IsMember({"probe", "system"}))
        ->capture_default_str();
    co->add_option("--system-bit", choi.system_bit, "System index bit for --target system (0 = LSB)")
        ->capture_default_str();
    co->add_option("--phi", choi.phi, "Plug B = exp(-i phi sigma_z) in and emit the conditional state");

    std::string check_file;
    auto* ck = app.add_subcommand("check", "Validate a matrix JSON file as a density matrix");
    ck->add_option("file", check_file, "JSON file with a \"matrix\" field")->required();

    auto* st = app.add_subcommand("selftest", "Run the built-in invariant suite");
    st->add_option("--seed", common.seed, "RNG seed")->envname("OTOM_SEED")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (h->parsed()) return cmd_haar(common, haar, out, err);
        if (q->parsed()) return cmd_qkr(common, qkr, out, err);
        if (ch->parsed()) return cmd_chirikov(common, chi, out);
        if (co->parsed()) return cmd_choi(common, choi, out);
        if (ck->parsed()) return cmd_check(check_file, out);
        if (st->parsed()) return cmd_selftest(common, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace otom
