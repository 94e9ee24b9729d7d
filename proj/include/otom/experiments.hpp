#pragma once

// Numerical studies built on the OTOM: Haar-random scaling of the Choi-state
// correlations, Delta(t) for the spin-coupled kicked rotor, and the curve
// fits and smoothing applied to their outputs.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "otom/infotheory.hpp"
#include "otom/kicked_rotor.hpp"
#include "otom/otom.hpp"

namespace otom {

// ---------------------------------------------------------------------------
// Execution

/// Worker count and an optional progress sink. The sink is called from worker
/// threads but never concurrently.
struct ExecutionOptions {
    std::size_t threads = 1;
    std::function<void(const std::string&)> progress;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers pulling indices from
/// a shared counter. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Choi-state audit

struct ChoiAudit {
    std::size_t checked = 0;
    double hermitian_defect = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
    double marginal_error = 0.0;  // max |rho_{a_i} - I/d| entry

    void include(const OtomChoi& choi);
    void merge(const ChoiAudit& other);
    bool ok(double tol = 1e-10, double marginal_tol = 1e-12) const;
};

// ---------------------------------------------------------------------------
// Haar scaling

enum class HaarInitialState { pure_zero, maximally_mixed };

struct HaarScalingConfig {
    std::vector<std::size_t> system_dims{2, 4, 8, 16, 32, 64, 128, 256};
    std::size_t samples_per_dim = 50;
    std::uint64_t seed = 1;
    std::vector<double> phi_grid = default_phi_grid();
    HaarInitialState rho_s = HaarInitialState::pure_zero;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

inline constexpr std::array<const char*, 6> kHaarObservables{
    "I_ai_bo", "I_bi_co", "I_aibo_bico", "I_ai_co_given_bobi", "log_negativity", "delta"};

struct Estimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

struct HaarScalingRow {
    std::size_t n = 0;
    std::size_t samples = 0;
    std::array<Estimate, kHaarObservables.size()> observables{};
};

struct HaarScalingResult {
    std::vector<HaarScalingRow> rows;
    ChoiAudit audit;
};

/// One Haar unitary on the 2N-dimensional probe ⊗ system register per sample,
/// probe-side butterfly. Sample (N, s) draws from its own stream, so results
/// do not depend on the worker count.
HaarScalingResult run_haar_scaling(const HaarScalingConfig& cfg, const ExecutionOptions& exec = {});

// ---------------------------------------------------------------------------
// Kicked rotor Delta(t)

struct QkrDeltaConfig {
    QkrParams params;
    std::size_t kicks_max = 100;
    std::vector<ButterflyTarget> targets{ProbeTarget{}, SystemQubitTarget{0}};
    std::vector<double> phi_grid = default_phi_grid();
    std::size_t smoothing_window = 5;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct QkrDeltaSeries {
    ButterflyTarget target;
    std::vector<double> delta_raw;  // index t - 1
    std::vector<double> delta_smoothed;
};

/// Delta(t) for t = 1..kicks_max with the spin as the probe and the rotor
/// starting in |m = 0>.
std::vector<QkrDeltaSeries> run_qkr_delta(const QkrDeltaConfig& cfg, const ExecutionOptions& exec = {});

struct ConvergenceReport {
    std::size_t rotor_dim = 0;
    std::size_t doubled_dim = 0;
    double max_difference = 0.0;
    bool converged = false;
};

/// Reruns the configuration with 2N doubled and compares the raw series.
ConvergenceReport check_truncation_convergence(const QkrDeltaConfig& cfg, double tolerance = 1e-3,
                                               const ExecutionOptions& exec = {});

// ---------------------------------------------------------------------------
// Fits and smoothing

enum class FitModel { power_law, plateau_stretched_exp };

std::string fit_model_name(FitModel m);

struct FitResult {
    FitModel model = FitModel::power_law;
    std::vector<double> constants;  // (alpha, beta) or (xi, delta, gamma)
    double residual = 0.0;          // RMS
    bool identifiable = true;
};

/// Thrown when no start of a nonlinear fit converges.
class FitError : public NumericalError {
public:
    FitError(const std::string& what, double best_residual)
        : NumericalError(what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

/// y = alpha x^-beta by least squares on (log x, log y); residual in log space.
FitResult fit_powerlaw(std::span<const double> xs, std::span<const double> ys);

inline constexpr double kStretchExponent = 0.6;

/// y = xi + delta exp(-gamma x^0.6), gamma >= 0, Levenberg-Marquardt from 8
/// deterministic starts. gamma is flagged unidentifiable when delta vanishes.
FitResult fit_plateau_stretched_exp(std::span<const double> xs, std::span<const double> ys);

/// Centred moving average; near the ends the window is cut off by the series
/// boundary and the average runs over the points that remain.
std::vector<double> moving_average(std::span<const double> ys, std::size_t window);

}  // namespace otom
