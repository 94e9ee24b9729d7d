#pragma once

// Spin-1/2 coupled quantum kicked rotor and the classical standard map.
//
// Rotor basis index i of the 2N-dimensional momentum space carries the label
// m = i - N + 1. Dense matrices in this module order the basis as
// (rotor, spin) with flat index i * 2 + s.

#include <array>
#include <span>
#include <vector>

#include "otom/otom.hpp"
#include "otom/quantum.hpp"
#include "otom/tensor_core.hpp"

namespace otom {

struct QkrParams {
    double k = 1.0;
    double hbar_eff = 1.0;
    std::size_t n_trunc = 128;  // N; rotor dimension 2N
    double v1 = 0.1;
    double v2 = 0.2;
    double v3 = 0.3;

    std::size_t rotor_dim() const { return 2 * n_trunc; }
    /// Throws std::invalid_argument unless 2N >= 8, hbar_eff > 0 and all values finite.
    void validate() const;
};

inline constexpr std::size_t kMaxDenseRotorDim = 256;

/// Kinetic term: m^2 / 2 on the diagonal.
ComplexMatrix build_hf(const QkrParams& p);

/// Kick term from its Fourier matrix elements. Entry [(m,s), (m',s')] depends
/// on r = m - m' taken modulo 2N, which makes the truncated kick periodic.
ComplexMatrix build_hk(const QkrParams& p);

/// exp(-i hbar H_F) exp(-i (k / hbar) H_K) by dense exponentiation.
/// Limited to 2N <= 256; use FloquetOperator beyond that.
ComplexMatrix floquet_dense(const QkrParams& p);

enum class KickDirection { forward, backward };

/// One Floquet period as a kick (applied on the position grid, 2x2 spin
/// blocks) followed by the momentum-diagonal drift. Immutable after
/// construction.
class FloquetOperator {
public:
    explicit FloquetOperator(const QkrParams& p);

    const QkrParams& params() const { return p_; }
    std::size_t rotor_dim() const { return p_.rotor_dim(); }
    /// exp(-i hbar m^2 / 2) per rotor basis index.
    const std::vector<cd>& kinetic_phases() const { return drift_; }
    /// Spin block exp(-i (k/hbar) h_j) at grid point j, row-major 2x2.
    const std::array<cd, 4>& kick_block(std::size_t j) const { return kick_[j]; }

    /// Applies `kicks` periods (or their inverse) to a register whose layout
    /// contains the factors "rotor" (dim 2N) and "spin" (dim 2).
    void apply(std::span<cd> psi, const SubsystemLayout& layout, KickDirection dir, std::size_t kicks = 1) const;

    /// Dense matrix of one period in (rotor, spin) order, assembled from apply().
    ComplexMatrix dense() const;

private:
    void period(std::span<cd> line0, std::span<cd> line1, KickDirection dir) const;

    QkrParams p_;
    MomentumFourierPlan plan_;
    std::vector<cd> drift_;
    std::vector<std::array<cd, 4>> kick_;
};

FloquetOperator floquet_splitstep(const QkrParams& p);

PureState evolve_kicks(const PureState& state, const FloquetOperator& f, std::size_t n, KickDirection dir);

/// n Floquet periods as an Evolution with the spin as the probe:
/// register order (spin, rotor).
class KickedRotorEvolution final : public Evolution {
public:
    KickedRotorEvolution(std::shared_ptr<const FloquetOperator> f, std::size_t kicks);

    std::size_t probe_dim() const override { return 2; }
    std::size_t system_dim() const override { return f_->rotor_dim(); }
    void forward(std::span<cd> psi) const override;
    void backward(std::span<cd> psi) const override;

private:
    std::shared_ptr<const FloquetOperator> f_;
    std::size_t kicks_;
    SubsystemLayout layout_;
};

/// Rotor basis index of momentum label m.
std::size_t momentum_index(const QkrParams& p, long m);

// ---------------------------------------------------------------------------
// Classical standard map

struct ChirikovState {
    double theta = 0.0;
    double p = 0.0;
};

/// Reduces to [0, 2 pi).
double wrap_angle(double x);

/// p' = p + k sin(theta), theta' = theta + p', both mod 2 pi.
ChirikovState chirikov_step(ChirikovState s, double k);

/// Cell-centred n_theta x n_p grid of initial conditions, theta-major.
std::vector<ChirikovState> chirikov_grid(std::size_t n_theta, std::size_t n_p);

/// Orbit points n = 1..iterations for each initial condition.
std::vector<std::vector<ChirikovState>> chirikov_portrait(double k, std::span<const ChirikovState> initial,
                                                          std::size_t iterations);

/// Circular standard deviation of the momentum along an orbit,
/// sqrt(-2 ln R) with R the mean resultant length of e^{i p}.
double orbit_momentum_spread(std::span<const ChirikovState> orbit);

/// First iteration (1-based) at which the orbit has visited every one of
/// `bins` equal momentum bins, or 0 if it never does.
std::size_t iterations_to_fill_momentum_bins(std::span<const ChirikovState> orbit, std::size_t bins);

}  // namespace otom
