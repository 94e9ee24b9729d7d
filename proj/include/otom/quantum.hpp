#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otom/tensor_core.hpp"

namespace otom {

/// Normalized state vector (2-norm 1 within 1e-10).
class PureState {
public:
    PureState(std::vector<cd> amplitudes, SubsystemLayout layout);
    explicit PureState(StateVector v) : PureState(std::move(v.amplitudes), std::move(v.layout)) {}

    const std::vector<cd>& amplitudes() const { return v_.amplitudes; }
    const SubsystemLayout& layout() const { return v_.layout; }
    const StateVector& vector() const { return v_; }
    cd operator[](std::size_t i) const { return v_.amplitudes[i]; }

    /// |psi><psi| with the same layout.
    ComplexMatrix projector() const;

private:
    StateVector v_;
};

/// Hermitian, unit-trace, positive semidefinite matrix with labeled factors.
/// All three properties are verified on construction (tolerance 1e-10).
class DensityMatrix {
public:
    DensityMatrix(ComplexMatrix m, SubsystemLayout layout);

    static DensityMatrix from_pure(const PureState& psi) { return {psi.projector(), psi.layout()}; }
    static DensityMatrix maximally_mixed(const SubsystemLayout& layout);

    const ComplexMatrix& matrix() const { return m_; }
    const SubsystemLayout& layout() const { return layout_; }
    std::size_t dim() const { return m_.rows(); }

    /// Reduced state on the named factors (layout order preserved).
    DensityMatrix marginal(std::span<const std::string> keep) const;
    DensityMatrix relabeled(std::vector<std::string> labels) const;

private:
    ComplexMatrix m_;
    SubsystemLayout layout_;
};

struct DensityCheck {
    double hermitian_defect = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
};

/// Numerical audit of the density-matrix conditions, without throwing.
DensityCheck check_density(const ComplexMatrix& m);

/// A superoperator X[rho] = sum_k L_k rho R_k† given by left/right operator
/// pairs. Covers maps that are not completely positive.
class Instrument {
public:
    using Pair = std::pair<ComplexMatrix, ComplexMatrix>;

    Instrument(std::vector<Pair> pairs);

    static Instrument identity(std::size_t d);
    static Instrument unitary(const ComplexMatrix& u);

    std::size_t dim_in() const { return dim_in_; }
    std::size_t dim_out() const { return dim_out_; }
    const std::vector<Pair>& pairs() const { return pairs_; }

    ComplexMatrix apply(const ComplexMatrix& rho) const;

    /// Sum of two instruments of the same shape (union of pairs).
    friend Instrument operator+(const Instrument& a, const Instrument& b);

private:
    std::vector<Pair> pairs_;
    std::size_t dim_in_ = 0;
    std::size_t dim_out_ = 0;
};

/// Deterministic 64-bit-seeded generator: xoshiro256** with its state filled
/// from SplitMix64(seed). Gaussian variates use the Box-Muller transform on
/// 53-bit uniforms, so sample streams depend only on the seed.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double normal();
    cd complex_normal();  // E|z|^2 = 1

    /// Independent stream for a work item; depends only on (seed, item).
    SeededRng split(std::uint64_t item) const;

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// (sum_j |jj>) / sqrt(d) on layout [d, d] with labels {first, second}.
PureState bell_state(std::size_t d, const std::string& first = "A", const std::string& second = "B");

/// Haar-distributed unitary: complex Ginibre matrix orthonormalized column by
/// column (classical Gram-Schmidt, applied twice); the triangular factor then
/// has a positive diagonal by construction.
ComplexMatrix haar_unitary(std::size_t d, SeededRng& rng);

/// Random complex Ginibre matrix with unit-variance entries.
ComplexMatrix ginibre_matrix(std::size_t rows, std::size_t cols, SeededRng& rng);

/// Random Hermitian matrix (G + G†)/2.
ComplexMatrix random_hermitian(std::size_t d, SeededRng& rng);

/// Random full-rank density matrix G G† / tr(G G†).
ComplexMatrix random_density(std::size_t d, SeededRng& rng);

/// Random normalized vector.
std::vector<cd> random_state_vector(std::size_t d, SeededRng& rng);

/// Product of the named factor dims must equal u's dimension; `targets`
/// order sets how u's index decomposes (first target most significant).
PureState apply_unitary(const PureState& state, const ComplexMatrix& u, std::span<const std::string> targets);

/// Raw form of apply_unitary on an amplitude span; does not check unitarity.
void apply_local(std::span<cd> amplitudes, const SubsystemLayout& layout, const ComplexMatrix& op,
                 std::span<const std::string> targets);

/// u acting on `targets`, identity elsewhere, as a full matrix.
ComplexMatrix embed_operator(const ComplexMatrix& op, const SubsystemLayout& layout,
                             std::span<const std::string> targets);

PureState swap_subsystems(const PureState& state, const std::string& a, const std::string& b);

/// Choi matrix sum_{jk} X[|j><k|] ⊗ |j><k| (output factor first).
ComplexMatrix instrument_choi(const Instrument& x);

/// sigma_0 = I, sigma_1 = X, sigma_2 = Y, sigma_3 = Z.
ComplexMatrix pauli(int i);

}  // namespace otom
