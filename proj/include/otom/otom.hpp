#pragma once

// Out-of-time-order process construction, its Choi state (the OTOM), and
// contractions of that state with preparation/butterfly/measurement maps.

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "otom/quantum.hpp"
#include "otom/tensor_core.hpp"

namespace otom {

/// Unitary evolution of a probe ⊗ system register. Amplitude vectors are laid
/// out with the probe as the most significant factor.
class Evolution {
public:
    virtual ~Evolution() = default;

    virtual std::size_t probe_dim() const = 0;
    virtual std::size_t system_dim() const = 0;
    std::size_t dim() const { return probe_dim() * system_dim(); }

    /// In-place U psi.
    virtual void forward(std::span<cd> psi) const = 0;
    /// In-place U† psi.
    virtual void backward(std::span<cd> psi) const = 0;

    /// Matrix of U, assembled column by column from forward().
    virtual ComplexMatrix dense() const;
};

class DenseEvolution final : public Evolution {
public:
    DenseEvolution(ComplexMatrix u, std::size_t probe_dim);

    std::size_t probe_dim() const override { return probe_dim_; }
    std::size_t system_dim() const override { return u_.rows() / probe_dim_; }
    void forward(std::span<cd> psi) const override;
    void backward(std::span<cd> psi) const override;
    ComplexMatrix dense() const override { return u_; }

private:
    ComplexMatrix u_;
    ComplexMatrix u_dag_;
    std::size_t probe_dim_;
};

/// Largest norm deviation |‖U psi‖ - 1| over a few random unit vectors,
/// together with the forward/backward round-trip error.
double unitarity_defect(const Evolution& e, std::uint64_t seed = 0x5eed, int samples = 4);

/// Convex decomposition sum_k w_k |s_k><s_k| of a system state.
struct StateEnsemble {
    std::vector<double> weights;
    std::vector<std::vector<cd>> states;

    /// Eigen-decomposition; components with weight below 1e-14 are dropped.
    static StateEnsemble from_density(const DensityMatrix& rho);
    static StateEnsemble pure(std::vector<cd> psi);
    static StateEnsemble basis_state(std::size_t dim, std::size_t index);
    static StateEnsemble maximally_mixed(std::size_t dim);

    std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
    ComplexMatrix density() const;
};

struct ProbeTarget {
    bool operator==(const ProbeTarget&) const = default;
};

/// One binary digit of the system index; bit 0 is the least significant.
struct SystemQubitTarget {
    std::size_t bit = 0;
    bool operator==(const SystemQubitTarget&) const = default;
};

using ButterflyTarget = std::variant<ProbeTarget, SystemQubitTarget>;

std::string target_name(const ButterflyTarget& t);

/// Forward evolution, initial system state, and butterfly placement.
/// Validated on construction (dimensions, target placement, unitarity).
class ProcessSpec {
public:
    ProcessSpec(std::shared_ptr<const Evolution> forward, StateEnsemble rho_s, ButterflyTarget target);
    ProcessSpec(std::shared_ptr<const Evolution> forward, const DensityMatrix& rho_s, ButterflyTarget target);

    const Evolution& evolution() const { return *forward_; }
    std::shared_ptr<const Evolution> evolution_ptr() const { return forward_; }
    const StateEnsemble& rho_s() const { return rho_; }
    const ButterflyTarget& target() const { return target_; }

    std::size_t probe_dim() const { return forward_->probe_dim(); }
    std::size_t system_dim() const { return forward_->system_dim(); }
    std::size_t target_dim() const;

    /// Layout of the probe ⊗ system register with the butterfly factor split
    /// out under the label "target".
    const SubsystemLayout& register_layout() const { return layout_; }

private:
    std::shared_ptr<const Evolution> forward_;
    StateEnsemble rho_;
    ButterflyTarget target_;
    SubsystemLayout layout_;
};

/// Register layout for a target placement; throws std::invalid_argument when
/// the target cannot be carved out of the system.
SubsystemLayout target_register_layout(std::size_t probe_dim, std::size_t system_dim, const ButterflyTarget& t);

inline const std::vector<std::string> kOtomWires{"a_i", "b_o", "b_i", "c_o"};

/// Unit-trace Choi state on wires [a_i, b_o, b_i, c_o].
struct OtomChoi {
    DensityMatrix state;

    std::size_t probe_dim() const { return state.layout().dims()[0]; }
    std::size_t target_dim() const { return state.layout().dims()[1]; }
};

struct ButterflyParams {
    double phi = 0.0;
    ButterflyTarget target = ProbeTarget{};
};

/// tr(C ∘ U† ∘ B ∘ U ∘ A [rho_P ⊗ rho_S]) by explicit operator composition.
/// A and C act on the probe, B on the butterfly target. rho_P defaults to
/// I / probe_dim.
cd compose_direct(const ProcessSpec& process, const Instrument& a, const Instrument& b, const Instrument& c,
                  const std::optional<ComplexMatrix>& rho_p = std::nullopt);

OtomChoi build_otom_choi(const ProcessSpec& process);

/// Multi-time Born rule; agrees with compose_direct for every instrument triple.
cd contract_choi(const OtomChoi& choi, const Instrument& a, const Instrument& b, const Instrument& c,
                 const std::optional<ComplexMatrix>& rho_p = std::nullopt);

/// F = tr[W_t V W_t† V† rho] with W_t = U† W U; every operator lives on the
/// full register.
cd otoc_direct(const ComplexMatrix& u, const DensityMatrix& rho, const ComplexMatrix& v, const ComplexMatrix& w);

/// B[rho] = exp(-i phi sigma_z) rho exp(i phi sigma_z).
Instrument butterfly_instrument(const ButterflyParams& params);

struct ConditionalChoi {
    DensityMatrix state;  // wires [a_i, c_o], unit trace
    cd raw_trace;         // trace before renormalization
};

/// State on (a_i, c_o) obtained by plugging B into the middle slot.
ConditionalChoi conditional_choi(const OtomChoi& choi, const Instrument& b);

/// Which operator plays the role of the evolved sigma_z in the closed form.
enum class ZConvention {
    heisenberg,   // U† sigma_z U
    schrodinger,  // U sigma_z U†
};

/// The three matrices on (a_i, c_o) entering the closed form:
///   c^2 psi_plus + s^2 flipped + cross_sign * i c s (cross - cross†)
/// with c = cos phi, s = sin phi, flipped = tr_S[Z psi+ ⊗ rho_S Z†] and
/// cross = tr_S[Z psi+ ⊗ rho_S].
struct AnalyticTerms {
    ComplexMatrix psi_plus;
    ComplexMatrix flipped;
    ComplexMatrix cross;
};

AnalyticTerms analytic_terms(const ProcessSpec& process, ZConvention convention = ZConvention::heisenberg);

/// Same terms from precomputed vectors: for ensemble member k, z[k][j] is
/// Z (|j>_P ⊗ |s_k>) in probe ⊗ system order.
AnalyticTerms analytic_terms_from_vectors(std::size_t probe_dim, const StateEnsemble& rho_s,
                                          const std::vector<std::vector<std::vector<cd>>>& z);

ComplexMatrix combine_analytic(const AnalyticTerms& terms, double phi, double cross_sign = -1.0);

DensityMatrix conditional_choi_analytic_from_terms(const AnalyticTerms& terms, double phi);

/// Closed form of the conditional Choi state for a z-rotation butterfly.
DensityMatrix conditional_choi_analytic(const ProcessSpec& process, double phi);

}  // namespace otom
