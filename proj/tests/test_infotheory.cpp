#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "otom/infotheory.hpp"
#include "test_util.hpp"

using namespace otom;
using otom::testing::random_process;

namespace {

DensityMatrix qubits(const ComplexMatrix& m, std::vector<std::string> labels) {
    std::vector<std::size_t> dims(labels.size(), 2);
    return DensityMatrix(m, SubsystemLayout(std::move(dims), std::move(labels)));
}

DensityMatrix bell_ab() { return DensityMatrix::from_pure(bell_state(2, "A", "B")); }

ComplexMatrix werner(double p) {
    return bell_state(2).projector() * cd(p) + ComplexMatrix::identity(4) * cd((1 - p) / 4);
}

}  // namespace

TEST(Entropy, BasicValues) {
    SeededRng rng(51);
    const PureState psi(random_state_vector(6, rng), SubsystemLayout({6}, {"x"}));
    EXPECT_NEAR(entropy(DensityMatrix::from_pure(psi)), 0.0, 1e-12);
    EXPECT_NEAR(entropy(DensityMatrix::maximally_mixed(SubsystemLayout({2}, {"x"}))), 1.0, 1e-14);
    EXPECT_NEAR(entropy(DensityMatrix::maximally_mixed(SubsystemLayout({4}, {"x"}))), 2.0, 1e-14);
}

TEST(Entropy, UnitaryInvariance) {
    SeededRng rng(52);
    const SubsystemLayout l({5}, {"x"});
    for (int rep = 0; rep < 20; ++rep) {
        const auto rho = random_density(5, rng);
        const auto u = haar_unitary(5, rng);
        EXPECT_NEAR(entropy(DensityMatrix(rho, l)), entropy(DensityMatrix(u * rho * u.adjoint(), l)), 1e-10);
    }
}

TEST(Qmi, BasicValues) {
    EXPECT_NEAR(qmi(bell_ab(), {"A"}, {"B"}), 2.0, 1e-12);
    SeededRng rng(53);
    const auto prod = qubits(kron(random_density(2, rng), random_density(2, rng)), {"A", "B"});
    EXPECT_NEAR(qmi(prod, {"A"}, {"B"}), 0.0, 1e-12);
    const std::vector<cd> cl{0.5, 0.0, 0.0, 0.5};
    EXPECT_NEAR(qmi(qubits(ComplexMatrix::diagonal(cl), {"A", "B"}), {"A"}, {"B"}), 1.0, 1e-12);
    EXPECT_THROW(qmi(bell_ab(), {"A"}, {"A"}), std::invalid_argument);
}

TEST(Qmi, AdditiveOverTensorProducts) {
    SeededRng rng(54);
    for (int rep = 0; rep < 10; ++rep) {
        const auto r1 = random_density(4, rng), r2 = random_density(4, rng);
        const auto a = qubits(r1, {"x1", "y1"}), b = qubits(r2, {"x2", "y2"});
        const auto both = qubits(kron(r1, r2), {"x1", "y1", "x2", "y2"});
        EXPECT_NEAR(qmi(both, {"x1", "x2"}, {"y1", "y2"}), qmi(a, {"x1"}, {"y1"}) + qmi(b, {"x2"}, {"y2"}), 1e-9);
    }
}

TEST(Qmi, MarginalizesToUnion) {
    SeededRng rng(55);
    const auto r = qubits(random_density(8, rng), {"a", "b", "c"});
    const std::vector<std::string> keep{"a", "b"};
    EXPECT_NEAR(qmi(r, {"a"}, {"b"}), qmi(r.marginal(keep), {"a"}, {"b"}), 1e-12);
}

TEST(Cqmi, ReductionsAndGhz) {
    SeededRng rng(56);
    const auto rxy = random_density(4, rng);
    const auto r3 = qubits(kron(rxy, random_density(2, rng)), {"x", "y", "z"});
    EXPECT_NEAR(cqmi(r3, {"x"}, {"y"}, {"z"}), qmi(r3, {"x"}, {"y"}), 1e-10);

    const DensityMatrix triv(kron(rxy, ComplexMatrix::identity(1)), SubsystemLayout({2, 2, 1}, {"x", "y", "z"}));
    EXPECT_NEAR(cqmi(triv, {"x"}, {"y"}, {"z"}), qmi(triv, {"x"}, {"y"}), 1e-10);
    EXPECT_NEAR(cqmi(triv, {"x"}, {"y"}, {}), qmi(triv, {"x"}, {"y"}), 1e-12);

    std::vector<cd> ghz(8);
    ghz[0] = ghz[7] = 1.0 / std::sqrt(2.0);
    const auto g = DensityMatrix::from_pure(PureState(ghz, SubsystemLayout({2, 2, 2}, {"x", "y", "z"})));
    EXPECT_NEAR(cqmi(g, {"x"}, {"y"}, {"z"}), 1.0, 1e-12);
    EXPECT_THROW(cqmi(g, {"x"}, {"y"}, {"x"}), std::invalid_argument);
}

TEST(Cqmi, StrongSubadditivity) {
    SeededRng rng(57);
    for (int rep = 0; rep < 1000; ++rep) {
        // mix of full-rank and low-rank states to probe the boundary
        ComplexMatrix m;
        if (rep % 2 == 0) {
            m = random_density(8, rng);
        } else {
            const auto g = ginibre_matrix(8, 1 + rep % 3, rng);
            m = g * g.adjoint();
            m *= cd(1.0 / m.trace().real());
            m = (m + m.adjoint()) * cd(0.5);
        }
        const auto r = qubits(m, {"x", "y", "z"});
        ASSERT_GE(cqmi(r, {"x"}, {"y"}, {"z"}), -1e-9);
    }
}

TEST(LogNegativity, Values) {
    EXPECT_NEAR(log_negativity(bell_ab(), {"B"}), 1.0, 1e-12);
    SeededRng rng(58);
    EXPECT_NEAR(log_negativity(qubits(kron(random_density(2, rng), random_density(2, rng)), {"A", "B"}), {"B"}), 0.0,
                1e-12);
    // Werner p: partial-transpose spectrum {(1+p)/4 x3, (1-3p)/4}
    const double p = 0.5;
    const double tn = 3 * (1 + p) / 4 + std::abs(1 - 3 * p) / 4;
    EXPECT_NEAR(log_negativity(qubits(werner(p), {"A", "B"}), {"A"}), std::log2(tn), 1e-12);
    EXPECT_NEAR(std::log2(tn), std::log2(1.25), 1e-15);
    EXPECT_NEAR(log_negativity(qubits(werner(0.2), {"A", "B"}), {"A"}), 0.0, 1e-12);  // PPT
}

TEST(CorrelationReportTest, TrivialAndBounds) {
    const auto p = ProcessSpec(std::make_shared<DenseEvolution>(ComplexMatrix::identity(4), 2),
                               StateEnsemble::basis_state(2, 0), ProbeTarget{});
    const auto rep = correlation_report(build_otom_choi(p));
    EXPECT_NEAR(rep.i_ai_bo, 2.0, 1e-12);
    EXPECT_NEAR(rep.i_bi_co, 2.0, 1e-12);
    EXPECT_NEAR(rep.i_nonmarkov, 0.0, 1e-12);
    EXPECT_NEAR(rep.log_negativity, 0.0, 1e-12);
    SeededRng rng(59);
    for (int k = 0; k < 10; ++k) {
        const auto r = correlation_report(build_otom_choi(random_process(rng, 2, 1 + k % 4)));
        for (double v : {r.i_ai_bo, r.i_bi_co, r.cqmi_ai_co_given_b}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 2.0 + 1e-9);
        }
        EXPECT_LE(r.i_nonmarkov, 4.0 + 1e-9);
    }
}

TEST(Delta, IdentityLimitIsTwoBits) {
    SeededRng rng(60);
    for (int k = 0; k < 20; ++k) {
        const auto p = random_process(rng, 2, 1 + k % 5);
        EXPECT_NEAR(qmi(conditional_choi_analytic(p, 0.0), {"a_i"}, {"c_o"}), 2.0, 1e-9);
    }
}

TEST(Delta, NonInteractingIsOne) {
    SeededRng rng(61);
    const auto p = ProcessSpec(std::make_shared<DenseEvolution>(kron(haar_unitary(2, rng), haar_unitary(4, rng)), 2),
                               StateEnsemble::maximally_mixed(4), ProbeTarget{});
    const auto r = delta(p, default_phi_grid());
    EXPECT_NEAR(r.delta, 1.0, 1e-9);
    ASSERT_EQ(r.qmi.size(), 9u);
    for (double v : r.qmi) EXPECT_NEAR(v, 2.0, 1e-9);
}

TEST(Delta, DeepHaarScrambles) {
    SeededRng rng(62);
    const auto p = ProcessSpec(std::make_shared<DenseEvolution>(haar_unitary(128, rng), 2),
                               StateEnsemble::basis_state(64, 0), ProbeTarget{});
    EXPECT_LT(delta(p, default_phi_grid()).delta, 0.05);
}

TEST(Delta, GridValidation) {
    SeededRng rng(63);
    const auto p = random_process(rng, 2, 2);
    const std::vector<double> only0{0.0}, none{};
    EXPECT_THROW(delta(p, only0), std::invalid_argument);
    EXPECT_THROW(delta(p, none), std::invalid_argument);
    const auto g = default_phi_grid();
    EXPECT_DOUBLE_EQ(g.front(), 0.0);
    EXPECT_DOUBLE_EQ(g.back(), std::numbers::pi / 2);
}

TEST(Delta, SpectatorInvariance) {
    SeededRng rng(64);
    const auto u = haar_unitary(6, rng);
    const auto rho = random_density(3, rng);
    const SubsystemLayout l3({3}, {"S"}), l6({6}, {"S"});
    const auto p = ProcessSpec(std::make_shared<DenseEvolution>(u, 2), DensityMatrix(rho, l3), ProbeTarget{});
    const auto sigma = random_density(2, rng);
    const auto q = ProcessSpec(std::make_shared<DenseEvolution>(kron(u, ComplexMatrix::identity(2)), 2),
                               DensityMatrix(kron(rho, sigma), l6), ProbeTarget{});
    EXPECT_NEAR(delta(p, default_phi_grid()).delta, delta(q, default_phi_grid()).delta, 1e-8);
}

TEST(Delta, ContractionPathAgrees) {
    SeededRng rng(65);
    const auto p = random_process(rng, 2, 3);
    const auto choi = build_otom_choi(p);
    const auto r = delta(p, default_phi_grid());
    for (std::size_t i = 0; i < r.phi.size(); ++i) {
        const auto c = conditional_choi(choi, butterfly_instrument({r.phi[i]})).state;
        EXPECT_NEAR(qmi(c, {"a_i"}, {"c_o"}), r.qmi[i], 1e-9);
    }
    EXPECT_GE(r.delta, 0.0);
    EXPECT_LE(r.delta, 1.0);
}
