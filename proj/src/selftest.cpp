#include "otom/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>

#include "otom/experiments.hpp"
#include "otom/infotheory.hpp"
#include "otom/kicked_rotor.hpp"
#include "otom/otom.hpp"
#include "otom/quantum.hpp"
#include "otom/tensor_core.hpp"

namespace otom {

namespace {

ProcessSpec random_process(SeededRng& rng, std::size_t ds) {
    auto u = std::make_shared<DenseEvolution>(haar_unitary(2 * ds, rng), 2);
    return ProcessSpec(u, DensityMatrix(random_density(ds, rng), SubsystemLayout({ds}, {"S"})), ProbeTarget{});
}

Instrument random_instrument(SeededRng& rng, std::size_t d) {
    return Instrument({{ginibre_matrix(d, d, rng), ginibre_matrix(d, d, rng)},
                       {ginibre_matrix(d, d, rng), ginibre_matrix(d, d, rng)}});
}

SelftestCheck check(std::string name, double tolerance, const std::function<double()>& body) {
    SelftestCheck c;
    c.name = std::move(name);
    c.tolerance = tolerance;
    c.worst = body();
    c.passed = std::isfinite(c.worst) && c.worst <= tolerance;
    return c;
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
    const SeededRng root(seed);
    std::vector<SelftestCheck> out;

    out.push_back(check("partial_trace_of_kron", 1e-12, [&] {
        SeededRng rng = root.split(1);
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto a = ginibre_matrix(3, 3, rng), b = ginibre_matrix(4, 4, rng);
            const SubsystemLayout l({3, 4}, {"A", "B"});
            const std::vector<std::string> keep{"A"};
            worst = std::max(worst, max_abs_diff(partial_trace(kron(a, b), l, keep).matrix, a * b.trace()));
        }
        return worst;
    }));

    out.push_back(check("herm_eigen_reconstruction", 1e-10, [&] {
        SeededRng rng = root.split(2);
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto h = random_hermitian(1 + rep % 24, rng);
            const auto e = herm_eigen(h);
            const auto rebuilt = e.eigenvectors * ComplexMatrix::diagonal(std::vector<cd>(
                                                      e.eigenvalues.begin(), e.eigenvalues.end())) *
                                 e.eigenvectors.adjoint();
            worst = std::max(worst, max_abs_diff(rebuilt, h));
        }
        return worst;
    }));

    out.push_back(check("fourier_round_trip", 1e-12, [&] {
        SeededRng rng = root.split(3);
        double worst = 0.0;
        for (std::size_t d : {8u, 10u, 64u}) {
            const StateVector v{random_state_vector(d, rng), SubsystemLayout({d}, {"rotor"})};
            const auto back = fourier_change_of_basis(fourier_change_of_basis(v, "rotor", FourierDirection::forward),
                                                      "rotor", FourierDirection::inverse);
            for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(back.amplitudes[i] - v.amplitudes[i]));
        }
        return worst;
    }));

    out.push_back(check("contract_choi_vs_compose", 1e-10, [&] {
        SeededRng rng = root.split(4);
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto p = random_process(rng, 1 + rep % 4);
            const auto a = random_instrument(rng, 2), b = random_instrument(rng, 2), c = random_instrument(rng, 2);
            worst = std::max(worst, std::abs(contract_choi(build_otom_choi(p), a, b, c) - compose_direct(p, a, b, c)));
        }
        return worst;
    }));

    out.push_back(check("conditional_choi_vs_closed_form", 1e-10, [&] {
        SeededRng rng = root.split(5);
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto p = random_process(rng, 1 + rep % 4);
            const auto choi = build_otom_choi(p);
            for (double phi : {0.0, 0.3, 1.0, std::numbers::pi / 2}) {
                const auto a = conditional_choi(choi, butterfly_instrument({phi})).state.matrix();
                worst = std::max(worst, max_abs_diff(a, conditional_choi_analytic(p, phi).matrix()));
            }
        }
        return worst;
    }));

    out.push_back(check("otom_choi_validity", 1e-10, [&] {
        SeededRng rng = root.split(6);
        ChoiAudit audit;
        for (int rep = 0; rep < 20; ++rep) audit.include(build_otom_choi(random_process(rng, 1 + rep % 4)));
        return std::max({audit.hermitian_defect, audit.trace_error, -audit.min_eigenvalue, audit.marginal_error});
    }));

    out.push_back(check("strong_subadditivity", 1e-9, [&] {
        SeededRng rng = root.split(7);
        double worst = 0.0;
        const SubsystemLayout l({2, 2, 2}, {"x", "y", "z"});
        for (int rep = 0; rep < 200; ++rep)
            worst = std::max(worst, -cqmi(DensityMatrix(random_density(8, rng), l), {"x"}, {"y"}, {"z"}));
        return worst;
    }));

    out.push_back(check("floquet_splitstep_vs_dense", 1e-8, [&] {
        SeededRng rng = root.split(8);
        QkrParams p;
        p.k = 5.0;
        p.n_trunc = 16;
        const auto dense = floquet_dense(p);
        const FloquetOperator f(p);
        const SubsystemLayout l({p.rotor_dim(), 2}, {"rotor", "spin"});
        double worst = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            auto v = random_state_vector(dense.rows(), rng);
            const auto want = dense.apply(v);
            f.apply(v, l, KickDirection::forward);
            for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - want[i]));
        }
        return worst;
    }));

    out.push_back(check("chirikov_free_rotation_conserves_p", 0.0, [&] {
        double worst = 0.0;
        const auto grid = chirikov_grid(4, 4);
        const auto orbits = chirikov_portrait(0.0, grid, 20);
        for (std::size_t o = 0; o < orbits.size(); ++o)
            for (const auto& s : orbits[o]) worst = std::max(worst, std::abs(s.p - grid[o].p));
        return worst;
    }));

    return out;
}

}  // namespace otom
