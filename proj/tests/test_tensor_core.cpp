#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "otom/quantum.hpp"
#include "otom/tensor_core.hpp"
#include "test_util.hpp"

using namespace otom;
using namespace std::complex_literals;
using otom::testing::random_matrix;

namespace {

const ComplexMatrix kZ{{1.0, 0.0}, {0.0, -1.0}};
const ComplexMatrix kX{{0.0, 1.0}, {1.0, 0.0}};

ComplexMatrix bell_projector() { return bell_state(2).projector(); }

}  // namespace

TEST(Kron, IdentityAndPauli) {
    EXPECT_LT(max_abs_diff(kron(ComplexMatrix::identity(2), ComplexMatrix::identity(2)), ComplexMatrix::identity(4)),
              1e-15);
    const std::vector<cd> d{1.0, -1.0, -1.0, 1.0};
    EXPECT_LT(max_abs_diff(kron(kZ, kZ), ComplexMatrix::diagonal(d)), 1e-15);
}

TEST(Kron, MatchesIndexLoop) {
    SeededRng rng(1);
    const auto a = random_matrix(2, 2, rng);
    const auto b = random_matrix(3, 3, rng);
    const auto k = kron(a, b);
    ASSERT_EQ(k.rows(), 6u);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t p = 0; p < 3; ++p)
                for (std::size_t q = 0; q < 3; ++q) EXPECT_EQ(k(i * 3 + p, j * 3 + q), a(i, j) * b(p, q));
}

TEST(PartialTrace, BellMarginals) {
    const SubsystemLayout l({2, 2}, {"A", "B"});
    const auto rho = bell_projector();
    for (const std::string keep : {"A", "B"}) {
        const std::vector<std::string> k{keep};
        const auto r = partial_trace(rho, l, k);
        EXPECT_LT(max_abs_diff(r.matrix, ComplexMatrix::identity(2) * cd(0.5)), 1e-15);
        EXPECT_EQ(r.layout.labels(), k);
    }
}

TEST(PartialTrace, ProductFactor) {
    SeededRng rng(2);
    const auto ra = random_density(3, rng);
    const auto rb = random_density(2, rng);
    const SubsystemLayout l({3, 2}, {"A", "B"});
    const std::vector<std::string> keep{"A"};
    EXPECT_LT(max_abs_diff(partial_trace(kron(ra, rb), l, keep).matrix, ra), 1e-14);
}

TEST(PartialTrace, MatchesBruteForceOnThreeFactors) {
    SeededRng rng(3);
    const std::size_t da = 2, db = 3, dc = 2;
    const auto rho = random_density(da * db * dc, rng);
    const SubsystemLayout l({da, db, dc}, {"A", "B", "C"});
    const std::vector<std::string> keep{"A", "C"};
    const auto r = partial_trace(rho, l, keep);
    ASSERT_EQ(r.matrix.rows(), da * dc);
    EXPECT_NEAR(std::abs(r.matrix.trace() - rho.trace()), 0.0, 1e-12);
    for (std::size_t a = 0; a < da; ++a)
        for (std::size_t c = 0; c < dc; ++c)
            for (std::size_t a2 = 0; a2 < da; ++a2)
                for (std::size_t c2 = 0; c2 < dc; ++c2) {
                    cd acc = 0.0;
                    for (std::size_t b = 0; b < db; ++b)
                        acc += rho((a * db + b) * dc + c, (a2 * db + b) * dc + c2);
                    EXPECT_LT(std::abs(r.matrix(a * dc + c, a2 * dc + c2) - acc), 1e-14);
                }
}

TEST(PartialTrace, KronTraceIdentity) {
    SeededRng rng(4);
    for (int rep = 0; rep < 5; ++rep) {
        const auto a = random_matrix(3, 3, rng);
        const auto b = random_matrix(4, 4, rng);
        const SubsystemLayout l({3, 4}, {"A", "B"});
        const std::vector<std::string> keep{"A"};
        EXPECT_LT(max_abs_diff(partial_trace(kron(a, b), l, keep).matrix, a * b.trace()), 1e-12);
    }
}

TEST(PartialTrace, Errors) {
    const SubsystemLayout l({2, 2}, {"A", "B"});
    const std::vector<std::string> bad{"Q"};
    const std::vector<std::string> none{};
    EXPECT_THROW(partial_trace(bell_projector(), l, bad), std::invalid_argument);
    EXPECT_THROW(partial_trace(bell_projector(), l, none), std::invalid_argument);
}

TEST(PartialTranspose, ProductStateAndBell) {
    SeededRng rng(5);
    const auto ra = random_density(2, rng);
    const auto rb = random_density(3, rng);
    const SubsystemLayout l({2, 3}, {"A", "B"});
    const std::vector<std::string> sb{"B"};
    const auto pt = partial_transpose(kron(ra, rb), l, sb);
    EXPECT_LT(max_abs_diff(pt, kron(ra, rb.transpose())), 1e-15);
    EXPECT_GT(herm_eigenvalues(pt).front(), -1e-12);

    const SubsystemLayout q({2, 2}, {"A", "B"});
    const auto ev = herm_eigenvalues(partial_transpose(bell_projector(), q, sb));
    const std::vector<double> want{-0.5, 0.5, 0.5, 0.5};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ev[i], want[i], 1e-12);
}

TEST(PartialTranspose, InvolutionAndErrors) {
    SeededRng rng(6);
    const auto m = random_matrix(12, 12, rng);
    const SubsystemLayout l({2, 3, 2}, {"A", "B", "C"});
    const std::vector<std::string> s{"A", "C"};
    EXPECT_LT(max_abs_diff(partial_transpose(partial_transpose(m, l, s), l, s), m), 1e-14);
    const std::vector<std::string> bad{"Z"};
    EXPECT_THROW(partial_transpose(m, l, bad), std::invalid_argument);
}

TEST(PartialTranspose, MatchesIndexOracle) {
    SeededRng rng(7);
    const auto m = random_matrix(6, 6, rng);
    const SubsystemLayout l({2, 3}, {"A", "B"});
    const std::vector<std::string> s{"A"};
    const auto pt = partial_transpose(m, l, s);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t a2 = 0; a2 < 2; ++a2)
                for (std::size_t b2 = 0; b2 < 3; ++b2) EXPECT_EQ(pt(a * 3 + b, a2 * 3 + b2), m(a2 * 3 + b, a * 3 + b2));
}

TEST(HermEigen, Paulis) {
    auto r = herm_eigen(kZ);
    EXPECT_NEAR(r.eigenvalues[0], -1.0, 1e-15);
    EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-15);
    r = herm_eigen(kX);
    EXPECT_NEAR(r.eigenvalues[0], -1.0, 1e-15);
    EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-15);
    const double h = std::numbers::sqrt2 / 2;
    // overlap with (|0> - |1>)/sqrt2 and (|0> + |1>)/sqrt2 up to phase
    EXPECT_NEAR(std::abs(h * r.eigenvectors(0, 0) - h * r.eigenvectors(1, 0)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(h * r.eigenvectors(0, 1) + h * r.eigenvectors(1, 1)), 1.0, 1e-12);
}

TEST(HermEigen, RandomReconstruction) {
    SeededRng rng(8);
    const auto h = random_hermitian(16, rng);
    const auto r = herm_eigen(h);
    std::vector<cd> lam(r.eigenvalues.begin(), r.eigenvalues.end());
    const auto rec = r.eigenvectors * ComplexMatrix::diagonal(lam) * r.eigenvectors.adjoint();
    EXPECT_LT(max_abs_diff(rec, h), 1e-10);
    double s = 0.0;
    for (double x : r.eigenvalues) s += x;
    EXPECT_NEAR(s, h.trace().real(), 1e-10);
    EXPECT_TRUE(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));
}

TEST(HermEigen, ThousandRandomMatrices) {
    SeededRng rng(9);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t d = 1 + rng.next_u64() % 32;
        const auto h = random_hermitian(d, rng);
        const auto r = herm_eigen(h);
        std::vector<cd> lam(r.eigenvalues.begin(), r.eigenvalues.end());
        const auto& v = r.eigenvectors;
        ASSERT_LT(max_abs_diff(v.adjoint() * v, ComplexMatrix::identity(d)), 1e-10) << "d=" << d;
        ASSERT_LT(max_abs_diff(v * ComplexMatrix::diagonal(lam) * v.adjoint(), h), 1e-10) << "d=" << d;
    }
}

TEST(HermEigen, DegenerateSpectrum) {
    const auto r = herm_eigen(ComplexMatrix::identity(5) * cd(3.0));
    for (double x : r.eigenvalues) EXPECT_NEAR(x, 3.0, 1e-15);
    EXPECT_LT(max_abs_diff(r.eigenvectors.adjoint() * r.eigenvectors, ComplexMatrix::identity(5)), 1e-14);
}

TEST(HermEigen, RejectsNonHermitian) {
    const ComplexMatrix m{{1.0, 1.0}, {0.0, 1.0}};
    try {
        herm_eigen(m);
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("asymmetry"), std::string::npos) << e.what();
    }
}

TEST(UnitaryExp, Cases) {
    const std::vector<cd> want{-1i, 1i};
    EXPECT_LT(max_abs_diff(unitary_exp(kZ, std::numbers::pi / 2), ComplexMatrix::diagonal(want)), 1e-15);
    SeededRng rng(10);
    const auto h = random_hermitian(6, rng);
    EXPECT_LT(max_abs_diff(unitary_exp(h, 0.0), ComplexMatrix::identity(6)), 1e-15);
    EXPECT_LT(max_abs_diff(unitary_exp(kX, std::numbers::pi), ComplexMatrix::identity(2) * cd(-1.0)), 1e-12);
}

TEST(UnitaryExp, MatchesComposedPowerSeries) {
    // exp(-i t h) = (exp(-i t h / n))^n with a short Taylor series for the factor
    SeededRng rng(11);
    const auto h = random_hermitian(5, rng);
    const double t = 0.7;
    const int n = 1024;
    ComplexMatrix a = h * cd(0.0, -t / n);
    ComplexMatrix step = ComplexMatrix::identity(5), term = ComplexMatrix::identity(5);
    for (int k = 1; k <= 8; ++k) {
        term = term * a * cd(1.0 / k);
        step += term;
    }
    ComplexMatrix u = step;
    for (int k = 0; k < 10; ++k) u = u * u;
    const auto e = unitary_exp(h, t);
    EXPECT_LT(max_abs_diff(u, e), 1e-11);
    EXPECT_LT(max_abs_diff(e.adjoint() * e, ComplexMatrix::identity(5)), 1e-10);
}

TEST(TraceNorm, Cases) {
    SeededRng rng(12);
    EXPECT_NEAR(trace_norm(random_density(5, rng)), 1.0, 1e-12);
    EXPECT_NEAR(trace_norm(kZ), 2.0, 1e-15);
    const SubsystemLayout l({2, 2}, {"A", "B"});
    const std::vector<std::string> s{"B"};
    EXPECT_NEAR(trace_norm(partial_transpose(bell_projector(), l, s)), 2.0, 1e-12);
    // non-Hermitian: singular values of [[0,2],[0,0]] are {2, 0}
    const ComplexMatrix n{{0.0, 2.0}, {0.0, 0.0}};
    EXPECT_NEAR(trace_norm(n), 2.0, 1e-12);
}

namespace {

std::vector<cd> direct_momentum_to_position(const std::vector<cd>& c) {
    const std::size_t len = c.size();
    const long n = static_cast<long>(len / 2);
    std::vector<cd> out(len);
    for (std::size_t j = 0; j < len; ++j) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(len);
        for (std::size_t i = 0; i < len; ++i) {
            const long m = static_cast<long>(i) - n + 1;
            out[j] += std::exp(cd(0.0, th * static_cast<double>(m))) * c[i];
        }
        out[j] /= std::sqrt(static_cast<double>(len));
    }
    return out;
}

}  // namespace

TEST(Fourier, MomentumEigenstates) {
    for (std::size_t len : {8u, 12u}) {
        const std::size_t n = len / 2;
        std::vector<cd> c0(len), c1(len);
        c0[n - 1] = 1.0;  // m = 0
        c1[n] = 1.0;      // m = 1
        momentum_to_position(c0);
        momentum_to_position(c1);
        const double a = 1.0 / std::sqrt(static_cast<double>(len));
        for (std::size_t j = 0; j < len; ++j) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(len);
            EXPECT_LT(std::abs(c0[j] - a), 1e-14);
            EXPECT_LT(std::abs(c1[j] - a * std::exp(cd(0.0, th))), 1e-14);
        }
    }
}

TEST(Fourier, MatchesDirectTransformAndRoundTrips) {
    SeededRng rng(13);
    for (std::size_t len : {2u, 6u, 16u, 64u, 1320u / 10u}) {
        const auto v = random_state_vector(len, rng);
        auto w = v;
        momentum_to_position(w);
        const auto oracle = direct_momentum_to_position(v);
        double err = 0.0, nrm = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            err = std::max(err, std::abs(w[j] - oracle[j]));
            nrm += std::norm(w[j]);
        }
        EXPECT_LT(err, 1e-12) << len;
        EXPECT_NEAR(nrm, 1.0, 1e-12) << len;
        position_to_momentum(w);
        for (std::size_t j = 0; j < len; ++j) EXPECT_LT(std::abs(w[j] - v[j]), 1e-12) << len;
    }
}

TEST(Fourier, StateVectorAxis) {
    SeededRng rng(14);
    const SubsystemLayout l({3, 8, 2}, {"x", "rotor", "s"});
    StateVector v{random_state_vector(48, rng), l};
    const auto f = fourier_change_of_basis(v, "rotor", FourierDirection::forward);
    EXPECT_NEAR(f.norm(), 1.0, 1e-12);
    // compare against the dense oracle on each rotor line
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t s = 0; s < 2; ++s) {
            std::vector<cd> line(8);
            for (std::size_t r = 0; r < 8; ++r) line[r] = v.amplitudes[(x * 8 + r) * 2 + s];
            const auto o = direct_momentum_to_position(line);
            for (std::size_t r = 0; r < 8; ++r) EXPECT_LT(std::abs(f.amplitudes[(x * 8 + r) * 2 + s] - o[r]), 1e-13);
        }
    const auto back = fourier_change_of_basis(f, "rotor", FourierDirection::inverse);
    for (std::size_t i = 0; i < 48; ++i) EXPECT_LT(std::abs(back.amplitudes[i] - v.amplitudes[i]), 1e-12);
    EXPECT_THROW(fourier_change_of_basis(v, "x", FourierDirection::forward), std::invalid_argument);
}

TEST(Fourier, DftRadix2MatchesDirect) {
    SeededRng rng(15);
    auto a = random_state_vector(32, rng);
    auto b = a;
    dft_inplace(a, FourierDirection::forward);
    for (std::size_t k = 0; k < 32; ++k) {
        cd acc = 0.0;
        for (std::size_t j = 0; j < 32; ++j)
            acc += b[j] * std::exp(cd(0.0, -2.0 * std::numbers::pi * static_cast<double>(j * k) / 32.0));
        EXPECT_LT(std::abs(a[k] - acc), 1e-12);
    }
}

TEST(SubsystemLayoutTest, Validation) {
    EXPECT_THROW(SubsystemLayout({2, 2}, {"a", "a"}), std::invalid_argument);
    EXPECT_THROW(SubsystemLayout({2}, {"a", "b"}), std::invalid_argument);
    const SubsystemLayout l({2, 3, 4}, {"a", "b", "c"});
    EXPECT_EQ(l.total_dim(), 24u);
    EXPECT_EQ(l.strides(), (std::vector<std::size_t>{12, 4, 1}));
    EXPECT_THROW(l.index_of("z"), std::invalid_argument);
}

TEST(ComplexMatrixTest, Validation) {
    EXPECT_THROW(ComplexMatrix(2, 2, std::vector<cd>(3)), std::invalid_argument);
    ComplexMatrix m(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(m.all_finite());
}
