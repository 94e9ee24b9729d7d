#include "otom/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace otom {

namespace {
constexpr double kStateTolerance = 1e-10;
}

// ---------------------------------------------------------------------------
// States

PureState::PureState(std::vector<cd> amplitudes, SubsystemLayout layout)
    : v_{std::move(amplitudes), std::move(layout)} {
    if (v_.amplitudes.size() != v_.layout.total_dim())
        throw std::invalid_argument("PureState: amplitude count does not match layout");
    const double n = v_.norm();
    if (std::abs(n - 1.0) > kStateTolerance) {
        std::ostringstream os;
        os << "PureState: norm " << n << " differs from 1";
        throw std::invalid_argument(os.str());
    }
}

ComplexMatrix PureState::projector() const { return ComplexMatrix::outer(v_.amplitudes, v_.amplitudes); }

DensityCheck check_density(const ComplexMatrix& m) {
    DensityCheck c;
    c.hermitian_defect = hermitian_defect(m);
    c.trace_error = std::abs(m.trace() - 1.0);
    if (c.hermitian_defect <= kHermitianTolerance) {
        const auto ev = herm_eigenvalues(m);
        c.min_eigenvalue = ev.empty() ? 0.0 : ev.front();
    } else {
        c.min_eigenvalue = -std::numeric_limits<double>::infinity();
    }
    return c;
}

DensityMatrix::DensityMatrix(ComplexMatrix m, SubsystemLayout layout) : m_(std::move(m)), layout_(std::move(layout)) {
    if (!m_.square() || m_.rows() != layout_.total_dim())
        throw std::invalid_argument("DensityMatrix: matrix shape does not match layout");
    if (!m_.all_finite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
    const auto c = check_density(m_);
    if (c.hermitian_defect > kStateTolerance || c.trace_error > kStateTolerance || c.min_eigenvalue < -kStateTolerance) {
        std::ostringstream os;
        os << "DensityMatrix: invalid state (hermitian defect " << c.hermitian_defect << ", trace error "
           << c.trace_error << ", min eigenvalue " << c.min_eigenvalue << ")";
        throw std::invalid_argument(os.str());
    }
}

DensityMatrix DensityMatrix::maximally_mixed(const SubsystemLayout& layout) {
    const std::size_t d = layout.total_dim();
    return {ComplexMatrix::identity(d) * cd(1.0 / static_cast<double>(d)), layout};
}

DensityMatrix DensityMatrix::marginal(std::span<const std::string> keep) const {
    auto r = partial_trace(m_, layout_, keep);
    return {std::move(r.matrix), std::move(r.layout)};
}

DensityMatrix DensityMatrix::relabeled(std::vector<std::string> labels) const {
    return {m_, SubsystemLayout(layout_.dims(), std::move(labels))};
}

// ---------------------------------------------------------------------------
// Instruments

Instrument::Instrument(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw std::invalid_argument("Instrument: needs at least one operator pair");
    dim_out_ = pairs_.front().first.rows();
    dim_in_ = pairs_.front().first.cols();
    for (const auto& [l, r] : pairs_) {
        if (l.rows() != dim_out_ || l.cols() != dim_in_ || r.rows() != dim_out_ || r.cols() != dim_in_)
            throw std::invalid_argument("Instrument: inconsistent operator-pair dimensions");
    }
}

Instrument Instrument::identity(std::size_t d) {
    return Instrument({{ComplexMatrix::identity(d), ComplexMatrix::identity(d)}});
}

Instrument Instrument::unitary(const ComplexMatrix& u) { return Instrument({{u, u}}); }

ComplexMatrix Instrument::apply(const ComplexMatrix& rho) const {
    if (rho.rows() != dim_in_ || rho.cols() != dim_in_)
        throw std::invalid_argument("Instrument::apply: input dimension mismatch");
    ComplexMatrix out(dim_out_, dim_out_);
    for (const auto& [l, r] : pairs_) out += l * rho * r.adjoint();
    return out;
}

Instrument operator+(const Instrument& a, const Instrument& b) {
    if (a.dim_in_ != b.dim_in_ || a.dim_out_ != b.dim_out_)
        throw std::invalid_argument("Instrument sum: dimension mismatch");
    auto pairs = a.pairs_;
    pairs.insert(pairs.end(), b.pairs_.begin(), b.pairs_.end());
    return Instrument(std::move(pairs));
}

ComplexMatrix instrument_choi(const Instrument& x) {
    // sum_k |L_k>><<R_k| with the output index first in each vectorization
    const std::size_t din = x.dim_in(), dout = x.dim_out();
    const std::size_t n = din * dout;
    ComplexMatrix c(n, n);
    for (const auto& [l, r] : x.pairs()) {
        for (std::size_t o = 0; o < dout; ++o)
            for (std::size_t i = 0; i < din; ++i) {
                const cd lv = l(o, i);
                if (lv == cd{}) continue;
                for (std::size_t o2 = 0; o2 < dout; ++o2)
                    for (std::size_t i2 = 0; i2 < din; ++i2) c(o * din + i, o2 * din + i2) += lv * std::conj(r(o2, i2));
            }
    }
    return c;
}

ComplexMatrix pauli(int i) {
    using namespace std::complex_literals;
    switch (i) {
        case 0: return {{1.0, 0.0}, {0.0, 1.0}};
        case 1: return {{0.0, 1.0}, {1.0, 0.0}};
        case 2: return {{0.0, -1i}, {1i, 0.0}};
        case 3: return {{1.0, 0.0}, {0.0, -1.0}};
        default: throw std::invalid_argument("pauli: index must be in 0..3");
    }
}

// ---------------------------------------------------------------------------
// Random numbers

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t SeededRng::next_u64() {
    const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

cd SeededRng::complex_normal() {
    const double re = normal();
    const double im = normal();
    return cd(re, im) * std::numbers::sqrt2 * 0.5;
}

SeededRng SeededRng::split(std::uint64_t item) const {
    std::uint64_t sm = seed_ ^ (0xD1B54A32D192ED03ULL * (item + 1));
    return SeededRng(splitmix64(sm));
}

// ---------------------------------------------------------------------------
// Sampling

PureState bell_state(std::size_t d, const std::string& first, const std::string& second) {
    if (d < 2) throw std::invalid_argument("bell_state: dimension must be at least 2");
    std::vector<cd> amp(d * d);
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) amp[j * d + j] = a;
    return PureState(std::move(amp), SubsystemLayout({d, d}, {first, second}));
}

ComplexMatrix ginibre_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
    ComplexMatrix g(rows, cols);
    for (auto& x : g.data()) x = rng.complex_normal();
    return g;
}

ComplexMatrix haar_unitary(std::size_t d, SeededRng& rng) {
    if (d == 0) throw std::invalid_argument("haar_unitary: dimension must be positive");
    ComplexMatrix g = ginibre_matrix(d, d, rng);
    // Work on columns stored as rows of the transpose for contiguous access.
    ComplexMatrix q = g.transpose();
    for (std::size_t c = 0; c < d; ++c) {
        auto col = q.row(c);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < c; ++p) {
                const auto prev = q.row(p);
                cd proj = 0.0;
                for (std::size_t k = 0; k < d; ++k) proj += std::conj(prev[k]) * col[k];
                for (std::size_t k = 0; k < d; ++k) col[k] -= proj * prev[k];
            }
        }
        double nrm = 0.0;
        for (const auto& x : col) nrm += std::norm(x);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-300) throw NumericalError("haar_unitary: rank-deficient Gaussian sample");
        for (auto& x : col) x /= nrm;
    }
    return q.transpose();
}

ComplexMatrix random_hermitian(std::size_t d, SeededRng& rng) {
    ComplexMatrix g = ginibre_matrix(d, d, rng);
    return (g + g.adjoint()) * cd(0.5);
}

ComplexMatrix random_density(std::size_t d, SeededRng& rng) {
    ComplexMatrix g = ginibre_matrix(d, d, rng);
    ComplexMatrix r = g * g.adjoint();
    const double t = r.trace().real();
    r *= cd(1.0 / t);
    // exact Hermiticity
    for (std::size_t i = 0; i < d; ++i) {
        r(i, i) = r(i, i).real();
        for (std::size_t j = i + 1; j < d; ++j) r(j, i) = std::conj(r(i, j));
    }
    return r;
}

std::vector<cd> random_state_vector(std::size_t d, SeededRng& rng) {
    std::vector<cd> v(d);
    double n = 0.0;
    for (auto& x : v) {
        x = rng.complex_normal();
        n += std::norm(x);
    }
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
}

// ---------------------------------------------------------------------------
// Subsystem-targeted application

namespace {

struct TargetIndexing {
    std::vector<std::size_t> offsets;  // flat offset of each target multi-index
    std::vector<std::size_t> bases;    // flat indices with all target digits zero
};

TargetIndexing target_indexing(const SubsystemLayout& layout, std::span<const std::string> targets) {
    const auto strides = layout.strides();
    const auto& dims = layout.dims();
    std::vector<std::size_t> tf;
    std::vector<bool> is_target(layout.size(), false);
    for (const auto& t : targets) {
        const auto f = layout.index_of(t);
        if (is_target[f]) throw std::invalid_argument("repeated target label '" + t + "'");
        is_target[f] = true;
        tf.push_back(f);
    }
    TargetIndexing ix;
    std::size_t dt = 1;
    for (auto f : tf) dt *= dims[f];
    ix.offsets.resize(dt);
    for (std::size_t a = 0; a < dt; ++a) {
        std::size_t rem = a, off = 0;
        for (std::size_t k = tf.size(); k-- > 0;) {
            off += (rem % dims[tf[k]]) * strides[tf[k]];
            rem /= dims[tf[k]];
        }
        ix.offsets[a] = off;
    }
    // enumerate the complementary digits
    std::vector<std::size_t> rest;
    for (std::size_t f = 0; f < layout.size(); ++f)
        if (!is_target[f]) rest.push_back(f);
    std::size_t nrest = layout.total_dim() / dt;
    ix.bases.resize(nrest);
    for (std::size_t b = 0; b < nrest; ++b) {
        std::size_t rem = b, off = 0;
        for (std::size_t k = rest.size(); k-- > 0;) {
            off += (rem % dims[rest[k]]) * strides[rest[k]];
            rem /= dims[rest[k]];
        }
        ix.bases[b] = off;
    }
    return ix;
}

}  // namespace

void apply_local(std::span<cd> amplitudes, const SubsystemLayout& layout, const ComplexMatrix& op,
                 std::span<const std::string> targets) {
    if (amplitudes.size() != layout.total_dim())
        throw std::invalid_argument("apply_local: amplitude count does not match layout");
    const std::size_t dt = layout.dim_product(targets);
    if (!op.square() || op.rows() != dt)
        throw std::invalid_argument("apply_local: operator dimension does not match target dimensions");
    const auto ix = target_indexing(layout, targets);
    std::vector<cd> in(dt), out(dt);
    for (auto base : ix.bases) {
        for (std::size_t a = 0; a < dt; ++a) in[a] = amplitudes[base + ix.offsets[a]];
        for (std::size_t a = 0; a < dt; ++a) {
            cd acc = 0.0;
            const auto r = op.row(a);
            for (std::size_t b = 0; b < dt; ++b) acc += r[b] * in[b];
            out[a] = acc;
        }
        for (std::size_t a = 0; a < dt; ++a) amplitudes[base + ix.offsets[a]] = out[a];
    }
}

ComplexMatrix embed_operator(const ComplexMatrix& op, const SubsystemLayout& layout,
                             std::span<const std::string> targets) {
    const std::size_t dt = layout.dim_product(targets);
    if (!op.square() || op.rows() != dt)
        throw std::invalid_argument("embed_operator: operator dimension does not match target dimensions");
    const auto ix = target_indexing(layout, targets);
    ComplexMatrix full(layout.total_dim(), layout.total_dim());
    for (auto base : ix.bases)
        for (std::size_t a = 0; a < dt; ++a)
            for (std::size_t b = 0; b < dt; ++b) full(base + ix.offsets[a], base + ix.offsets[b]) = op(a, b);
    return full;
}

PureState apply_unitary(const PureState& state, const ComplexMatrix& u, std::span<const std::string> targets) {
    const std::size_t dt = state.layout().dim_product(targets);
    if (!u.square() || u.rows() != dt)
        throw std::invalid_argument("apply_unitary: unitary dimension does not match target dimensions");
    std::vector<cd> amp = state.amplitudes();
    apply_local(amp, state.layout(), u, targets);
    return PureState(std::move(amp), state.layout());
}

PureState swap_subsystems(const PureState& state, const std::string& a, const std::string& b) {
    const auto& layout = state.layout();
    const std::size_t fa = layout.index_of(a), fb = layout.index_of(b);
    if (layout.dims()[fa] != layout.dims()[fb])
        throw std::invalid_argument("swap_subsystems: subsystems '" + a + "' and '" + b + "' differ in dimension");
    if (fa == fb) return state;
    const auto strides = layout.strides();
    const std::size_t d = layout.dims()[fa];
    std::vector<cd> out(state.amplitudes().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t da = (i / strides[fa]) % d;
        const std::size_t db = (i / strides[fb]) % d;
        const std::size_t j = i - da * strides[fa] - db * strides[fb] + db * strides[fa] + da * strides[fb];
        out[j] = state[i];
    }
    return PureState(std::move(out), layout);
}

}  // namespace otom
