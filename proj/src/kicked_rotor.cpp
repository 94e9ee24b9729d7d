#include "otom/kicked_rotor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace otom {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kSpin = 2;
}  // namespace

void QkrParams::validate() const {
    for (double x : {k, hbar_eff, v1, v2, v3})
        if (!std::isfinite(x)) throw std::invalid_argument("QkrParams: non-finite parameter");
    if (rotor_dim() < 8) throw std::invalid_argument("QkrParams: rotor dimension 2N must be at least 8");
    if (!(hbar_eff > 0.0)) throw std::invalid_argument("QkrParams: hbar_eff must be positive");
}

std::size_t momentum_index(const QkrParams& p, long m) {
    const long n = static_cast<long>(p.n_trunc);
    if (m < -n + 1 || m > n) throw std::invalid_argument("momentum label outside [-N+1, N]");
    return static_cast<std::size_t>(m + n - 1);
}

ComplexMatrix build_hf(const QkrParams& p) {
    p.validate();
    const std::size_t d = p.rotor_dim();
    const long n = static_cast<long>(p.n_trunc);
    ComplexMatrix h(d * kSpin, d * kSpin);
    for (std::size_t i = 0; i < d; ++i) {
        const double m = static_cast<double>(static_cast<long>(i) - n + 1);
        for (std::size_t s = 0; s < kSpin; ++s) h(i * kSpin + s, i * kSpin + s) = 0.5 * m * m;
    }
    return h;
}

ComplexMatrix build_hk(const QkrParams& p) {
    p.validate();
    using namespace std::complex_literals;
    const std::size_t d = p.rotor_dim();
    const long len = static_cast<long>(d), n = static_cast<long>(p.n_trunc);
    const auto delta = [](long r, long v) { return r == v ? 1.0 : 0.0; };
    ComplexMatrix h(d * kSpin, d * kSpin);
    for (long i = 0; i < len; ++i)
        for (long j = 0; j < len; ++j) {
            long r = ((i - j) % len + len) % len;  // m - m' modulo 2N, into (-N, N]
            if (r > n) r -= len;
            if (std::abs(r) > 3) continue;
            const cd h00 = 0.5 * (delta(r, 1) + delta(r, -1) + 1i * p.v3 * delta(r, 3) - 1i * p.v3 * delta(r, -3));
            const cd h01 = 0.5 * (1i * p.v1 * delta(r, 1) - 1i * p.v1 * delta(r, -1) - p.v2 * delta(r, -2) +
                                  p.v2 * delta(r, 2));
            const cd h10 = 0.5 * (1i * p.v1 * delta(r, 1) - 1i * p.v1 * delta(r, -1) + p.v2 * delta(r, -2) -
                                  p.v2 * delta(r, 2));
            const cd h11 = 0.5 * (delta(r, 1) + delta(r, -1) + 1i * p.v3 * delta(r, -3) - 1i * p.v3 * delta(r, 3));
            const auto row = static_cast<std::size_t>(i) * kSpin, col = static_cast<std::size_t>(j) * kSpin;
            h(row, col) = h00;
            h(row, col + 1) = h01;
            h(row + 1, col) = h10;
            h(row + 1, col + 1) = h11;
        }
    return h;
}

ComplexMatrix floquet_dense(const QkrParams& p) {
    p.validate();
    if (p.rotor_dim() > kMaxDenseRotorDim) {
        std::ostringstream os;
        os << "floquet_dense: rotor dimension " << p.rotor_dim() << " exceeds " << kMaxDenseRotorDim
           << "; use the split-step FloquetOperator";
        throw std::invalid_argument(os.str());
    }
    const ComplexMatrix hf = build_hf(p);
    std::vector<cd> drift(hf.rows());
    for (std::size_t i = 0; i < hf.rows(); ++i) drift[i] = std::exp(cd(0.0, -p.hbar_eff * hf(i, i).real()));
    return ComplexMatrix::diagonal(drift) * unitary_exp(build_hk(p), p.k / p.hbar_eff);
}

// ---------------------------------------------------------------------------
// Split-step propagator

FloquetOperator::FloquetOperator(const QkrParams& p) : p_(p), plan_((p.validate(), p.rotor_dim())) {
    const std::size_t d = p_.rotor_dim();
    const long n = static_cast<long>(p_.n_trunc);
    drift_.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double m = static_cast<double>(static_cast<long>(i) - n + 1);
        drift_[i] = std::exp(cd(0.0, -p_.hbar_eff * 0.5 * m * m));
    }
    // The momentum-space elements place the Fourier coefficient of V(theta) at
    // r = m - m', which is the grid potential evaluated at -theta.
    const double alpha = p_.k / p_.hbar_eff;
    kick_.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double th = -kTwoPi * static_cast<double>(j) / static_cast<double>(d);
        const double c0 = std::cos(th);
        const double nx = p_.v1 * std::sin(th), ny = p_.v2 * std::sin(2 * th), nz = p_.v3 * std::sin(3 * th);
        const double nn = std::sqrt(nx * nx + ny * ny + nz * nz);
        const cd ph = std::exp(cd(0.0, -alpha * c0));
        const double cs = std::cos(alpha * nn);
        // sin(alpha |n|) / |n| with its limit alpha at |n| = 0
        const double sn = nn > 1e-300 ? std::sin(alpha * nn) / nn : alpha;
        const cd mi(0.0, -1.0);
        kick_[j] = {ph * (cs + mi * sn * nz), ph * (mi * sn * cd(nx, -ny)), ph * (mi * sn * cd(nx, ny)),
                    ph * (cs - mi * sn * nz)};
    }
}

void FloquetOperator::period(std::span<cd> l0, std::span<cd> l1, KickDirection dir) const {
    const std::size_t d = rotor_dim();
    if (dir == KickDirection::backward)
        for (std::size_t i = 0; i < d; ++i) {
            l0[i] *= std::conj(drift_[i]);
            l1[i] *= std::conj(drift_[i]);
        }
    plan_.to_position(l0);
    plan_.to_position(l1);
    for (std::size_t j = 0; j < d; ++j) {
        const auto& b = kick_[j];
        const cd a = l0[j], c = l1[j];
        if (dir == KickDirection::forward) {
            l0[j] = b[0] * a + b[1] * c;
            l1[j] = b[2] * a + b[3] * c;
        } else {
            l0[j] = std::conj(b[0]) * a + std::conj(b[2]) * c;
            l1[j] = std::conj(b[1]) * a + std::conj(b[3]) * c;
        }
    }
    plan_.to_momentum(l0);
    plan_.to_momentum(l1);
    if (dir == KickDirection::forward)
        for (std::size_t i = 0; i < d; ++i) {
            l0[i] *= drift_[i];
            l1[i] *= drift_[i];
        }
}

void FloquetOperator::apply(std::span<cd> psi, const SubsystemLayout& layout, KickDirection dir,
                            std::size_t kicks) const {
    if (psi.size() != layout.total_dim()) throw std::invalid_argument("FloquetOperator: amplitude count mismatch");
    if (layout.dim_of("rotor") != rotor_dim() || layout.dim_of("spin") != kSpin)
        throw std::invalid_argument("FloquetOperator: layout rotor/spin dimensions do not match the operator");
    if (kicks == 0) return;
    const auto strides = layout.strides();
    const std::size_t fr = layout.index_of("rotor"), fs = layout.index_of("spin");
    const std::size_t sr = strides[fr], ss = strides[fs];
    const std::size_t d = rotor_dim();
    std::vector<cd> l0(d), l1(d);
    // walk every index whose rotor and spin digits are both zero
    const auto& dims = layout.dims();
    std::vector<std::size_t> digit(dims.size(), 0);
    const std::size_t bases = layout.total_dim() / (d * kSpin);
    for (std::size_t b = 0; b < bases; ++b) {
        std::size_t base = 0;
        for (std::size_t f = 0; f < dims.size(); ++f) base += digit[f] * strides[f];
        for (std::size_t i = 0; i < d; ++i) {
            l0[i] = psi[base + i * sr];
            l1[i] = psi[base + i * sr + ss];
        }
        for (std::size_t t = 0; t < kicks; ++t) period(l0, l1, dir);
        for (std::size_t i = 0; i < d; ++i) {
            psi[base + i * sr] = l0[i];
            psi[base + i * sr + ss] = l1[i];
        }
        for (std::size_t f = dims.size(); f-- > 0;) {
            if (f == fr || f == fs) continue;
            if (++digit[f] < dims[f]) break;
            digit[f] = 0;
        }
    }
}

ComplexMatrix FloquetOperator::dense() const {
    const std::size_t n = rotor_dim() * kSpin;
    const SubsystemLayout l({rotor_dim(), kSpin}, {"rotor", "spin"});
    ComplexMatrix u(n, n);
    std::vector<cd> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), cd{});
        col[j] = 1.0;
        apply(col, l, KickDirection::forward);
        for (std::size_t i = 0; i < n; ++i) u(i, j) = col[i];
    }
    return u;
}

FloquetOperator floquet_splitstep(const QkrParams& p) { return FloquetOperator(p); }

PureState evolve_kicks(const PureState& state, const FloquetOperator& f, std::size_t n, KickDirection dir) {
    std::vector<cd> amp = state.amplitudes();
    f.apply(amp, state.layout(), dir, n);
    return PureState(std::move(amp), state.layout());
}

KickedRotorEvolution::KickedRotorEvolution(std::shared_ptr<const FloquetOperator> f, std::size_t kicks)
    : f_(std::move(f)), kicks_(kicks) {
    if (!f_) throw std::invalid_argument("KickedRotorEvolution: missing Floquet operator");
    layout_ = SubsystemLayout({kSpin, f_->rotor_dim()}, {"spin", "rotor"});
}

void KickedRotorEvolution::forward(std::span<cd> psi) const { f_->apply(psi, layout_, KickDirection::forward, kicks_); }

void KickedRotorEvolution::backward(std::span<cd> psi) const {
    f_->apply(psi, layout_, KickDirection::backward, kicks_);
}

// ---------------------------------------------------------------------------
// Standard map

double wrap_angle(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

ChirikovState chirikov_step(ChirikovState s, double k) {
    const double p = wrap_angle(s.p + k * std::sin(s.theta));
    return {wrap_angle(s.theta + p), p};
}

std::vector<ChirikovState> chirikov_grid(std::size_t n_theta, std::size_t n_p) {
    std::vector<ChirikovState> g;
    g.reserve(n_theta * n_p);
    for (std::size_t i = 0; i < n_theta; ++i)
        for (std::size_t j = 0; j < n_p; ++j)
            g.push_back({kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n_theta),
                         kTwoPi * (static_cast<double>(j) + 0.5) / static_cast<double>(n_p)});
    return g;
}

std::vector<std::vector<ChirikovState>> chirikov_portrait(double k, std::span<const ChirikovState> initial,
                                                          std::size_t iterations) {
    if (iterations < 1) throw std::invalid_argument("chirikov_portrait: iterations must be at least 1");
    if (!std::isfinite(k)) throw std::invalid_argument("chirikov_portrait: k must be finite");
    std::vector<std::vector<ChirikovState>> orbits;
    orbits.reserve(initial.size());
    for (const auto& s0 : initial) {
        std::vector<ChirikovState> o;
        o.reserve(iterations);
        ChirikovState s{wrap_angle(s0.theta), wrap_angle(s0.p)};
        for (std::size_t n = 0; n < iterations; ++n) {
            s = chirikov_step(s, k);
            o.push_back(s);
        }
        orbits.push_back(std::move(o));
    }
    return orbits;
}

double orbit_momentum_spread(std::span<const ChirikovState> orbit) {
    if (orbit.empty()) return 0.0;
    double c = 0.0, s = 0.0;
    for (const auto& x : orbit) {
        c += std::cos(x.p);
        s += std::sin(x.p);
    }
    const double r = std::hypot(c, s) / static_cast<double>(orbit.size());
    if (r >= 1.0) return 0.0;
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(-2.0 * std::log(r));
}

std::size_t iterations_to_fill_momentum_bins(std::span<const ChirikovState> orbit, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("bin count must be positive");
    std::vector<bool> seen(bins, false);
    std::size_t count = 0;
    for (std::size_t n = 0; n < orbit.size(); ++n) {
        auto b = static_cast<std::size_t>(orbit[n].p / kTwoPi * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        if (!seen[b]) {
            seen[b] = true;
            if (++count == bins) return n + 1;
        }
    }
    return 0;
}

}  // namespace otom
