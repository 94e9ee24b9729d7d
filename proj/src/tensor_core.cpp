#include "otom/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace otom {

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cd> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("ComplexMatrix: entry count does not match rows*cols");
    }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cd>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("ComplexMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const cd> diag) {
    ComplexMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

ComplexMatrix ComplexMatrix::outer(std::span<const cd> u, std::span<const cd> v) {
    ComplexMatrix m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * std::conj(v[j]);
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix m = *this;
    for (auto& x : m.data_) x = std::conj(x);
    return m;
}

cd ComplexMatrix::trace() const {
    cd t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const auto& x : data_) m = std::max(m, std::abs(x));
    return m;
}

bool ComplexMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cd& x) {
        return std::isfinite(x.real()) && std::isfinite(x.imag());
    });
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch in +");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch in -");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cd s) {
    for (auto& x : data_) x *= s;
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shape mismatch in *");
    ComplexMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
        cd* crow = c.data_.data() + i * c.cols_;
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const cd aik = a.data_[i * a.cols_ + k];
            if (aik == cd{}) continue;
            const cd* brow = b.data_.data() + k * b.cols_;
            for (std::size_t j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

std::vector<cd> ComplexMatrix::apply(std::span<const cd> v) const {
    if (v.size() != cols_) throw std::invalid_argument("matrix-vector shape mismatch");
    std::vector<cd> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        cd acc = 0.0;
        const cd* r = data_.data() + i * cols_;
        for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// ---------------------------------------------------------------------------
// SubsystemLayout

SubsystemLayout::SubsystemLayout(std::vector<std::size_t> dims, std::vector<std::string> labels)
    : dims_(std::move(dims)), labels_(std::move(labels)) {
    if (dims_.size() != labels_.size()) throw std::invalid_argument("SubsystemLayout: dims/labels length mismatch");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i] == 0) throw std::invalid_argument("SubsystemLayout: zero dimension for '" + labels_[i] + "'");
        if (!seen.insert(labels_[i]).second)
            throw std::invalid_argument("SubsystemLayout: duplicate label '" + labels_[i] + "'");
        total_ *= dims_[i];
    }
}

bool SubsystemLayout::contains(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t SubsystemLayout::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::invalid_argument("unknown subsystem label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<std::size_t> SubsystemLayout::strides() const {
    std::vector<std::size_t> s(dims_.size());
    std::size_t acc = 1;
    for (std::size_t i = dims_.size(); i-- > 0;) {
        s[i] = acc;
        acc *= dims_[i];
    }
    return s;
}

std::size_t SubsystemLayout::dim_product(std::span<const std::string> labels) const {
    std::size_t p = 1;
    for (const auto& l : labels) p *= dim_of(l);
    return p;
}

SubsystemLayout SubsystemLayout::restricted(std::span<const std::string> keep) const {
    std::vector<bool> mask(dims_.size(), false);
    for (const auto& l : keep) mask[index_of(l)] = true;
    std::vector<std::size_t> d;
    std::vector<std::string> l;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (mask[i]) {
            d.push_back(dims_[i]);
            l.push_back(labels_[i]);
        }
    }
    return {std::move(d), std::move(l)};
}

double StateVector::norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Tensor operations

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix c(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cd aij = a(i, j);
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    c(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return c;
}

namespace {

void require_layout(const ComplexMatrix& m, const SubsystemLayout& layout, const char* op) {
    if (!m.square()) throw std::invalid_argument(std::string(op) + ": matrix must be square");
    if (layout.total_dim() != m.rows())
        throw std::invalid_argument(std::string(op) + ": layout dimension does not match matrix");
}

// Splits every flat index into the part carried by `mask`ed factors and the rest.
struct IndexSplit {
    std::vector<std::size_t> masked;    // flat index within the masked sub-layout
    std::vector<std::size_t> unmasked;  // flat index within the complementary sub-layout
};

IndexSplit split_indices(const SubsystemLayout& layout, const std::vector<bool>& mask) {
    const auto& dims = layout.dims();
    const std::size_t n = layout.total_dim();
    IndexSplit s{std::vector<std::size_t>(n), std::vector<std::size_t>(n)};
    std::vector<std::size_t> digit(dims.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t a = 0, b = 0;
        for (std::size_t f = 0; f < dims.size(); ++f) {
            if (mask[f]) a = a * dims[f] + digit[f];
            else b = b * dims[f] + digit[f];
        }
        s.masked[i] = a;
        s.unmasked[i] = b;
        for (std::size_t f = dims.size(); f-- > 0;) {
            if (++digit[f] < dims[f]) break;
            digit[f] = 0;
        }
    }
    return s;
}

std::vector<bool> label_mask(const SubsystemLayout& layout, std::span<const std::string> labels) {
    std::vector<bool> mask(layout.size(), false);
    for (const auto& l : labels) mask[layout.index_of(l)] = true;
    return mask;
}

}  // namespace

ReducedMatrix partial_trace(const ComplexMatrix& m, const SubsystemLayout& layout,
                            std::span<const std::string> keep) {
    require_layout(m, layout, "partial_trace");
    if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set (use the full trace)");
    const auto mask = label_mask(layout, keep);
    const auto split = split_indices(layout, mask);
    SubsystemLayout reduced = layout.restricted(keep);
    const std::size_t dk = reduced.total_dim();
    const std::size_t dt = layout.total_dim() / dk;

    // groups[t][k] = flat index with traced part t and kept part k
    std::vector<std::size_t> groups(dt * dk);
    for (std::size_t i = 0; i < layout.total_dim(); ++i) groups[split.unmasked[i] * dk + split.masked[i]] = i;

    ComplexMatrix out(dk, dk);
    for (std::size_t t = 0; t < dt; ++t) {
        const std::size_t* g = groups.data() + t * dk;
        for (std::size_t a = 0; a < dk; ++a) {
            const cd* mrow = m.row(g[a]).data();
            for (std::size_t b = 0; b < dk; ++b) out(a, b) += mrow[g[b]];
        }
    }
    return {std::move(out), std::move(reduced)};
}

ComplexMatrix partial_transpose(const ComplexMatrix& m, const SubsystemLayout& layout,
                                std::span<const std::string> subset) {
    require_layout(m, layout, "partial_transpose");
    const auto mask = label_mask(layout, subset);
    const auto marked = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    if (marked == 0 || marked == layout.size())
        throw std::invalid_argument("partial_transpose: subset must be a non-empty proper subset of the factors");
    const auto strides = layout.strides();
    const auto& dims = layout.dims();
    const std::size_t n = layout.total_dim();

    // sub[i]: contribution of the transposed factors to flat index i
    std::vector<std::size_t> sub(n, 0);
    std::vector<std::size_t> digit(dims.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t s = 0;
        for (std::size_t f = 0; f < dims.size(); ++f)
            if (mask[f]) s += digit[f] * strides[f];
        sub[i] = s;
        for (std::size_t f = dims.size(); f-- > 0;) {
            if (++digit[f] < dims[f]) break;
            digit[f] = 0;
        }
    }
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i - sub[i] + sub[j], j - sub[j] + sub[i]) = m(i, j);
    return out;
}

double hermitian_defect(const ComplexMatrix& m) {
    if (!m.square()) throw std::invalid_argument("hermitian_defect: matrix must be square");
    double d = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i; j < m.cols(); ++j) d = std::max(d, std::abs(m(i, j) - std::conj(m(j, i))));
    return d;
}

namespace {

// Cyclic Jacobi on a Hermitian matrix stored in `a` (overwritten). When `v`
// is non-null it accumulates the rotations so that a_in = V diag V†.
void jacobi_hermitian(ComplexMatrix& a, ComplexMatrix* v) {
    const std::size_t n = a.rows();
    double scale = 0.0;
    for (const auto& x : a.data()) scale += std::norm(x);
    scale = std::sqrt(scale);
    if (scale == 0.0 || n < 2) return;

    constexpr int kMaxSweeps = 100;
    const double tol = 1e-15 * scale;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) <= tol) return;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cd apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-300 || mag < 1e-18 * scale) continue;
                const cd phase = apq / mag;  // e^{i alpha}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // G_pp = c, G_pq = s e^{i alpha}, G_qp = -s e^{-i alpha}, G_qq = c
                const cd gpq = s * phase;
                const cd gqp = -s * std::conj(phase);

                for (std::size_t k = 0; k < n; ++k) {  // A <- A G
                    const cd akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp + gqp * akq;
                    a(k, q) = gpq * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {  // A <- G† A
                    const cd apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk + std::conj(gqp) * aqk;
                    a(q, k) = std::conj(gpq) * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                if (v != nullptr) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const cd vkp = (*v)(k, p), vkq = (*v)(k, q);
                        (*v)(k, p) = c * vkp + gqp * vkq;
                        (*v)(k, q) = gpq * vkp + c * vkq;
                    }
                }
            }
        }
    }
    throw NumericalError("herm_eigen: Jacobi iteration did not converge");
}

ComplexMatrix symmetrized_checked(const ComplexMatrix& m) {
    if (!m.square()) throw std::invalid_argument("herm_eigen: matrix must be square");
    if (!m.all_finite()) throw std::invalid_argument("herm_eigen: non-finite entries");
    const double defect = hermitian_defect(m);
    if (defect > kHermitianTolerance) {
        std::ostringstream os;
        os << "herm_eigen: matrix is not Hermitian (asymmetry max |m - m^dag| = " << defect << ")";
        throw std::invalid_argument(os.str());
    }
    ComplexMatrix h = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) h(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
    return h;
}

}  // namespace

HermEigResult herm_eigen(const ComplexMatrix& m) {
    ComplexMatrix a = symmetrized_checked(m);
    const std::size_t n = a.rows();
    ComplexMatrix v = ComplexMatrix::identity(n);
    jacobi_hermitian(a, &v);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });
    HermEigResult r{std::vector<double>(n), ComplexMatrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        r.eigenvalues[c] = a(order[c], order[c]).real();
        for (std::size_t k = 0; k < n; ++k) r.eigenvectors(k, c) = v(k, order[c]);
    }
    return r;
}

std::vector<double> herm_eigenvalues(const ComplexMatrix& m) {
    ComplexMatrix a = symmetrized_checked(m);
    jacobi_hermitian(a, nullptr);
    std::vector<double> ev(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) ev[i] = a(i, i).real();
    std::sort(ev.begin(), ev.end());
    return ev;
}

ComplexMatrix unitary_exp(const ComplexMatrix& h, double scale) {
    if (!h.square()) throw std::invalid_argument("unitary_exp: matrix must be square");
    if (scale == 0.0) {
        (void)symmetrized_checked(h);
        return ComplexMatrix::identity(h.rows());
    }
    const auto eig = herm_eigen(h);
    const std::size_t n = h.rows();
    ComplexMatrix vd = eig.eigenvectors;
    for (std::size_t c = 0; c < n; ++c) {
        const double ang = -scale * eig.eigenvalues[c];
        const cd ph{std::cos(ang), std::sin(ang)};
        for (std::size_t r = 0; r < n; ++r) vd(r, c) *= ph;
    }
    return vd * eig.eigenvectors.adjoint();
}

double trace_norm(const ComplexMatrix& m) {
    if (!m.square()) throw std::invalid_argument("trace_norm: matrix must be square");
    if (hermitian_defect(m) <= kHermitianTolerance) {
        double s = 0.0;
        for (double x : herm_eigenvalues(m)) s += std::abs(x);
        return s;
    }
    double s = 0.0;
    for (double x : herm_eigenvalues(m.adjoint() * m)) s += std::sqrt(std::max(0.0, x));
    return s;
}

// ---------------------------------------------------------------------------
// Fourier transforms

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

cd unit_root(std::size_t q, std::size_t n, int sign) {
    const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(q % n) / static_cast<double>(n);
    return {std::cos(ang), std::sin(ang)};
}

void fft_radix2(std::span<cd> x, int sign) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        std::vector<cd> w(half);
        for (std::size_t k = 0; k < half; ++k) w[k] = unit_root(k, len, sign);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cd u = x[i + k];
                const cd t = w[k] * x[i + k + half];
                x[i + k] = u + t;
                x[i + k + half] = u - t;
            }
        }
    }
}

void dft_direct(std::span<cd> x, int sign) {
    const std::size_t n = x.size();
    std::vector<cd> roots(n);
    for (std::size_t q = 0; q < n; ++q) roots[q] = unit_root(q, n, sign);
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc = 0.0;
        std::size_t q = 0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * roots[q];
            q += k;
            if (q >= n) q -= n;
        }
        out[k] = acc;
    }
    std::copy(out.begin(), out.end(), x.begin());
}

}  // namespace

void dft_inplace(std::span<cd> x, FourierDirection direction) {
    const int sign = direction == FourierDirection::forward ? -1 : +1;
    if (x.size() <= 1) return;
    if (is_power_of_two(x.size())) fft_radix2(x, sign);
    else dft_direct(x, sign);
}

namespace {

void require_even(std::size_t len) {
    if (len == 0 || len % 2 != 0) throw std::invalid_argument("Fourier change of basis requires an even dimension");
}

}  // namespace

MomentumFourierPlan::MomentumFourierPlan(std::size_t len)
    : len_(len), radix2_(is_power_of_two(len)), roots_(len), shift_(len) {
    require_even(len);
    for (std::size_t q = 0; q < len; ++q) roots_[q] = unit_root(q, len, +1);
    // e^{2 pi i j (N+1) / (2N)} places momentum label m = i - N + 1 at DFT bin i.
    const std::size_t n_half = len / 2;
    const double s = 1.0 / std::sqrt(static_cast<double>(len));
    for (std::size_t j = 0; j < len; ++j) shift_[j] = roots_[(j * (n_half + 1)) % len] * s;
    if (radix2_) {
        bitrev_.resize(len);
        for (std::size_t i = 1, j = 0; i < len; ++i) {
            std::size_t bit = len >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            bitrev_[i] = j;
        }
    }
}

void MomentumFourierPlan::transform(std::span<cd> x, int sign) const {
    const std::size_t n = len_;
    if (!radix2_) {
        dft_direct(x, sign);
        return;
    }
    for (std::size_t i = 1; i < n; ++i)
        if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cd r = roots_[k * step];
                const cd w = sign > 0 ? r : std::conj(r);
                const cd u = x[i + k];
                const cd t = w * x[i + k + half];
                x[i + k] = u + t;
                x[i + k + half] = u - t;
            }
        }
    }
}

void MomentumFourierPlan::to_position(std::span<cd> line) const {
    if (line.size() != len_) throw std::invalid_argument("MomentumFourierPlan: length mismatch");
    transform(line, +1);
    for (std::size_t j = 0; j < len_; ++j) line[j] *= shift_[j];
}

void MomentumFourierPlan::to_momentum(std::span<cd> line) const {
    if (line.size() != len_) throw std::invalid_argument("MomentumFourierPlan: length mismatch");
    for (std::size_t j = 0; j < len_; ++j) line[j] *= std::conj(shift_[j]);
    transform(line, -1);
}

void momentum_to_position(std::span<cd> line) {
    require_even(line.size());
    MomentumFourierPlan(line.size()).to_position(line);
}

void position_to_momentum(std::span<cd> line) {
    require_even(line.size());
    MomentumFourierPlan(line.size()).to_momentum(line);
}

StateVector fourier_change_of_basis(const StateVector& v, const std::string& axis, FourierDirection direction) {
    const std::size_t f = v.layout.index_of(axis);
    const std::size_t len = v.layout.dims()[f];
    require_even(len);
    if (v.amplitudes.size() != v.layout.total_dim())
        throw std::invalid_argument("fourier_change_of_basis: amplitude count does not match layout");
    const std::size_t stride = v.layout.strides()[f];
    const std::size_t outer = v.layout.total_dim() / (len * stride);

    StateVector out = v;
    const MomentumFourierPlan plan(len);
    std::vector<cd> line(len);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < stride; ++in) {
            const std::size_t base = o * len * stride + in;
            for (std::size_t j = 0; j < len; ++j) line[j] = out.amplitudes[base + j * stride];
            if (direction == FourierDirection::forward) plan.to_position(line);
            else plan.to_momentum(line);
            for (std::size_t j = 0; j < len; ++j) out.amplitudes[base + j * stride] = line[j];
        }
    }
    return out;
}

}  // namespace otom
