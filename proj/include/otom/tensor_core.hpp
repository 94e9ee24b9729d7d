#pragma once

// Dense complex linear algebra with subsystem-aware tensor operations.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace otom {

using cd = std::complex<double>;

/// Raised when a numerical routine cannot produce a trustworthy result
/// (non-convergence, invalid state produced by a computation).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cd> entries);
    ComplexMatrix(std::initializer_list<std::initializer_list<cd>> rows);

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
    static ComplexMatrix diagonal(std::span<const cd> diag);
    /// |bra⟩⟨ket| style outer product u v†.
    static ComplexMatrix outer(std::span<const cd> u, std::span<const cd> v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cd& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cd& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<cd> data() { return data_; }
    std::span<const cd> data() const { return data_; }
    std::span<cd> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const cd> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conj() const;
    cd trace() const;
    /// Largest entry modulus.
    double max_abs() const;
    bool all_finite() const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cd s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cd s) { return a *= s; }
    friend ComplexMatrix operator*(cd s, ComplexMatrix a) { return a *= s; }
    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

    std::vector<cd> apply(std::span<const cd> v) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cd> data_;
};

/// Max-entry distance between two equally shaped matrices.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// Ordered tensor-factor structure of a Hilbert space. The first factor is
/// the most significant digit of the flat index.
class SubsystemLayout {
public:
    SubsystemLayout() = default;
    SubsystemLayout(std::vector<std::size_t> dims, std::vector<std::string> labels);

    const std::vector<std::size_t>& dims() const { return dims_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return dims_.size(); }
    std::size_t total_dim() const { return total_; }

    bool contains(const std::string& label) const;
    /// Position of a label; throws std::invalid_argument if absent.
    std::size_t index_of(const std::string& label) const;
    std::size_t dim_of(const std::string& label) const { return dims_[index_of(label)]; }
    /// Flat-index stride of each factor.
    std::vector<std::size_t> strides() const;
    std::size_t dim_product(std::span<const std::string> labels) const;

    /// Layout restricted to the given labels, keeping this layout's order.
    SubsystemLayout restricted(std::span<const std::string> keep) const;

    bool operator==(const SubsystemLayout&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::string> labels_;
    std::size_t total_ = 1;
};

/// Amplitude vector annotated with its subsystem structure.
struct StateVector {
    std::vector<cd> amplitudes;
    SubsystemLayout layout;

    double norm() const;
};

struct HermEigResult {
    std::vector<double> eigenvalues;  // ascending
    ComplexMatrix eigenvectors;       // columns
};

/// Absolute tolerance on max-entry asymmetry accepted by herm_eigen.
inline constexpr double kHermitianTolerance = 1e-10;

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

struct ReducedMatrix {
    ComplexMatrix matrix;
    SubsystemLayout layout;
};

/// Traces out every subsystem not named in `keep`. The reduced layout keeps
/// the original factor order.
ReducedMatrix partial_trace(const ComplexMatrix& m, const SubsystemLayout& layout,
                            std::span<const std::string> keep);

/// Transposes the indices of the subsystems named in `subset`.
ComplexMatrix partial_transpose(const ComplexMatrix& m, const SubsystemLayout& layout,
                                std::span<const std::string> subset);

/// Maximum entry of |m - m†|.
double hermitian_defect(const ComplexMatrix& m);

/// Full spectral decomposition of a Hermitian matrix by cyclic Jacobi
/// rotations. The input is symmetrized as (m + m†)/2 before solving.
HermEigResult herm_eigen(const ComplexMatrix& m);

/// Eigenvalues only; same solver, no eigenvector accumulation.
std::vector<double> herm_eigenvalues(const ComplexMatrix& m);

/// exp(-i * scale * h) for Hermitian h.
ComplexMatrix unitary_exp(const ComplexMatrix& h, double scale);

/// Sum of singular values (sum of |eigenvalues| when m is Hermitian).
double trace_norm(const ComplexMatrix& m);

enum class FourierDirection { forward, inverse };

/// In-place unnormalized DFT: X_k = sum_j x_j exp(sign * 2 pi i j k / n) with
/// sign = -1 for forward, +1 for inverse. Radix-2 when n is a power of two,
/// direct O(n^2) otherwise.
void dft_inplace(std::span<cd> x, FourierDirection direction);

/// Momentum <-> position change of basis on one even-dimensional subsystem.
///
/// Basis index i of a 2N-dimensional axis carries the momentum label
/// m = i - N + 1, so m ranges over [-N+1, N]. Forward maps momentum amplitudes
/// to position-grid amplitudes on theta_j = 2 pi j / (2N):
///     psi(theta_j) = (2N)^{-1/2} sum_m exp(i theta_j m) c_m.
/// Inverse undoes it exactly.
StateVector fourier_change_of_basis(const StateVector& v, const std::string& axis,
                                    FourierDirection direction);

/// Transform of a contiguous 2N-length momentum line (same convention as above).
void momentum_to_position(std::span<cd> line);
void position_to_momentum(std::span<cd> line);

/// Precomputed momentum/position transform for a fixed even length; reuse it
/// when the same transform is applied many times. Immutable after construction.
class MomentumFourierPlan {
public:
    explicit MomentumFourierPlan(std::size_t len);

    std::size_t size() const { return len_; }
    void to_position(std::span<cd> line) const;
    void to_momentum(std::span<cd> line) const;

private:
    void transform(std::span<cd> x, int sign) const;

    std::size_t len_;
    bool radix2_;
    std::vector<std::size_t> bitrev_;
    std::vector<cd> roots_;  // e^{+2 pi i q / len}
    std::vector<cd> shift_;  // pre-scaled by len^{-1/2}
};

bool is_power_of_two(std::size_t n);

}  // namespace otom
