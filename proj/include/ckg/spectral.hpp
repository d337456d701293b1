#pragma once

#include "ckg/embedding.hpp"
#include "ckg/kg_data.hpp"
#include "ckg/matrix.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace ckg {

using Complex = std::complex<double>;

/// Dense complex matrix stored as separate real and imaginary parts.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols) : re_(rows, cols), im_(rows, cols) {}
    ComplexMatrix(RealMatrix re, RealMatrix im);
    static ComplexMatrix from_real(const RealMatrix& re);
    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return re_.rows(); }
    std::size_t cols() const noexcept { return re_.cols(); }
    bool is_square() const noexcept { return rows() == cols(); }

    Complex operator()(std::size_t i, std::size_t j) const { return {re_(i, j), im_(i, j)}; }
    void set(std::size_t i, std::size_t j, Complex v) {
        re_(i, j) = v.real();
        im_(i, j) = v.imag();
    }

    const RealMatrix& re() const noexcept { return re_; }
    const RealMatrix& im() const noexcept { return im_; }

    ComplexMatrix adjoint() const;

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    RealMatrix re_;
    RealMatrix im_;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
double frobenius_norm(const ComplexMatrix& m);
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b);

/// Z = E diag(W) E*. E has orthonormal columns.
struct UnitaryDiagonalization {
    ComplexMatrix E;
    std::vector<Complex> W;

    std::size_t columns() const noexcept { return W.size(); }
    ComplexMatrix reconstruct() const;
    /// max |(E*E - I)_ij|
    double unitarity_residual() const;
};

/// Hermitian eigendecomposition; values in descending order, vectors as columns.
struct HermitianEigen {
    std::vector<double> values;
    ComplexMatrix vectors;
};

inline constexpr std::size_t kMaxSpectralSize = 64;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is at most
/// 1e-12 * ||H||_F (at most 100 sweeps). The input must be Hermitian.
HermitianEigen jacobi_hermitian(const ComplexMatrix& H);

/// Z = X + i X^T, which is normal for every real square X.
ComplexMatrix lift_to_normal(const RealMatrix& X);

/// ||Z Z* - Z* Z||_F
double commutator_residual(const ComplexMatrix& Z);

/// ||Z Z* - Z* Z||_F <= tol * max(1, ||Z||_F^2). Throws SpectralError when Z is not square.
bool is_normal(const ComplexMatrix& Z, double tol);

/// Unitary diagonalization of a normal matrix via its commuting Hermitian parts
/// (Z + Z*)/2 and (Z - Z*)/(2i): Jacobi on the first, then Jacobi on the second
/// projected into each eigenvalue cluster of the first. Eigenpairs are ordered by
/// descending |w|, ties by descending real part. Throws SpectralError for
/// non-square, oversized (n > 64) or non-normal input.
UnitaryDiagonalization diagonalize_normal(const ComplexMatrix& Z);

/// Singular values of X, descending, via the symmetric embedding [[0, X], [X^T, 0]].
std::vector<double> singular_values(const RealMatrix& X);

/// Number of singular values above rel_tol * sigma_max (0 for the zero matrix).
std::size_t numerical_rank(const RealMatrix& X, double rel_tol = 1e-8);

/// Diagonalizes X + i X^T and keeps eigenpairs with |w| > 1e-8 max|w|, at most 2k
/// of them. Throws SpectralError naming the observed rank when rank(X) > k.
UnitaryDiagonalization rank_bounded_decomposition(const RealMatrix& X, std::size_t k);

/// Re(E diag(W) E*)
RealMatrix real_part_reconstruction(const ComplexMatrix& E, std::span<const Complex> W);

/// Shared E = [E_1 ... E_m] (n x nm) with per-matrix diagonals that vanish
/// outside their own block, so that X_i = Re(E diag(lambda_i) E*).
struct BlockDecomposition {
    ComplexMatrix E;
    std::vector<std::vector<Complex>> lambdas;

    RealMatrix reconstruct(std::size_t i) const { return real_part_reconstruction(E, lambdas.at(i)); }
};

BlockDecomposition block_tensor_decomposition(std::span<const RealMatrix> matrices);

/// Dense n x n score matrix of relation r.
RealMatrix dense_scores(const ParameterSet& params, RelationId r);

struct SymmetricAntisymmetricSplit {
    RealMatrix symmetric;      // E' W'_r E'^T + E'' W'_r E''^T
    RealMatrix antisymmetric;  // E' W''_r E''^T - E'' W''_r E'^T
};

inline constexpr std::size_t kMaxDenseEntities = 4096;

/// ComplEx only; n must not exceed 4096.
SymmetricAntisymmetricSplit split_symmetric_antisymmetric(const ParameterSet& params, RelationId r);

// Text grids: whitespace-separated reals per row; complex cells are "re im"
// pairs separated by tabs.
RealMatrix read_real_grid(std::istream& in);
RealMatrix read_real_grid(const std::filesystem::path& path);
void write_real_grid(std::ostream& out, const RealMatrix& m);
void write_complex_grid(std::ostream& out, const ComplexMatrix& m);
ComplexMatrix read_complex_grid(std::istream& in);

}  // namespace ckg
