#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace dolbeault {

using cplx = std::complex<double>;

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  cplx value;
};

/// Row-compressed complex sparse matrix.
///
/// Built from triplets with a stable (row, col) sort, duplicates summed in
/// insertion order, so identical assembly sequences give bitwise-identical
/// storage.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::int32_t rows, std::int32_t cols, std::vector<Triplet> triplets);

  std::int32_t rows() const { return rows_; }
  std::int32_t cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const std::int32_t> row_offsets() const { return row_ptr_; }
  std::span<const std::int32_t> col_indices() const { return col_idx_; }
  std::span<const cplx> values() const { return values_; }

  /// y = A x
  void apply(std::span<const cplx> x, std::span<cplx> y) const;
  std::vector<cplx> apply(std::span<const cplx> x) const;

  /// Entry lookup by binary search within the row; zero when absent.
  cplx at(std::int32_t row, std::int32_t col) const;

  CsrMatrix adjoint() const;

  /// Max over entries of |A_ij - conj(A_ji)|.
  double hermiticity_defect() const;

  /// Max row sum of absolute values; an upper bound on the spectral radius
  /// for Hermitian matrices.
  double gershgorin_bound() const;

  double frobenius_norm() const;

  /// Dense row-major copy.
  std::vector<cplx> to_dense() const;

  std::vector<Triplet> to_triplets() const;

  /// One line per stored entry: "row col re im", 17 significant digits.
  void write_triplets(std::ostream& out) const;

  /// FNV-1a over dimensions, indices and raw value bytes.
  std::uint64_t fingerprint() const;

 private:
  std::int32_t rows_ = 0;
  std::int32_t cols_ = 0;
  std::vector<std::int32_t> row_ptr_{0};
  std::vector<std::int32_t> col_idx_;
  std::vector<cplx> values_;
};

/// B^H B, assembled from the upper triangle and mirrored so the result is
/// Hermitian exactly (diagonal imaginary parts are zero).
CsrMatrix gram(const CsrMatrix& b);

/// a*A + b*B for matrices of equal shape.
CsrMatrix linear_combination(cplx a, const CsrMatrix& lhs, cplx b, const CsrMatrix& rhs);

CsrMatrix diagonal_matrix(std::span<const double> diag);

/// A (x) I_m + I_n (x) B, the Kronecker sum on the product space.
CsrMatrix kronecker_sum(const CsrMatrix& a, const CsrMatrix& b);

// Small dense-vector helpers shared by the solvers.
cplx dot(std::span<const cplx> x, std::span<const cplx> y);  // x^H y
double norm2(std::span<const cplx> x);
void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y);
void scale(cplx a, std::span<cplx> x);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace dolbeault
