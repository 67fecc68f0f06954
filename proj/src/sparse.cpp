#include "dolbeault/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dolbeault/errors.hpp"

namespace dolbeault {

CsrMatrix::CsrMatrix(std::int32_t rows, std::int32_t cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ValidationError("CsrMatrix: negative dimension");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw ValidationError("CsrMatrix: triplet index out of range");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  col_idx_.reserve(triplets.size());
  values_.reserve(triplets.size());
  std::int32_t last_row = -1;
  std::int32_t last_col = -1;
  for (const auto& t : triplets) {
    if (t.row == last_row && t.col == last_col) {
      values_.back() += t.value;
      continue;
    }
    col_idx_.push_back(t.col);
    values_.push_back(t.value);
    ++row_ptr_[static_cast<std::size_t>(t.row) + 1];
    last_row = t.row;
    last_col = t.col;
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) row_ptr_[r + 1] += row_ptr_[r];
}

void CsrMatrix::apply(std::span<const cplx> x, std::span<cplx> y) const {
  if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_))
    throw ValidationError("CsrMatrix::apply: dimension mismatch");
  for (std::int32_t r = 0; r < rows_; ++r) {
    // Split real/imag accumulation; std::complex multiply is slow without -ffast-math.
    double re = 0.0;
    double im = 0.0;
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const cplx a = values_[p];
      const cplx b = x[col_idx_[p]];
      re += a.real() * b.real() - a.imag() * b.imag();
      im += a.real() * b.imag() + a.imag() * b.real();
    }
    y[r] = {re, im};
  }
}

std::vector<cplx> CsrMatrix::apply(std::span<const cplx> x) const {
  std::vector<cplx> y(static_cast<std::size_t>(rows_));
  apply(x, y);
  return y;
}

cplx CsrMatrix::at(std::int32_t row, std::int32_t col) const {
  const auto begin = col_idx_.begin() + row_ptr_[row];
  const auto end = col_idx_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return {0.0, 0.0};
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

CsrMatrix CsrMatrix::adjoint() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (std::int32_t r = 0; r < rows_; ++r)
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      t.push_back({col_idx_[p], r, std::conj(values_[p])});
  return CsrMatrix(cols_, rows_, std::move(t));
}

double CsrMatrix::hermiticity_defect() const {
  if (rows_ != cols_) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::int32_t r = 0; r < rows_; ++r)
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      worst = std::max(worst, std::abs(values_[p] - std::conj(at(col_idx_[p], r))));
  return worst;
}

double CsrMatrix::gershgorin_bound() const {
  double bound = 0.0;
  for (std::int32_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += std::abs(values_[p]);
    bound = std::max(bound, s);
  }
  return bound;
}

double CsrMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : values_) s += std::norm(v);
  return std::sqrt(s);
}

std::vector<cplx> CsrMatrix::to_dense() const {
  std::vector<cplx> d(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_));
  for (std::int32_t r = 0; r < rows_; ++r)
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      d[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + col_idx_[p]] = values_[p];
  return d;
}

std::vector<Triplet> CsrMatrix::to_triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (std::int32_t r = 0; r < rows_; ++r)
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) t.push_back({r, col_idx_[p], values_[p]});
  return t;
}

void CsrMatrix::write_triplets(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (std::int32_t r = 0; r < rows_; ++r)
    for (std::int32_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      out << r << ' ' << col_idx_[p] << ' ' << values_[p].real() << ' ' << values_[p].imag() << '\n';
  out.precision(old_precision);
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t CsrMatrix::fingerprint() const {
  std::uint64_t h = fnv1a(&rows_, sizeof rows_);
  h = fnv1a(&cols_, sizeof cols_, h);
  h = fnv1a(row_ptr_.data(), row_ptr_.size() * sizeof(std::int32_t), h);
  h = fnv1a(col_idx_.data(), col_idx_.size() * sizeof(std::int32_t), h);
  return fnv1a(values_.data(), values_.size() * sizeof(cplx), h);
}

CsrMatrix gram(const CsrMatrix& b) {
  // Column-wise access to B through its adjoint: row i of B^H is column i of B.
  const CsrMatrix bh = b.adjoint();
  const auto n = b.cols();
  const auto bh_ptr = bh.row_offsets();
  const auto bh_col = bh.col_indices();
  const auto bh_val = bh.values();
  const auto b_ptr = b.row_offsets();
  const auto b_col = b.col_indices();
  const auto b_val = b.values();

  std::vector<Triplet> upper;
  std::vector<cplx> acc(static_cast<std::size_t>(n));
  std::vector<char> touched(static_cast<std::size_t>(n), 0);
  std::vector<std::int32_t> pattern;
  for (std::int32_t i = 0; i < n; ++i) {
    pattern.clear();
    // (B^H B)_{ij} = sum_k conj(B_ki) B_kj
    for (std::int32_t p = bh_ptr[i]; p < bh_ptr[i + 1]; ++p) {
      const std::int32_t k = bh_col[p];
      const cplx left = bh_val[p];
      for (std::int32_t q = b_ptr[k]; q < b_ptr[k + 1]; ++q) {
        const std::int32_t j = b_col[q];
        if (j < i) continue;
        if (!touched[j]) {
          touched[j] = 1;
          pattern.push_back(j);
        }
        acc[j] += left * b_val[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (const auto j : pattern) {
      cplx v = acc[j];
      if (j == i) v = {v.real(), 0.0};
      upper.push_back({i, j, v});
      acc[j] = {0.0, 0.0};
      touched[j] = 0;
    }
  }
  std::vector<Triplet> all;
  all.reserve(2 * upper.size());
  for (const auto& t : upper) {
    all.push_back(t);
    if (t.row != t.col) all.push_back({t.col, t.row, std::conj(t.value)});
  }
  return CsrMatrix(n, n, std::move(all));
}

CsrMatrix linear_combination(cplx a, const CsrMatrix& lhs, cplx b, const CsrMatrix& rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols())
    throw ValidationError("linear_combination: shape mismatch");
  std::vector<Triplet> t;
  t.reserve(lhs.nonzeros() + rhs.nonzeros());
  for (auto x : lhs.to_triplets()) t.push_back({x.row, x.col, a * x.value});
  for (auto x : rhs.to_triplets()) t.push_back({x.row, x.col, b * x.value});
  return CsrMatrix(lhs.rows(), lhs.cols(), std::move(t));
}

CsrMatrix diagonal_matrix(std::span<const double> diag) {
  std::vector<Triplet> t;
  t.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i)
    t.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(i), {diag[i], 0.0}});
  const auto n = static_cast<std::int32_t>(diag.size());
  return CsrMatrix(n, n, std::move(t));
}

CsrMatrix kronecker_sum(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols())
    throw ValidationError("kronecker_sum: operands must be square");
  const std::int32_t na = a.rows();
  const std::int32_t nb = b.rows();
  std::vector<Triplet> t;
  t.reserve(a.nonzeros() * static_cast<std::size_t>(nb) + b.nonzeros() * static_cast<std::size_t>(na));
  // index (i, j) -> i * nb + j, i over A's space
  for (const auto& x : a.to_triplets())
    for (std::int32_t j = 0; j < nb; ++j) t.push_back({x.row * nb + j, x.col * nb + j, x.value});
  for (std::int32_t i = 0; i < na; ++i)
    for (const auto& y : b.to_triplets()) t.push_back({i * nb + y.row, i * nb + y.col, y.value});
  return CsrMatrix(na * nb, na * nb, std::move(t));
}

cplx dot(std::span<const cplx> x, std::span<const cplx> y) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    const double yr = y[i].real();
    const double yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return {re, im};
}

double norm2(std::span<const cplx> x) {
  double s = 0.0;
  for (const auto& v : x) s += v.real() * v.real() + v.imag() * v.imag();
  return std::sqrt(s);
}

void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
  const double ar = a.real();
  const double ai = a.imag();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] = {y[i].real() + ar * xr - ai * xi, y[i].imag() + ar * xi + ai * xr};
  }
}

void scale(cplx a, std::span<cplx> x) {
  for (auto& v : x) v = {a.real() * v.real() - a.imag() * v.imag(), a.real() * v.imag() + a.imag() * v.real()};
}

}  // namespace dolbeault
