#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dolbeault/operators.hpp"
#include "dolbeault/sparse.hpp"

namespace dolbeault {

/// Matrix-free Hermitian operator.
struct HermitianOperator {
  std::size_t dim = 0;
  /// Upper bound on the spectral radius (Gershgorin for assembled matrices).
  double norm_bound = 0.0;
  std::function<void(std::span<const cplx>, std::span<cplx>)> apply;
};

HermitianOperator as_operator(const CsrMatrix& m);
HermitianOperator as_operator(const OperatorHandle& op);

enum class EigenMode { smallest, largest, around_shift };

struct EigenRequest {
  int k = 1;
  /// Convergence when ||A psi - lambda psi|| <= tol * norm_bound.
  double tol = 1e-10;
  int max_iter = 3000;
  std::uint64_t seed = 1;
  EigenMode mode = EigenMode::smallest;
  double shift = 0.0;
  /// Optional start vector (e.g. chirally pure for Dirac); random when empty.
  /// Restart vectors are random but restricted to this vector's support.
  std::vector<cplx> start;
  /// The Krylov space is kept orthogonal to these (known exact kernels).
  std::vector<std::vector<cplx>> deflate;
  /// When > 0 the operator is block off-diagonal with respect to
  /// [0, chiral_split) + [chiral_split, dim). Krylov vectors then alternate
  /// between the two blocks, starting in the first, and locked vectors are
  /// split into their block pieces. Used with around_shift(0) this yields the
  /// nonzero +-pairs without ever touching the kernel of the lower block.
  std::size_t chiral_split = 0;
};

struct EigenResult {
  std::vector<double> eigenvalues;                 // ascending
  std::vector<std::vector<cplx>> eigenvectors;     // unit Euclidean norm
  std::vector<double> residuals;                   // ||A psi - lambda psi|| / (norm_bound ||psi||)
  std::vector<double> ritz_history;                // wanted Ritz values at every convergence check
  int iterations = 0;
  bool converged = false;
  double norm_bound = 0.0;
};

/// Lanczos with full (twice-applied classical Gram-Schmidt) reorthogonalisation.
///
/// smallest: runs on (sigma_up I - A) with sigma_up the Gershgorin bound.
/// largest: runs on A.
/// around_shift: runs on A and keeps the Ritz values nearest `shift`. For a
///   chiral operator started from a chirally pure vector this reaches the
///   eigenvalues of smallest magnitude at the rate of Lanczos on A^2.
/// A non-converged result keeps the best Ritz data with converged = false.
EigenResult lanczos(const HermitianOperator& op, const EigenRequest& req);
EigenResult lanczos_lowest(const OperatorHandle& op, const EigenRequest& req);

inline constexpr std::int32_t kDenseOracleMaxDim = 4096;

/// Full spectrum by Householder tridiagonalisation and implicit QL.
/// Throws ValidationError above kDenseOracleMaxDim.
EigenResult dense_oracle(const OperatorHandle& op, bool want_vectors = true);
EigenResult dense_oracle(const CsrMatrix& m, bool want_vectors = true);

/// Hermitian eigensolver on a dense row-major n x n matrix.
EigenResult dense_eigh(std::vector<cplx> a, std::size_t n, bool want_vectors = true);

/// Symmetric tridiagonal eigenproblem (implicit QL with Wilkinson shifts).
/// `diag` and `offdiag` (offdiag[i] couples i and i+1) are overwritten:
/// diag holds ascending eigenvalues. If `z` is non-null it must hold an
/// n x n row-major matrix and is right-multiplied by the eigenvector matrix.
void tridiagonal_eigen(std::vector<double>& diag, std::vector<double> offdiag, std::vector<double>* z);

/// max |<psi_i, psi_j> - delta_ij|.
double orthonormality_check(const EigenResult& res);

}  // namespace dolbeault
