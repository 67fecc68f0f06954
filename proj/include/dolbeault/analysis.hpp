#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dolbeault/bundle.hpp"
#include "dolbeault/eigensolver.hpp"
#include "dolbeault/geometry.hpp"
#include "dolbeault/operators.hpp"

namespace dolbeault {

/// -n / (2n - 1) * f_max.
double bound_value(double f_max, int n);

/// Eigenvalues below this count as kernel: 0.5 * max(|c|, 2 pi / A_max) with
/// c the Hermitian-Einstein constant and A_max the largest factor area. Sits
/// halfway between 0 and the first continuum level for every degree.
double kernel_threshold(const LineBundleSpec& spec, const TorusGeometry& geom);

/// dim H^0 on one elliptic curve: d for d > 0, 1 for d = 0, 0 otherwise;
/// products multiply.
int expected_kernel_dim(const LineBundleSpec& spec);

/// 10 / N * |bound|, the single-grid allowance.
double single_grid_tolerance(double bound, int sites_per_dim);

struct BoundReport {
  int n = 1;
  double f_max = 0.0;
  double bound = 0.0;
  double lambda_1 = 0.0;
  double margin = 0.0;
  int kernel_dim = 0;
  int expected_kernel_dim = 0;
  double kernel_threshold = 0.0;
  bool he_flag = false;
  double twistor_rho = 0.0;  // finest grid
  bool twistor_consistent = true;
  bool extrapolated = false;
  double disc_tol = 0.0;
  bool pass = false;
  int sites_per_dim = 0;  // finest grid used
};

struct BoundOptions {
  double kernel_threshold = -1.0;  // < 0: kernel_threshold(spec, geom)
  double disc_tol = -1.0;          // < 0: single_grid_tolerance
};

/// Single-grid verdict from a converged Laplacian spectrum on an n = 1 torus.
/// The eigenvector of lambda_1 feeds the twistor residual.
BoundReport verify_bound(const EigenResult& spectrum, const ConnectionField& conn, const LatticeGrid& grid,
                         const TorusGeometry& geom, const LineBundleSpec& spec, const BoundOptions& opt = {});

struct ConvergenceStudy {
  std::vector<int> grid_sizes;
  std::vector<double> values;
  double observed_order = 0.0;
  double extrapolated_value = 0.0;
  double extrapolation_error_estimate = 0.0;
  bool monotone = true;
  bool extrapolated = false;
  /// "extrapolated", "non_monotone", "stationary" (last differences at roundoff)
  /// or "non_convergent" (differences not shrinking).
  std::string status;
};

/// Fits v(N) = L + C N^{-p} through the last three points. Throws
/// ValidationError for fewer than 3 sizes or sizes not strictly increasing.
ConvergenceStudy analyze_convergence(std::vector<int> sizes, std::vector<double> values);

/// Evaluates runner at every size (concurrently when `parallel`), then
/// analyze_convergence. Results are ordered by size either way.
ConvergenceStudy convergence_study(const std::function<double(int)>& runner, std::vector<int> sizes,
                                   bool parallel = false);

/// k lowest pairwise sums a_i + b_j. Throws InsufficientInputError unless
/// both inputs converged and a_last + b_0 and a_0 + b_last reach the k-th sum.
EigenResult product_spectrum(const EigenResult& a, const EigenResult& b, int k);

/// (i, j) index pairs behind product_spectrum, same order.
std::vector<std::pair<int, int>> product_index_pairs(const EigenResult& a, const EigenResult& b, int k);

/// Twistor residual of psi_a (x) psi_b on the n = 2 product:
/// <T_a psi_a, psi_a> + <T_b psi_b, psi_b> - lambda / 2.
double product_twistor_residual(std::span<const cplx> psi_a, std::span<const cplx> psi_b, double lambda,
                                const OperatorHandle& trace_a, const OperatorHandle& trace_b);

/// Max |sorted dense spectrum of A (x) I + I (x) B - sorted pairwise sums of
/// the dense factor spectra|. Dimension must stay under the dense cap.
double kronecker_check(const CsrMatrix& a, const CsrMatrix& b);

struct DiracReport {
  double f_max = 0.0;
  double threshold = 0.0;  // sqrt(-2 f_max)
  double min_abs_mu = 0.0;
  double margin = 0.0;     // min_abs_mu - threshold
  int zero_modes = 0;      // |mu| below the zero cut, excluded
  double zero_cut = 0.0;
  double symmetry_defect = 0.0;       // max_i min_j |mu_i + mu_j|
  bool symmetric = false;             // defect <= 1e-10 * max(1, max |mu|)
  double lemma_max_mismatch = 0.0;    // max over nonzero mu of min_j |mu^2/2 - lambda_j|
  bool lemma_ok = false;
  std::vector<double> p0_ratios;      // ||p0 psi||^2 / ||psi||^2, ascending |mu|, one per +- pair
  double p0_max_deviation = 0.0;
  bool extrapolated = false;
  double disc_tol = 0.0;
  bool pass = false;
  int sites_per_dim = 0;
};

struct DiracOptions {
  double zero_cut = -1.0;    // < 0: sqrt(2 * kernel_threshold)
  double lemma_tol = 1e-8;   // relative to max(1, lambda)
  double disc_tol = -1.0;    // < 0: 10 / N * threshold
  int p0_count = 5;
};

/// Checks min |mu| >= sqrt(-2 f_max) - disc_tol over the nonzero Dirac
/// eigenvalues and that every mu^2 / 2 is an eigenvalue in `laplacian`.
/// Throws ValidationError when f_max >= 0.
DiracReport dirac_corollary_check(const EigenResult& dirac, const EigenResult& laplacian, const ConnectionField& conn,
                                  const LatticeGrid& grid, const TorusGeometry& geom, const LineBundleSpec& spec,
                                  const DiracOptions& opt = {});

}  // namespace dolbeault
