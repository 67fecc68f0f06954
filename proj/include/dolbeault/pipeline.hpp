#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dolbeault/analysis.hpp"
#include "dolbeault/config.hpp"

namespace dolbeault {

/// Geometry, bundle and perturbation shared by every grid of a run.
struct Problem {
  TorusGeometry geom;
  LineBundleSpec spec;
  std::string profile = "none";
  double amplitude = 0.0;
  std::uint64_t seed = 1;
};

struct SolveOptions {
  int k = 5;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  int max_iter = 20000;
  bool parallel = false;  // grids concurrently
};

/// Broadcasts single-entry lists to the factor count (2 for product).
Problem make_problem(const RunConfig& cfg);
SolveOptions make_solve_options(const RunConfig& cfg);

/// Constant-curvature connection, perturbed on factor 0 when requested.
ConnectionField build_connection(const Problem& p, const LatticeGrid& grid);

/// Lowest k eigenpairs of the Laplacian of one factor. Throws
/// ValidationError when k exceeds a quarter of the dimension.
EigenResult laplacian_spectrum(const OperatorHandle& lap, int k, const SolveOptions& opt);

/// Lowest +-pairs of the Dirac operator: 2 * pairs eigenpairs, chiral Lanczos.
EigenResult dirac_spectrum(const OperatorHandle& dirac, int pairs, const SolveOptions& opt);

struct SpectrumRun {
  int sites_per_dim = 0;
  double f_max = 0.0;
  double kernel_threshold = 0.0;
  int kernel_dim = 0;
  EigenResult spectrum;
};

SpectrumRun run_spectrum(const Problem& p, int sites_per_dim, const SolveOptions& opt,
                         const ConnectionField* conn_override = nullptr);

struct BoundSweep {
  std::vector<BoundReport> per_grid;
  std::optional<ConvergenceStudy> lambda_study;
  std::optional<ConvergenceStudy> rho_study;
  BoundReport combined;
  bool converged = true;
  int failed_grid = 0;  // first grid that did not converge
};

/// Per-grid verify_bound; with >= 3 grids lambda_1 is extrapolated and
/// disc_tol = 3 * extrapolation error estimate.
BoundSweep run_bound_sweep(const Problem& p, const std::vector<int>& grids, const SolveOptions& opt);

struct DiracSweep {
  std::vector<DiracReport> per_grid;
  std::vector<std::vector<double>> mu;  // per grid, ascending
  std::optional<ConvergenceStudy> mu_study;
  DiracReport combined;
  bool converged = true;
  int failed_grid = 0;
};

/// `opt.k` is the number of +- pairs beyond the expected zero modes.
DiracSweep run_dirac_sweep(const Problem& p, const std::vector<int>& grids, const SolveOptions& opt);

struct ProductGrid {
  int sites_per_dim = 0;
  double factor_lambda[2] = {0.0, 0.0};  // lowest eigenvalue per factor
  double lambda_1 = 0.0;
  int kernel_dim = 0;
  double twistor_rho = 0.0;
  double f_max = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  EigenResult spectrum;
};

struct ProductSweep {
  std::vector<ProductGrid> per_grid;
  std::optional<ConvergenceStudy> lambda_study;
  std::optional<ConvergenceStudy> rho_study;
  BoundReport combined;
  int kronecker_grid = 0;        // 0: not run
  double kronecker_defect = 0.0;
  bool converged = true;
  int failed_grid = 0;
};

ProductSweep run_product_sweep(const Problem& p, const std::vector<int>& grids, const SolveOptions& opt,
                               int kronecker_grid);

/// ||R P|| on the lowest `modes` Laplacian eigensections of factor 0.
double weitzenbock_at(const Problem& p, int sites_per_dim, const SolveOptions& opt, int modes,
                      bool* converged = nullptr);

}  // namespace dolbeault
