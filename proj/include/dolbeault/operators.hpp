#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dolbeault/bundle.hpp"
#include "dolbeault/geometry.hpp"
#include "dolbeault/sparse.hpp"

namespace dolbeault {

/// Section of S_C (x) E = Omega^{0,0}(E) + Omega^{0,1}(E) on one torus factor.
///
/// Omega^{0,1} is carried on two sheets of N^2 sites each: the forward- and
/// backward-difference cells. Each sheet holds the component in the unit
/// coframe d\bar z / |d\bar z|, so components[1] has 2 * sites entries.
struct SpinorSection {
  int sites = 0;
  double cell_volume = 0.0;
  std::map<int, std::vector<cplx>> components;

  double norm_squared() const;
};

enum class OperatorKind { dbar, dbar_adjoint, laplacian, dirac, trace_laplacian };

std::string to_string(OperatorKind kind);

/// Assembled sparse operator together with where it came from.
///
/// All Omega^{0,*} components share the cell-volume weight, so the discrete
/// L2 adjoint is the plain conjugate transpose.
struct OperatorHandle {
  OperatorKind kind = OperatorKind::laplacian;
  int domain_degree_min = 0;
  int domain_degree_max = 0;
  int codomain_degree_min = 0;
  int codomain_degree_max = 0;
  int sites = 0;
  double cell_volume = 0.0;
  CsrMatrix matrix;
  std::uint64_t grid_fingerprint = 0;
  std::uint64_t connection_fingerprint = 0;

  std::int32_t dim() const { return matrix.rows(); }
  void apply(std::span<const cplx> x, std::span<cplx> y) const { matrix.apply(x, y); }
  std::vector<cplx> apply(std::span<const cplx> x) const { return matrix.apply(x); }
};

/// d-bar_A : Omega^0(E) -> Omega^{0,1}(E) on one factor.
///
/// Rows [0, N^2) use forward differences, rows [N^2, 2N^2) backward
/// differences, each scaled by 1/sqrt(2), so that
///   dbar^H dbar = (dbar_f^H dbar_f + dbar_b^H dbar_b) / 2.
/// A single one-sided stencil has a second zero of its symbol at
/// k = (pi/2, -pi/2) with the opposite chirality; the two-sheet average
/// has none.
OperatorHandle assemble_dbar(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                             int factor_index = 0);
OperatorHandle assemble_dbar_adjoint(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                                     int factor_index = 0);

/// Delta_A = dbar_A^H dbar_A on Omega^0(E); Hermitian and PSD by construction.
OperatorHandle assemble_laplacian(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                                  int factor_index = 0);

/// D_A = sqrt(2) (dbar_A + dbar_A^H) on Omega^0 + Omega^{0,1}, layout
/// [Omega^0 | forward sheet | backward sheet].
OperatorHandle assemble_dirac(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                              int factor_index = 0);

/// Magnetic Laplacian nabla^H nabla built from forward covariant differences
/// resolved into an orthonormal frame (5-point stencil on square tori).
OperatorHandle assemble_trace_laplacian(const ConnectionField& conn, const LatticeGrid& grid,
                                        const TorusGeometry& geom, int factor_index = 0);

/// Delta_A - (1/2) nabla^H nabla + (1/2) diag(i Lambda F_A), with the
/// curvature taken at sites as the mean of the four incident plaquettes.
CsrMatrix weitzenbock_defect(const OperatorHandle& laplacian, const OperatorHandle& trace_laplacian,
                             const FactorConnection& conn);

struct WeitzenbockResidual {
  double norm = 0.0;
  int power_iterations = 0;
  int subspace_dim = 0;
};

/// Operator norm of the Weitzenbock defect restricted to span(modes), by
/// power iteration on P R^H R P. The defect is bounded but O(1) on
/// grid-scale oscillations for any local stencil, so the full-space norm
/// does not see the continuum limit; the low-lying eigensections do.
WeitzenbockResidual weitzenbock_residual(const CsrMatrix& defect, std::span<const std::vector<cplx>> modes,
                                         int max_iterations = 500, double tol = 1e-13);

struct TwistorResidual {
  double rho = 0.0;
  double gradient_energy = 0.0;  // <nabla^H nabla psi, psi> / <psi, psi>
  bool consistent = true;
};

/// rho = ||nabla psi||^2 / ||psi||^2 - lambda / n for an eigensection of
/// Delta_A with eigenvalue lambda. Nonnegative in the continuum; flagged
/// inconsistent below -10 * discretization_tolerance.
TwistorResidual twistor_residual(std::span<const cplx> psi, double lambda, int n,
                                 const OperatorHandle& trace_laplacian, double discretization_tolerance);

SpinorSection to_section(const OperatorHandle& op, std::span<const cplx> values);
std::vector<cplx> from_section(const SpinorSection& s);

/// Keeps the Omega^0 part, zeroes every p >= 1 component.
SpinorSection project_p0(const SpinorSection& psi);

}  // namespace dolbeault
