#include "dolbeault/operators.hpp"

#include <cmath>
#include <numbers>

#include "dolbeault/errors.hpp"

namespace dolbeault {

namespace {

struct FactorContext {
  const FactorConnection& conn;
  int m;
  double h;
  cplx tau;
};

FactorContext context(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom, int k) {
  if (k < 0 || k >= geom.n() || k >= static_cast<int>(conn.factors.size()))
    throw ValidationError("factor index " + std::to_string(k) + " out of range");
  const auto& f = conn.factor(k);
  if (f.sites_per_dim != grid.sites_per_dim) throw ValidationError("connection was built on a different grid");
  return {f, grid.sites_per_dim, grid.spacing.at(static_cast<std::size_t>(k)), geom.factor(k).modulus()};
}

OperatorHandle make_handle(OperatorKind kind, CsrMatrix m, const FactorContext& c, const LatticeGrid& grid,
                           const ConnectionField& conn) {
  OperatorHandle h;
  h.kind = kind;
  h.sites = c.m * c.m;
  h.cell_volume = c.conn.cell_area;
  h.matrix = std::move(m);
  h.grid_fingerprint = grid.fingerprint();
  h.connection_fingerprint = conn.fingerprint();
  return h;
}

// Forward rows then backward rows; see assemble_dbar.
CsrMatrix dbar_matrix(const FactorContext& c) {
  const int m = c.m;
  const int sites = m * m;
  const cplx coef = 1.0 / (2.0 * cplx{0.0, 1.0} * c.tau.imag() * c.h);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(6 * sites));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int x = j * m + i;
      const int xp1 = j * m + (i + 1) % m;
      const int xp2 = ((j + 1) % m) * m + i;
      t.push_back({x, x, coef * (1.0 - c.tau)});
      t.push_back({x, xp1, coef * c.tau * std::conj(c.conn.phase_x(x))});
      t.push_back({x, xp2, -coef * std::conj(c.conn.phase_y(x))});
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int x = j * m + i;
      const int xm1 = j * m + (i + m - 1) % m;
      const int xm2 = ((j + m - 1) % m) * m + i;
      t.push_back({sites + x, x, coef * (c.tau - 1.0)});
      t.push_back({sites + x, xm1, -coef * c.tau * c.conn.phase_x(xm1)});
      t.push_back({sites + x, xm2, coef * c.conn.phase_y(xm2)});
    }
  }
  return CsrMatrix(2 * sites, sites, std::move(t));
}

// Covariant forward gradient in an orthonormal frame: rows [0, N^2) d/dx,
// rows [N^2, 2N^2) d/dy.
CsrMatrix gradient_matrix(const FactorContext& c) {
  const int m = c.m;
  const int sites = m * m;
  const double t1 = c.tau.real();
  const double t2 = c.tau.imag();
  const double inv_h = 1.0 / c.h;
  const double inv_t2h = 1.0 / (t2 * c.h);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(5 * sites));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int x = j * m + i;
      const int xp1 = j * m + (i + 1) % m;
      const int xp2 = ((j + 1) % m) * m + i;
      const cplx hop1 = std::conj(c.conn.phase_x(x));
      const cplx hop2 = std::conj(c.conn.phase_y(x));
      t.push_back({x, x, {-inv_h, 0.0}});
      t.push_back({x, xp1, hop1 * inv_h});
      t.push_back({sites + x, x, {(t1 - 1.0) * inv_t2h, 0.0}});
      t.push_back({sites + x, xp2, hop2 * inv_t2h});
      if (t1 != 0.0) t.push_back({sites + x, xp1, -t1 * hop1 * inv_t2h});
    }
  }
  return CsrMatrix(2 * sites, sites, std::move(t));
}

}  // namespace

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dbar: return "dbar";
    case OperatorKind::dbar_adjoint: return "dbar_adjoint";
    case OperatorKind::laplacian: return "laplacian";
    case OperatorKind::dirac: return "dirac";
    case OperatorKind::trace_laplacian: return "trace_laplacian";
  }
  return "unknown";
}

double SpinorSection::norm_squared() const {
  double s = 0.0;
  for (const auto& [p, v] : components)
    for (const auto& z : v) s += std::norm(z);
  return s * cell_volume;
}

OperatorHandle assemble_dbar(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                             int factor_index) {
  const auto c = context(conn, grid, geom, factor_index);
  auto h = make_handle(OperatorKind::dbar, dbar_matrix(c), c, grid, conn);
  h.codomain_degree_min = h.codomain_degree_max = 1;
  return h;
}

OperatorHandle assemble_dbar_adjoint(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                                     int factor_index) {
  const auto c = context(conn, grid, geom, factor_index);
  auto h = make_handle(OperatorKind::dbar_adjoint, dbar_matrix(c).adjoint(), c, grid, conn);
  h.domain_degree_min = h.domain_degree_max = 1;
  return h;
}

OperatorHandle assemble_laplacian(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                                  int factor_index) {
  const auto c = context(conn, grid, geom, factor_index);
  return make_handle(OperatorKind::laplacian, gram(dbar_matrix(c)), c, grid, conn);
}

OperatorHandle assemble_dirac(const ConnectionField& conn, const LatticeGrid& grid, const TorusGeometry& geom,
                              int factor_index) {
  const auto c = context(conn, grid, geom, factor_index);
  const CsrMatrix b = dbar_matrix(c);
  const int sites = c.m * c.m;
  std::vector<Triplet> t;
  t.reserve(2 * b.nonzeros());
  for (const auto& e : b.to_triplets()) {
    const cplx v = std::numbers::sqrt2 * e.value;
    t.push_back({sites + e.row, e.col, v});
    t.push_back({e.col, sites + e.row, std::conj(v)});
  }
  auto h = make_handle(OperatorKind::dirac, CsrMatrix(3 * sites, 3 * sites, std::move(t)), c, grid, conn);
  h.domain_degree_max = h.codomain_degree_max = 1;
  return h;
}

OperatorHandle assemble_trace_laplacian(const ConnectionField& conn, const LatticeGrid& grid,
                                        const TorusGeometry& geom, int factor_index) {
  const auto c = context(conn, grid, geom, factor_index);
  return make_handle(OperatorKind::trace_laplacian, gram(gradient_matrix(c)), c, grid, conn);
}

CsrMatrix weitzenbock_defect(const OperatorHandle& laplacian, const OperatorHandle& trace_laplacian,
                             const FactorConnection& conn) {
  if (laplacian.kind != OperatorKind::laplacian || trace_laplacian.kind != OperatorKind::trace_laplacian)
    throw ValidationError("weitzenbock_defect expects a laplacian and a trace_laplacian handle");
  if (laplacian.connection_fingerprint != trace_laplacian.connection_fingerprint ||
      laplacian.grid_fingerprint != trace_laplacian.grid_fingerprint)
    throw ValidationError("weitzenbock_defect: operators were assembled on different grids or connections");
  std::vector<double> half_curv(static_cast<std::size_t>(laplacian.sites));
  for (int s = 0; s < laplacian.sites; ++s) half_curv[static_cast<std::size_t>(s)] = 0.5 * conn.site_curvature(s);
  const CsrMatrix partial = linear_combination(1.0, laplacian.matrix, -0.5, trace_laplacian.matrix);
  return linear_combination(1.0, partial, 1.0, diagonal_matrix(half_curv));
}

WeitzenbockResidual weitzenbock_residual(const CsrMatrix& defect, std::span<const std::vector<cplx>> modes,
                                         int max_iterations, double tol) {
  WeitzenbockResidual out;
  const auto m = modes.size();
  out.subspace_dim = static_cast<int>(m);
  if (m == 0) return out;

  // Orthonormalise the supplied modes (modified Gram-Schmidt) so P is a projector.
  std::vector<std::vector<cplx>> q;
  for (const auto& v : modes) {
    std::vector<cplx> w = v;
    for (const auto& u : q) axpy(-dot(u, w), u, w);
    const double nrm = norm2(w);
    if (nrm < 1e-12) continue;
    scale(1.0 / nrm, w);
    q.push_back(std::move(w));
  }
  const auto r = q.size();
  std::vector<std::vector<cplx>> rq;
  rq.reserve(r);
  for (const auto& v : q) rq.push_back(defect.apply(v));
  // Gram matrix G = (R Q)^H (R Q); its top eigenvalue is ||R P||^2.
  std::vector<cplx> g(r * r);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < r; ++b) g[a * r + b] = dot(rq[a], rq[b]);

  std::vector<cplx> x(r, {1.0, 0.0});
  std::vector<cplx> y(r);
  double estimate = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    for (std::size_t a = 0; a < r; ++a) {
      cplx s{0.0, 0.0};
      for (std::size_t b = 0; b < r; ++b) s += g[a * r + b] * x[b];
      y[a] = s;
    }
    const double nrm = norm2(y);
    out.power_iterations = it;
    if (nrm == 0.0) {
      estimate = 0.0;
      break;
    }
    const double next = nrm / norm2(x);
    for (std::size_t a = 0; a < r; ++a) x[a] = y[a] / nrm;
    const bool done = std::abs(next - estimate) <= tol * std::max(next, 1e-300);
    estimate = next;
    if (done) break;
  }
  out.norm = std::sqrt(estimate);
  return out;
}

TwistorResidual twistor_residual(std::span<const cplx> psi, double lambda, int n,
                                 const OperatorHandle& trace_laplacian, double discretization_tolerance) {
  if (trace_laplacian.kind != OperatorKind::trace_laplacian)
    throw ValidationError("twistor_residual expects a trace_laplacian handle");
  if (n < 1) throw ValidationError("twistor_residual: n must be >= 1");
  const auto tpsi = trace_laplacian.apply(psi);
  const double energy = dot(psi, tpsi).real() / dot(psi, psi).real();
  TwistorResidual out;
  out.gradient_energy = energy;
  out.rho = energy - lambda / n;
  out.consistent = out.rho >= -10.0 * discretization_tolerance;
  return out;
}

SpinorSection to_section(const OperatorHandle& op, std::span<const cplx> values) {
  SpinorSection s;
  s.sites = op.sites;
  s.cell_volume = op.cell_volume;
  const auto sites = static_cast<std::size_t>(op.sites);
  if (values.size() == sites) {
    s.components[0].assign(values.begin(), values.end());
  } else if (values.size() == 3 * sites) {
    s.components[0].assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(sites));
    s.components[1].assign(values.begin() + static_cast<std::ptrdiff_t>(sites), values.end());
  } else if (values.size() == 2 * sites) {
    s.components[1].assign(values.begin(), values.end());
  } else {
    throw ValidationError("to_section: vector length does not match the operator's sites");
  }
  return s;
}

std::vector<cplx> from_section(const SpinorSection& s) {
  std::vector<cplx> out;
  const auto sites = static_cast<std::size_t>(s.sites);
  const auto p0 = s.components.find(0);
  const auto p1 = s.components.find(1);
  out.assign(sites, {0.0, 0.0});
  if (p0 != s.components.end()) std::copy(p0->second.begin(), p0->second.end(), out.begin());
  if (p1 != s.components.end()) out.insert(out.end(), p1->second.begin(), p1->second.end());
  return out;
}

SpinorSection project_p0(const SpinorSection& psi) {
  SpinorSection out;
  out.sites = psi.sites;
  out.cell_volume = psi.cell_volume;
  for (const auto& [p, v] : psi.components) out.components[p] = p == 0 ? v : std::vector<cplx>(v.size());
  return out;
}

}  // namespace dolbeault
