#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dolbeault/geometry.hpp"

namespace dolbeault {

/// Uniform N x N lattice on every torus factor. Site (i, j) sits at
/// (i/N) L + (j/N) L tau and has index j * N + i.
struct LatticeGrid {
  int sites_per_dim = 0;
  int n = 0;
  /// Step along the real period, L/N, per factor. The second lattice vector
  /// is spacing * tau.
  std::vector<double> spacing;

  int sites() const { return sites_per_dim * sites_per_dim; }
  int index(int i, int j) const {
    const int m = sites_per_dim;
    return ((j % m + m) % m) * m + ((i % m + m) % m);
  }
  std::uint64_t fingerprint() const;
};

/// Throws ValidationError when N < 4.
LatticeGrid make_grid(int sites_per_dim, const TorusGeometry& geom);

/// U(1) lattice connection on one torus factor.
///
/// Links carry angles theta; the link phase exp(i theta) is the parallel
/// transport exp(-i int A). Plaquette (i, j) has lower-left corner at site
/// (i, j) and flux equal to the counter-clockwise sum
///   theta_x(i,j) + theta_y(i+1,j) - theta_x(i,j+1) - theta_y(i,j),
/// which is stored exactly (not reduced mod 2 pi). The curvature sample of
/// that plaquette is flux / cell area and plays the role of i Lambda F_A;
/// negative-degree bundles have negative samples.
struct FactorConnection {
  int sites_per_dim = 0;
  int degree = 0;
  double cell_area = 0.0;
  std::vector<double> angle_x;  // link (i,j) -> (i+1,j)
  std::vector<double> angle_y;  // link (i,j) -> (i,j+1)
  std::vector<double> plaquette_fluxes;
  std::vector<double> curvature_samples;
  double f_max = 0.0;

  std::complex<double> phase_x(int site) const { return std::polar(1.0, angle_x[static_cast<std::size_t>(site)]); }
  std::complex<double> phase_y(int site) const { return std::polar(1.0, angle_y[static_cast<std::size_t>(site)]); }

  /// Holonomy exp(i flux) of plaquette `site`, by multiplying link phases.
  std::complex<double> plaquette_holonomy(int site) const;

  /// Mean of the four plaquettes touching a site: the curvature seen by a
  /// site-centred stencil.
  double site_curvature(int site) const;

  double total_flux() const;
};

/// Compatible connection on the line bundle over the product torus: one
/// lattice connection per factor (product connection). Immutable value.
struct ConnectionField {
  std::vector<FactorConnection> factors;

  const FactorConnection& factor(int k) const { return factors.at(static_cast<std::size_t>(k)); }
  /// Max of i Lambda F over the product = sum of per-factor maxima.
  double f_max() const;
  std::uint64_t fingerprint() const;
};

/// Real gauge function on the sites of one factor; acts by exp(i f).
struct GaugeFunction {
  std::vector<double> values;
};

/// Hermitian-Einstein connection: every plaquette on factor k carries flux
/// 2 pi d_k / N^2.
ConnectionField constant_curvature_connection(const LineBundleSpec& spec, const TorusGeometry& geom,
                                              const LatticeGrid& grid);

/// Adds amplitude * (profile - mean(profile)) to the curvature samples of one
/// factor and re-derives its links. Total flux is unchanged.
ConnectionField perturb_connection(const ConnectionField& conn, std::span<const double> profile, double amplitude,
                                   int factor_index = 0);

/// psi -> exp(i f) psi; link angles shift by f(head) - f(tail).
ConnectionField gauge_transform(const ConnectionField& conn, const GaugeFunction& g, int factor_index = 0);

struct CurvatureStatistics {
  double f_max = 0.0;
  double f_mean = 0.0;
  double f_min = 0.0;
  bool is_hermitian_einstein = false;
};

inline constexpr double kDefaultHeTolerance = 1e-10;

CurvatureStatistics curvature_statistics(const ConnectionField& conn, double he_tolerance = kDefaultHeTolerance);

/// Links realising the given plaquette fluxes (sum must be 2 pi * degree) in
/// axial gauge, with the constant (harmonic) part of the link field removed.
FactorConnection connection_from_fluxes(int sites_per_dim, int degree, double cell_area,
                                        std::vector<double> plaquette_fluxes);

// Curvature profiles sampled at plaquette corners.
std::vector<double> profile_cosine(const LatticeGrid& grid);
std::vector<double> profile_random_smooth(const LatticeGrid& grid, std::uint64_t seed, int modes = 3);
std::vector<double> profile_by_name(const std::string& name, const LatticeGrid& grid, std::uint64_t seed);

GaugeFunction random_gauge(const LatticeGrid& grid, std::uint64_t seed, double amplitude = 3.0);

// JSON persistence; see docs/connection_format.md.
std::string connection_to_json(const ConnectionField& conn, const TorusGeometry& geom);
ConnectionField connection_from_json(const std::string& text, const TorusGeometry& geom);

}  // namespace dolbeault
