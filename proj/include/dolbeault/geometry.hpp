#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace dolbeault {

/// One flat complex torus C / (L Z + L tau Z) with area L^2 Im(tau).
struct TorusFactor {
  double modulus_re = 0.0;
  double modulus_im = 1.0;
  double area = 1.0;

  std::complex<double> modulus() const { return {modulus_re, modulus_im}; }
  /// Length L of the real period.
  double period() const;
};

/// Flat Kaehler product of one-dimensional tori. Immutable after make_torus.
///
/// The Kaehler form restricts to the area form on each factor, so
/// vol(M) = integral of omega^n / n! = product of factor areas.
class TorusGeometry {
 public:
  const std::vector<TorusFactor>& factors() const { return factors_; }
  const TorusFactor& factor(int k) const { return factors_.at(static_cast<std::size_t>(k)); }
  int n() const { return static_cast<int>(factors_.size()); }
  double volume() const { return volume_; }
  double scalar_curvature() const { return 0.0; }
  std::uint64_t fingerprint() const;

 private:
  friend TorusGeometry make_torus(std::vector<TorusFactor> factors);
  std::vector<TorusFactor> factors_;
  double volume_ = 0.0;
};

/// Throws ValidationError naming the first factor with area <= 0 or Im(tau) <= 0.
TorusGeometry make_torus(std::vector<TorusFactor> factors);

/// Line bundle on a product torus, given by its first Chern number on each factor.
struct LineBundleSpec {
  std::vector<int> degrees;
  int total_degree = 0;
};

LineBundleSpec make_line_bundle(std::vector<int> degrees);

/// deg(E) = integral of c1(E) ^ omega^{n-1}
///        = (n-1)! * sum_k d_k * prod_{j != k} area_j.
double degree_pairing(const LineBundleSpec& spec, const TorusGeometry& geom);

/// c = 2 pi deg(E) / ((n-1)! vol(M)); equals sum_k 2 pi d_k / area_k.
double hermitian_einstein_constant(const LineBundleSpec& spec, const TorusGeometry& geom);

/// 2 pi d_k / area_k, the value of i Lambda F on factor k for the
/// constant-curvature connection.
double continuum_constant_curvature(const LineBundleSpec& spec, const TorusGeometry& geom, int factor_index);

}  // namespace dolbeault
