#include "dolbeault/geometry.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "dolbeault/errors.hpp"
#include "dolbeault/sparse.hpp"

namespace dolbeault {

double TorusFactor::period() const { return std::sqrt(area / modulus_im); }

std::uint64_t TorusGeometry::fingerprint() const {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const auto& f : factors_) {
    const double raw[3] = {f.modulus_re, f.modulus_im, f.area};
    h = fnv1a(raw, sizeof raw, h);
  }
  return h;
}

TorusGeometry make_torus(std::vector<TorusFactor> factors) {
  if (factors.empty()) throw ValidationError("torus needs at least one factor");
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& f = factors[k];
    const auto label = "factor " + std::to_string(k);
    if (!std::isfinite(f.modulus_re) || !std::isfinite(f.modulus_im) || !std::isfinite(f.area))
      throw ValidationError(label + ": non-finite modulus or area");
    if (!(f.modulus_im > 0.0))
      throw ValidationError(label + ": modulus imaginary part must be positive, got " + std::to_string(f.modulus_im));
    if (!(f.area > 0.0)) throw ValidationError(label + ": area must be positive, got " + std::to_string(f.area));
  }
  TorusGeometry g;
  g.volume_ = std::accumulate(factors.begin(), factors.end(), 1.0,
                              [](double v, const TorusFactor& f) { return v * f.area; });
  g.factors_ = std::move(factors);
  return g;
}

LineBundleSpec make_line_bundle(std::vector<int> degrees) {
  if (degrees.empty()) throw ValidationError("line bundle needs one degree per factor");
  LineBundleSpec s;
  s.total_degree = std::accumulate(degrees.begin(), degrees.end(), 0);
  s.degrees = std::move(degrees);
  return s;
}

namespace {

void check_compatible(const LineBundleSpec& spec, const TorusGeometry& geom) {
  if (static_cast<int>(spec.degrees.size()) != geom.n())
    throw ValidationError("line bundle has " + std::to_string(spec.degrees.size()) + " degrees but the torus has " +
                          std::to_string(geom.n()) + " factors");
}

double factorial(int m) {
  double r = 1.0;
  for (int i = 2; i <= m; ++i) r *= i;
  return r;
}

}  // namespace

double degree_pairing(const LineBundleSpec& spec, const TorusGeometry& geom) {
  check_compatible(spec, geom);
  double sum = 0.0;
  for (int k = 0; k < geom.n(); ++k) {
    double others = 1.0;
    for (int j = 0; j < geom.n(); ++j)
      if (j != k) others *= geom.factor(j).area;
    sum += spec.degrees[static_cast<std::size_t>(k)] * others;
  }
  return factorial(geom.n() - 1) * sum;
}

double hermitian_einstein_constant(const LineBundleSpec& spec, const TorusGeometry& geom) {
  if (geom.n() == 1) return continuum_constant_curvature(spec, geom, 0);
  return 2.0 * std::numbers::pi * degree_pairing(spec, geom) / (factorial(geom.n() - 1) * geom.volume());
}

double continuum_constant_curvature(const LineBundleSpec& spec, const TorusGeometry& geom, int factor_index) {
  check_compatible(spec, geom);
  if (factor_index < 0 || factor_index >= geom.n())
    throw ValidationError("factor index " + std::to_string(factor_index) + " out of range");
  return 2.0 * std::numbers::pi * spec.degrees[static_cast<std::size_t>(factor_index)] / geom.factor(factor_index).area;
}

}  // namespace dolbeault
