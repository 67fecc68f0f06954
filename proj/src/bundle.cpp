#include "dolbeault/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "dolbeault/errors.hpp"
#include "dolbeault/sparse.hpp"

namespace dolbeault {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double neumaier_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (const double x : xs) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

void finish(FactorConnection& f) {
  f.f_max = *std::max_element(f.curvature_samples.begin(), f.curvature_samples.end());
}

}  // namespace

std::uint64_t LatticeGrid::fingerprint() const {
  std::uint64_t h = fnv1a(&sites_per_dim, sizeof sites_per_dim);
  h = fnv1a(&n, sizeof n, h);
  return fnv1a(spacing.data(), spacing.size() * sizeof(double), h);
}

LatticeGrid make_grid(int sites_per_dim, const TorusGeometry& geom) {
  if (sites_per_dim < 4)
    throw ValidationError("grid: sites per dimension must be >= 4, got " + std::to_string(sites_per_dim));
  LatticeGrid g;
  g.sites_per_dim = sites_per_dim;
  g.n = geom.n();
  for (const auto& f : geom.factors()) g.spacing.push_back(f.period() / sites_per_dim);
  return g;
}

std::complex<double> FactorConnection::plaquette_holonomy(int site) const {
  const int m = sites_per_dim;
  const int i = site % m;
  const int j = site / m;
  const int right = j * m + (i + 1) % m;
  const int up = ((j + 1) % m) * m + i;
  return phase_x(site) * phase_y(right) * std::conj(phase_x(up)) * std::conj(phase_y(site));
}

double FactorConnection::site_curvature(int site) const {
  const int m = sites_per_dim;
  const int i = site % m;
  const int j = site / m;
  const int il = (i + m - 1) % m;
  const int jd = (j + m - 1) % m;
  const auto& s = curvature_samples;
  return 0.25 * (s[static_cast<std::size_t>(j * m + i)] + s[static_cast<std::size_t>(j * m + il)] +
                 s[static_cast<std::size_t>(jd * m + i)] + s[static_cast<std::size_t>(jd * m + il)]);
}

double FactorConnection::total_flux() const { return neumaier_sum(plaquette_fluxes); }

double ConnectionField::f_max() const {
  double s = 0.0;
  for (const auto& f : factors) s += f.f_max;
  return s;
}

std::uint64_t ConnectionField::fingerprint() const {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const auto& f : factors) {
    h = fnv1a(&f.sites_per_dim, sizeof f.sites_per_dim, h);
    h = fnv1a(&f.degree, sizeof f.degree, h);
    h = fnv1a(f.angle_x.data(), f.angle_x.size() * sizeof(double), h);
    h = fnv1a(f.angle_y.data(), f.angle_y.size() * sizeof(double), h);
    h = fnv1a(f.plaquette_fluxes.data(), f.plaquette_fluxes.size() * sizeof(double), h);
  }
  return h;
}

FactorConnection connection_from_fluxes(int m, int degree, double cell_area, std::vector<double> fluxes) {
  const auto sites = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
  if (fluxes.size() != sites) throw ValidationError("flux array does not match the grid");
  const double total = neumaier_sum(fluxes);
  if (std::abs(total - kTwoPi * degree) > 1e-9 * std::max(1.0, std::abs(kTwoPi * degree)))
    throw ValidationError("plaquette fluxes sum to " + std::to_string(total) + ", not 2 pi * " +
                          std::to_string(degree));

  FactorConnection f;
  f.sites_per_dim = m;
  f.degree = degree;
  f.cell_area = cell_area;
  f.angle_x.assign(sites, 0.0);
  f.angle_y.assign(sites, 0.0);

  // Axial gauge: y-links carry the flux accumulated along each row strip,
  // x-links are zero except the seam i = N-1, which closes every row.
  std::vector<double> row_flux(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      f.angle_y[static_cast<std::size_t>(j * m + i)] = acc;
      acc += fluxes[static_cast<std::size_t>(j * m + i)];
    }
    row_flux[static_cast<std::size_t>(j)] = acc;
  }
  for (int j = 0; j + 1 < m; ++j)
    f.angle_x[static_cast<std::size_t>((j + 1) * m + m - 1)] =
        f.angle_x[static_cast<std::size_t>(j * m + m - 1)] - row_flux[static_cast<std::size_t>(j)];

  // Remove the harmonic part so the flat component of the connection is trivial.
  const double mean_x = neumaier_sum(f.angle_x) / static_cast<double>(sites);
  const double mean_y = neumaier_sum(f.angle_y) / static_cast<double>(sites);
  for (auto& a : f.angle_x) a -= mean_x;
  for (auto& a : f.angle_y) a -= mean_y;

  f.curvature_samples.resize(sites);
  for (std::size_t s = 0; s < sites; ++s) f.curvature_samples[s] = fluxes[s] / cell_area;
  f.plaquette_fluxes = std::move(fluxes);
  finish(f);
  return f;
}

ConnectionField constant_curvature_connection(const LineBundleSpec& spec, const TorusGeometry& geom,
                                              const LatticeGrid& grid) {
  if (grid.n != geom.n()) throw ValidationError("grid and geometry disagree on the number of factors");
  if (static_cast<int>(spec.degrees.size()) != geom.n())
    throw ValidationError("line bundle and geometry disagree on the number of factors");
  const int m = grid.sites_per_dim;
  const auto sites = static_cast<std::size_t>(grid.sites());
  ConnectionField conn;
  for (int k = 0; k < geom.n(); ++k) {
    const int d = spec.degrees[static_cast<std::size_t>(k)];
    const double cell = geom.factor(k).area / (static_cast<double>(m) * m);
    std::vector<double> fluxes(sites, kTwoPi * d / (static_cast<double>(m) * m));
    auto f = connection_from_fluxes(m, d, cell, std::move(fluxes));
    // Exact continuum value rather than flux / cell, so the field is constant bitwise.
    std::fill(f.curvature_samples.begin(), f.curvature_samples.end(), continuum_constant_curvature(spec, geom, k));
    finish(f);
    conn.factors.push_back(std::move(f));
  }
  return conn;
}

ConnectionField perturb_connection(const ConnectionField& conn, std::span<const double> profile, double amplitude,
                                   int factor_index) {
  if (factor_index < 0 || factor_index >= static_cast<int>(conn.factors.size()))
    throw ValidationError("perturb_connection: factor index out of range");
  const auto& base = conn.factor(factor_index);
  if (profile.size() != base.curvature_samples.size())
    throw ValidationError("perturb_connection: profile must have one value per site");
  if (!std::isfinite(amplitude)) throw ValidationError("perturb_connection: amplitude must be finite");
  if (amplitude == 0.0) return conn;

  const double mean = neumaier_sum(profile) / static_cast<double>(profile.size());
  std::vector<double> samples(base.curvature_samples.size());
  std::vector<double> fluxes(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    samples[s] = base.curvature_samples[s] + amplitude * (profile[s] - mean);
    fluxes[s] = samples[s] * base.cell_area;
  }
  auto f = connection_from_fluxes(base.sites_per_dim, base.degree, base.cell_area, std::move(fluxes));
  f.curvature_samples = std::move(samples);
  finish(f);

  ConnectionField out = conn;
  out.factors[static_cast<std::size_t>(factor_index)] = std::move(f);
  return out;
}

ConnectionField gauge_transform(const ConnectionField& conn, const GaugeFunction& g, int factor_index) {
  if (factor_index < 0 || factor_index >= static_cast<int>(conn.factors.size()))
    throw ValidationError("gauge_transform: factor index out of range");
  ConnectionField out = conn;
  auto& f = out.factors[static_cast<std::size_t>(factor_index)];
  const int m = f.sites_per_dim;
  if (g.values.size() != f.angle_x.size()) throw ValidationError("gauge_transform: one value per site required");
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto s = static_cast<std::size_t>(j * m + i);
      const double here = g.values[s];
      f.angle_x[s] += g.values[static_cast<std::size_t>(j * m + (i + 1) % m)] - here;
      f.angle_y[s] += g.values[static_cast<std::size_t>(((j + 1) % m) * m + i)] - here;
    }
  }
  return out;
}

CurvatureStatistics curvature_statistics(const ConnectionField& conn, double he_tolerance) {
  CurvatureStatistics st;
  bool constant = true;
  for (const auto& f : conn.factors) {
    const auto [lo, hi] = std::minmax_element(f.curvature_samples.begin(), f.curvature_samples.end());
    st.f_max += *hi;
    st.f_min += *lo;
    // Flux-weighted mean: total flux over total area.
    st.f_mean += f.total_flux() / (f.cell_area * static_cast<double>(f.plaquette_fluxes.size()));
    constant = constant && (*hi - *lo <= he_tolerance);
  }
  st.is_hermitian_einstein = constant;
  return st;
}

std::vector<double> profile_cosine(const LatticeGrid& grid) {
  const int m = grid.sites_per_dim;
  std::vector<double> p(static_cast<std::size_t>(grid.sites()));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) p[static_cast<std::size_t>(j * m + i)] = std::cos(kTwoPi * i / m);
  return p;
}

std::vector<double> profile_random_smooth(const LatticeGrid& grid, std::uint64_t seed, int modes) {
  const int m = grid.sites_per_dim;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> wave(-2, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(grid.sites()), 0.0);
  for (int t = 0; t < modes; ++t) {
    int kx = wave(rng);
    int ky = wave(rng);
    if (kx == 0 && ky == 0) kx = 1;
    const double amp = 0.5 + 0.5 * unit(rng);
    const double phase = kTwoPi * unit(rng);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        p[static_cast<std::size_t>(j * m + i)] += amp * std::cos(kTwoPi * (kx * i + ky * j) / m + phase);
  }
  const double peak = std::max(1e-300, std::abs(*std::max_element(p.begin(), p.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  })));
  for (auto& v : p) v /= peak;
  return p;
}

std::vector<double> profile_by_name(const std::string& name, const LatticeGrid& grid, std::uint64_t seed) {
  if (name == "cos" || name == "cosine") return profile_cosine(grid);
  if (name == "random") return profile_random_smooth(grid, seed);
  if (name == "none") return std::vector<double>(static_cast<std::size_t>(grid.sites()), 0.0);
  throw ValidationError("unknown perturbation profile '" + name + "' (expected cos, random or none)");
}

GaugeFunction random_gauge(const LatticeGrid& grid, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  GaugeFunction g;
  g.values.resize(static_cast<std::size_t>(grid.sites()));
  for (auto& v : g.values) v = u(rng);
  return g;
}

std::string connection_to_json(const ConnectionField& conn, const TorusGeometry& geom) {
  nlohmann::json doc;
  doc["format"] = "dolbeault.connection";
  doc["version"] = 1;
  doc["geometry_fingerprint"] = std::to_string(geom.fingerprint());
  auto& factors = doc["factors"] = nlohmann::json::array();
  for (const auto& f : conn.factors) {
    factors.push_back({{"sites_per_dim", f.sites_per_dim},
                       {"degree", f.degree},
                       {"cell_area", f.cell_area},
                       {"angle_x", f.angle_x},
                       {"angle_y", f.angle_y},
                       {"plaquette_fluxes", f.plaquette_fluxes},
                       {"curvature_samples", f.curvature_samples}});
  }
  return doc.dump();
}

ConnectionField connection_from_json(const std::string& text, const TorusGeometry& geom) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("connection file is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != "dolbeault.connection" || doc.value("version", 0) != 1)
    throw ValidationError("not a dolbeault.connection v1 document");
  if (doc.at("geometry_fingerprint").get<std::string>() != std::to_string(geom.fingerprint()))
    throw ValidationError("connection was saved for a different geometry");
  ConnectionField conn;
  for (const auto& jf : doc.at("factors")) {
    FactorConnection f;
    f.sites_per_dim = jf.at("sites_per_dim").get<int>();
    f.degree = jf.at("degree").get<int>();
    f.cell_area = jf.at("cell_area").get<double>();
    f.angle_x = jf.at("angle_x").get<std::vector<double>>();
    f.angle_y = jf.at("angle_y").get<std::vector<double>>();
    f.plaquette_fluxes = jf.at("plaquette_fluxes").get<std::vector<double>>();
    f.curvature_samples = jf.at("curvature_samples").get<std::vector<double>>();
    const auto sites = static_cast<std::size_t>(f.sites_per_dim) * static_cast<std::size_t>(f.sites_per_dim);
    if (f.angle_x.size() != sites || f.angle_y.size() != sites || f.plaquette_fluxes.size() != sites ||
        f.curvature_samples.size() != sites)
      throw ValidationError("connection arrays do not match sites_per_dim");
    if (std::abs(f.total_flux() - kTwoPi * f.degree) > 1e-9 * std::max(1.0, std::abs(kTwoPi * f.degree)))
      throw ValidationError("stored fluxes are not quantized to the stored degree");
    finish(f);
    conn.factors.push_back(std::move(f));
  }
  if (static_cast<int>(conn.factors.size()) != geom.n())
    throw ValidationError("connection factor count does not match the geometry");
  return conn;
}

}  // namespace dolbeault
