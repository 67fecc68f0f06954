#include "dolbeault/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>

#include "dolbeault/errors.hpp"

namespace dolbeault {

double bound_value(double f_max, int n) {
  if (n < 1) throw ValidationError("bound_value: n must be >= 1, got " + std::to_string(n));
  return -static_cast<double>(n) / static_cast<double>(2 * n - 1) * f_max;
}

double kernel_threshold(const LineBundleSpec& spec, const TorusGeometry& geom) {
  double a_max = 0.0;
  for (const auto& f : geom.factors()) a_max = std::max(a_max, f.area);
  const double c = std::abs(hermitian_einstein_constant(spec, geom));
  return 0.5 * std::max(c, 2.0 * std::numbers::pi / a_max);
}

int expected_kernel_dim(const LineBundleSpec& spec) {
  int dim = 1;
  for (int d : spec.degrees) dim *= d > 0 ? d : (d == 0 ? 1 : 0);
  return dim;
}

double single_grid_tolerance(double bound, int sites_per_dim) {
  if (sites_per_dim <= 0) throw ValidationError("single_grid_tolerance: grid size must be positive");
  return 10.0 / sites_per_dim * std::abs(bound);
}

BoundReport verify_bound(const EigenResult& spectrum, const ConnectionField& conn, const LatticeGrid& grid,
                         const TorusGeometry& geom, const LineBundleSpec& spec, const BoundOptions& opt) {
  if (geom.n() != 1) throw ValidationError("verify_bound: single-factor geometry required, products go through product_spectrum");
  if (!spectrum.converged) throw InsufficientInputError("verify_bound: spectrum did not converge");
  if (spectrum.eigenvectors.size() != spectrum.eigenvalues.size())
    throw InsufficientInputError("verify_bound: eigenvectors are required for the twistor residual");

  BoundReport r;
  r.n = 1;
  r.sites_per_dim = grid.sites_per_dim;
  r.f_max = conn.f_max();
  r.bound = bound_value(r.f_max, 1);
  r.kernel_threshold = opt.kernel_threshold >= 0.0 ? opt.kernel_threshold : kernel_threshold(spec, geom);
  r.expected_kernel_dim = expected_kernel_dim(spec);
  r.disc_tol = opt.disc_tol >= 0.0 ? opt.disc_tol : single_grid_tolerance(r.bound, grid.sites_per_dim);

  std::size_t first = spectrum.eigenvalues.size();
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i) {
    if (spectrum.eigenvalues[i] < r.kernel_threshold) {
      ++r.kernel_dim;
    } else if (first == spectrum.eigenvalues.size()) {
      first = i;
    }
  }
  if (first == spectrum.eigenvalues.size())
    throw InsufficientInputError("verify_bound: every computed eigenvalue lies below the kernel threshold, raise k");
  r.lambda_1 = spectrum.eigenvalues[first];
  r.margin = r.lambda_1 - r.bound;
  r.he_flag = curvature_statistics(conn).is_hermitian_einstein;

  const auto trace = assemble_trace_laplacian(conn, grid, geom);
  const auto tw = twistor_residual(spectrum.eigenvectors[first], r.lambda_1, 1, trace, r.disc_tol);
  r.twistor_rho = tw.rho;
  r.twistor_consistent = tw.consistent;
  r.pass = r.margin >= -r.disc_tol;
  return r;
}

ConvergenceStudy analyze_convergence(std::vector<int> sizes, std::vector<double> values) {
  if (sizes.size() != values.size()) throw ValidationError("convergence_study: sizes and values differ in length");
  if (sizes.size() < 3)
    throw ValidationError("convergence_study: at least 3 grid sizes are needed, got " + std::to_string(sizes.size()));
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    if (sizes[i] <= 0 || sizes[i + 1] <= sizes[i])
      throw ValidationError("convergence_study: grid sizes must be positive and strictly increasing");

  ConvergenceStudy s;
  s.grid_sizes = std::move(sizes);
  s.values = std::move(values);
  const std::size_t m = s.values.size();
  const double v1 = s.values[m - 3];
  const double v2 = s.values[m - 2];
  const double v3 = s.values[m - 1];
  const double d1 = v2 - v1;
  const double d2 = v3 - v2;
  s.extrapolated_value = v3;

  double scale_ref = 0.0;
  for (double v : s.values) scale_ref = std::max(scale_ref, std::abs(v));
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * scale_ref;
  if (std::abs(d1) <= noise && std::abs(d2) <= noise) {
    s.status = "stationary";
    s.extrapolation_error_estimate = std::abs(d2);
    return s;
  }

  for (std::size_t i = 0; i + 2 < m; ++i) {
    const double a = s.values[i + 1] - s.values[i];
    const double b = s.values[i + 2] - s.values[i + 1];
    if (!(a * b > 0.0)) s.monotone = false;
  }
  if (!s.monotone) {
    s.status = "non_monotone";
    s.extrapolation_error_estimate = std::abs(d2);
    return s;
  }

  // Order p from d1 / d2 = (N1^-p - N2^-p) / (N2^-p - N3^-p), by bisection.
  const double n1 = s.grid_sizes[m - 3];
  const double n2 = s.grid_sizes[m - 2];
  const double n3 = s.grid_sizes[m - 1];
  const double q = d1 / d2;
  auto ratio = [&](double p) {
    return (std::pow(n1, -p) - std::pow(n2, -p)) / (std::pow(n2, -p) - std::pow(n3, -p));
  };
  double lo = 1e-6;
  double hi = 30.0;
  if (q <= ratio(lo)) {
    // Differences are not shrinking: no convergence to extrapolate.
    s.status = "non_convergent";
    s.extrapolation_error_estimate = std::abs(d2);
    return s;
  }
  if (q >= ratio(hi)) {
    s.observed_order = hi;
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ratio(mid) < q ? lo : hi) = mid;
    }
    s.observed_order = 0.5 * (lo + hi);
  }
  const double p = s.observed_order;
  const double c = d2 / (std::pow(n3, -p) - std::pow(n2, -p));
  s.extrapolated_value = v3 - c * std::pow(n3, -p);
  s.extrapolation_error_estimate = std::abs(v3 - s.extrapolated_value);
  s.extrapolated = true;
  s.status = "extrapolated";
  return s;
}

ConvergenceStudy convergence_study(const std::function<double(int)>& runner, std::vector<int> sizes, bool parallel) {
  if (sizes.size() < 3)
    throw ValidationError("convergence_study: at least 3 grid sizes are needed, got " + std::to_string(sizes.size()));
  std::sort(sizes.begin(), sizes.end());
  std::vector<double> values(sizes.size());
  if (parallel) {
    std::vector<std::future<double>> jobs;
    for (int n : sizes) jobs.push_back(std::async(std::launch::async, runner, n));
    for (std::size_t i = 0; i < jobs.size(); ++i) values[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < sizes.size(); ++i) values[i] = runner(sizes[i]);
  }
  return analyze_convergence(std::move(sizes), std::move(values));
}

namespace {

struct SumEntry {
  double value;
  int i;
  int j;
};

std::vector<SumEntry> lowest_sums(const EigenResult& a, const EigenResult& b, int k) {
  if (k < 1) throw ValidationError("product_spectrum: k must be >= 1");
  if (!a.converged || !b.converged) throw InsufficientInputError("product_spectrum: both factor spectra must be converged");
  const auto& ea = a.eigenvalues;
  const auto& eb = b.eigenvalues;
  if (ea.empty() || eb.empty()) throw InsufficientInputError("product_spectrum: empty factor spectrum");
  if (static_cast<std::size_t>(k) > ea.size() * eb.size())
    throw InsufficientInputError("product_spectrum: k = " + std::to_string(k) + " exceeds the " +
                                 std::to_string(ea.size() * eb.size()) + " available sums");
  std::vector<SumEntry> all;
  for (std::size_t i = 0; i < ea.size(); ++i)
    for (std::size_t j = 0; j < eb.size(); ++j)
      all.push_back({ea[i] + eb[j], static_cast<int>(i), static_cast<int>(j)});
  std::stable_sort(all.begin(), all.end(), [](const SumEntry& x, const SumEntry& y) { return x.value < y.value; });
  all.resize(static_cast<std::size_t>(k));
  // Any sum not enumerated involves an uncomputed eigenvalue, hence is at
  // least a_last + b_0 or a_0 + b_last.
  const double kth = all.back().value;
  if (ea.back() + eb.front() < kth || ea.front() + eb.back() < kth)
    throw InsufficientInputError("product_spectrum: the " + std::to_string(k) +
                                 " lowest sums are not certified by the factor spectra, compute more eigenvalues");
  return all;
}

}  // namespace

EigenResult product_spectrum(const EigenResult& a, const EigenResult& b, int k) {
  const auto sums = lowest_sums(a, b, k);
  EigenResult r;
  r.norm_bound = a.norm_bound + b.norm_bound;
  const double denom = std::max(r.norm_bound, 1e-300);
  for (const auto& s : sums) {
    r.eigenvalues.push_back(s.value);
    const double ra = a.residuals.empty() ? 0.0 : a.residuals[static_cast<std::size_t>(s.i)] * a.norm_bound;
    const double rb = b.residuals.empty() ? 0.0 : b.residuals[static_cast<std::size_t>(s.j)] * b.norm_bound;
    r.residuals.push_back((ra + rb) / denom);
  }
  r.iterations = a.iterations + b.iterations;
  r.converged = true;
  return r;
}

std::vector<std::pair<int, int>> product_index_pairs(const EigenResult& a, const EigenResult& b, int k) {
  std::vector<std::pair<int, int>> out;
  for (const auto& s : lowest_sums(a, b, k)) out.emplace_back(s.i, s.j);
  return out;
}

double product_twistor_residual(std::span<const cplx> psi_a, std::span<const cplx> psi_b, double lambda,
                                const OperatorHandle& trace_a, const OperatorHandle& trace_b) {
  auto energy = [](std::span<const cplx> psi, const OperatorHandle& t) {
    const auto tp = t.apply(psi);
    return dot(psi, tp).real() / dot(psi, psi).real();
  };
  return energy(psi_a, trace_a) + energy(psi_b, trace_b) - lambda / 2.0;
}

double kronecker_check(const CsrMatrix& a, const CsrMatrix& b) {
  const auto ra = dense_oracle(a, false);
  const auto rb = dense_oracle(b, false);
  const auto rs = dense_oracle(kronecker_sum(a, b), false);
  std::vector<double> sums;
  sums.reserve(ra.eigenvalues.size() * rb.eigenvalues.size());
  for (double x : ra.eigenvalues)
    for (double y : rb.eigenvalues) sums.push_back(x + y);
  std::sort(sums.begin(), sums.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) worst = std::max(worst, std::abs(sums[i] - rs.eigenvalues[i]));
  return worst;
}

DiracReport dirac_corollary_check(const EigenResult& dirac, const EigenResult& laplacian, const ConnectionField& conn,
                                  const LatticeGrid& grid, const TorusGeometry& geom, const LineBundleSpec& spec,
                                  const DiracOptions& opt) {
  if (geom.n() != 1) throw ValidationError("dirac_corollary_check: single-factor geometry required");
  DiracReport r;
  r.f_max = conn.f_max();
  if (!(r.f_max < 0.0))
    throw ValidationError("dirac_corollary_check: needs f_max < 0, got " + std::to_string(r.f_max));
  if (!dirac.converged || !laplacian.converged)
    throw InsufficientInputError("dirac_corollary_check: spectra did not converge");
  r.sites_per_dim = grid.sites_per_dim;
  r.threshold = std::sqrt(-2.0 * r.f_max);
  r.zero_cut = opt.zero_cut >= 0.0 ? opt.zero_cut : std::sqrt(2.0 * kernel_threshold(spec, geom));
  r.disc_tol = opt.disc_tol >= 0.0 ? opt.disc_tol : single_grid_tolerance(r.threshold, grid.sites_per_dim);

  const auto& mu = dirac.eigenvalues;
  std::vector<std::size_t> nonzero;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (std::abs(mu[i]) <= r.zero_cut)
      ++r.zero_modes;
    else
      nonzero.push_back(i);
  }
  if (nonzero.empty()) throw InsufficientInputError("dirac_corollary_check: no nonzero Dirac eigenvalue computed");

  r.min_abs_mu = std::abs(mu[nonzero.front()]);
  for (auto i : nonzero) r.min_abs_mu = std::min(r.min_abs_mu, std::abs(mu[i]));
  r.margin = r.min_abs_mu - r.threshold;

  for (auto i : nonzero) {
    double best = std::numeric_limits<double>::infinity();
    for (auto j : nonzero) best = std::min(best, std::abs(mu[i] + mu[j]));
    r.symmetry_defect = std::max(r.symmetry_defect, best);
  }

  r.lemma_ok = true;
  for (auto i : nonzero) {
    const double half = 0.5 * mu[i] * mu[i];
    double best = std::numeric_limits<double>::infinity();
    for (double lam : laplacian.eigenvalues) best = std::min(best, std::abs(half - lam));
    const double rel = best / std::max(1.0, half);
    r.lemma_max_mismatch = std::max(r.lemma_max_mismatch, rel);
    if (!(rel <= opt.lemma_tol)) r.lemma_ok = false;
  }

  if (dirac.eigenvectors.size() == mu.size()) {
    std::vector<std::size_t> pos;
    for (auto i : nonzero)
      if (mu[i] > 0.0) pos.push_back(i);
    std::stable_sort(pos.begin(), pos.end(), [&](std::size_t x, std::size_t y) { return mu[x] < mu[y]; });
    const auto sites = static_cast<std::size_t>(grid.sites());
    for (std::size_t q = 0; q < pos.size() && static_cast<int>(q) < opt.p0_count; ++q) {
      const auto& psi = dirac.eigenvectors[pos[q]];
      double top = 0.0;
      double all = 0.0;
      for (std::size_t s = 0; s < psi.size(); ++s) {
        const double w = std::norm(psi[s]);
        all += w;
        if (s < sites) top += w;
      }
      r.p0_ratios.push_back(top / all);
      r.p0_max_deviation = std::max(r.p0_max_deviation, std::abs(top / all - 0.5));
    }
  }

  double mu_scale = 1.0;
  for (auto i : nonzero) mu_scale = std::max(mu_scale, std::abs(mu[i]));
  r.symmetric = r.symmetry_defect <= 1e-10 * mu_scale;
  r.pass = r.margin >= -r.disc_tol && r.lemma_ok && r.symmetric;
  return r;
}

}  // namespace dolbeault
