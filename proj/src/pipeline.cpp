#include "dolbeault/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "dolbeault/errors.hpp"

namespace dolbeault {

namespace {

template <class T>
T broadcast(const std::vector<T>& xs, int k) {
  return xs.size() == 1 ? xs.front() : xs.at(static_cast<std::size_t>(k));
}

// Runs job(N) for every grid, concurrently if asked; output in grid order.
template <class F>
auto for_grids(const std::vector<int>& grids, bool parallel, F job) {
  using R = decltype(job(0));
  std::vector<R> out;
  if (parallel && grids.size() > 1) {
    std::vector<std::future<R>> jobs;
    for (int n : grids) jobs.push_back(std::async(std::launch::async, job, n));
    for (auto& j : jobs) out.push_back(j.get());
  } else {
    for (int n : grids) out.push_back(job(n));
  }
  return out;
}

void check_k(int k, std::int32_t dim, int sites_per_dim) {
  if (k > dim / 4)
    throw ValidationError("k: " + std::to_string(k) + " eigenpairs exceed a quarter of the dimension " +
                          std::to_string(dim) + " at grid " + std::to_string(sites_per_dim));
}

std::vector<double> column(const std::vector<BoundReport>& rs, double BoundReport::*field) {
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(r.*field);
  return v;
}

std::vector<int> sizes_of(const std::vector<BoundReport>& rs) {
  std::vector<int> v;
  for (const auto& r : rs) v.push_back(r.sites_per_dim);
  return v;
}

}  // namespace

Problem make_problem(const RunConfig& cfg) {
  const int n = cfg.command == "product" ? 2 : 1;
  std::vector<TorusFactor> factors;
  std::vector<int> degrees;
  for (int k = 0; k < n; ++k) {
    const auto tau = broadcast(cfg.moduli, k);
    factors.push_back({tau.real(), tau.imag(), broadcast(cfg.areas, k)});
    degrees.push_back(broadcast(cfg.degrees, k));
  }
  Problem p{make_torus(std::move(factors)), make_line_bundle(std::move(degrees)), cfg.perturb_profile,
            cfg.perturb_amplitude, cfg.seed};
  if (p.profile == "cosine") p.profile = "cos";
  return p;
}

SolveOptions make_solve_options(const RunConfig& cfg) {
  SolveOptions o;
  o.k = cfg.k;
  o.tol = cfg.tol;
  o.seed = cfg.seed;
  o.max_iter = cfg.max_iter;
  return o;
}

ConnectionField build_connection(const Problem& p, const LatticeGrid& grid) {
  auto conn = constant_curvature_connection(p.spec, p.geom, grid);
  if (p.profile != "none" && p.amplitude != 0.0) {
    const auto profile = profile_by_name(p.profile, grid, p.seed);
    conn = perturb_connection(conn, profile, p.amplitude, 0);
  }
  return conn;
}

EigenResult laplacian_spectrum(const OperatorHandle& lap, int k, const SolveOptions& opt) {
  check_k(k, lap.dim(), static_cast<int>(std::lround(std::sqrt(lap.sites))));
  EigenRequest req;
  req.k = k;
  req.tol = opt.tol;
  req.seed = opt.seed;
  req.max_iter = opt.max_iter;
  return lanczos_lowest(lap, req);
}

EigenResult dirac_spectrum(const OperatorHandle& dirac, int pairs, const SolveOptions& opt) {
  check_k(2 * pairs, dirac.dim(), static_cast<int>(std::lround(std::sqrt(dirac.sites))));
  EigenRequest req;
  req.k = 2 * pairs;
  req.tol = opt.tol;
  req.seed = opt.seed;
  req.max_iter = opt.max_iter;
  req.mode = EigenMode::around_shift;
  req.shift = 0.0;
  req.chiral_split = static_cast<std::size_t>(dirac.sites);
  return lanczos_lowest(dirac, req);
}

SpectrumRun run_spectrum(const Problem& p, int sites_per_dim, const SolveOptions& opt,
                         const ConnectionField* conn_override) {
  const auto grid = make_grid(sites_per_dim, p.geom);
  const auto conn = conn_override ? *conn_override : build_connection(p, grid);
  const auto lap = assemble_laplacian(conn, grid, p.geom);
  SpectrumRun run;
  run.sites_per_dim = sites_per_dim;
  run.f_max = conn.f_max();
  run.kernel_threshold = kernel_threshold(p.spec, p.geom);
  run.spectrum = laplacian_spectrum(lap, opt.k, opt);
  for (double e : run.spectrum.eigenvalues)
    if (e < run.kernel_threshold) ++run.kernel_dim;
  return run;
}

BoundSweep run_bound_sweep(const Problem& p, const std::vector<int>& grids, const SolveOptions& opt) {
  if (grids.empty()) throw ValidationError("grids: at least one grid size is needed");
  const int k = std::max(opt.k, expected_kernel_dim(p.spec) + 2);
  struct One {
    bool converged;
    BoundReport report;
  };
  auto results = for_grids(grids, opt.parallel, [&](int n) {
    const auto grid = make_grid(n, p.geom);
    const auto conn = build_connection(p, grid);
    const auto lap = assemble_laplacian(conn, grid, p.geom);
    const auto spec = laplacian_spectrum(lap, k, opt);
    if (!spec.converged) return One{false, {}};
    return One{true, verify_bound(spec, conn, grid, p.geom, p.spec)};
  });

  BoundSweep sweep;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].converged) {
      sweep.converged = false;
      sweep.failed_grid = grids[i];
      return sweep;
    }
    sweep.per_grid.push_back(results[i].report);
  }
  sweep.combined = sweep.per_grid.back();
  if (grids.size() >= 3) {
    const auto sizes = sizes_of(sweep.per_grid);
    sweep.lambda_study = analyze_convergence(sizes, column(sweep.per_grid, &BoundReport::lambda_1));
    sweep.rho_study = analyze_convergence(sizes, column(sweep.per_grid, &BoundReport::twistor_rho));
    if (sweep.lambda_study->extrapolated || sweep.lambda_study->status == "stationary") {
      auto& c = sweep.combined;
      c.lambda_1 = sweep.lambda_study->extrapolated_value;
      c.margin = c.lambda_1 - c.bound;
      c.disc_tol = 3.0 * sweep.lambda_study->extrapolation_error_estimate;
      c.extrapolated = sweep.lambda_study->extrapolated;
      c.pass = c.margin >= -c.disc_tol;
    }
  }
  return sweep;
}

DiracSweep run_dirac_sweep(const Problem& p, const std::vector<int>& grids, const SolveOptions& opt) {
  if (grids.empty()) throw ValidationError("grids: at least one grid size is needed");
  if (p.geom.n() != 1) throw ValidationError("degree: the Dirac check takes a single torus factor");
  const int kern = expected_kernel_dim(p.spec);
  struct One {
    bool converged;
    DiracReport report;
    std::vector<double> mu;
  };
  auto results = for_grids(grids, opt.parallel, [&](int n) {
    const auto grid = make_grid(n, p.geom);
    const auto conn = build_connection(p, grid);
    if (!(conn.f_max() < 0.0))
      throw ValidationError("degree: the Dirac corollary needs max i Lambda F < 0, got " + std::to_string(conn.f_max()));
    const auto dirac = assemble_dirac(conn, grid, p.geom);
    const auto lap = assemble_laplacian(conn, grid, p.geom);
    const auto mu = dirac_spectrum(dirac, opt.k + kern, opt);
    const auto lam = laplacian_spectrum(lap, opt.k + kern + 1, opt);
    if (!mu.converged || !lam.converged) return One{false, {}, {}};
    return One{true, dirac_corollary_check(mu, lam, conn, grid, p.geom, p.spec), mu.eigenvalues};
  });

  DiracSweep sweep;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].converged) {
      sweep.converged = false;
      sweep.failed_grid = grids[i];
      return sweep;
    }
    sweep.per_grid.push_back(results[i].report);
    sweep.mu.push_back(results[i].mu);
  }
  sweep.combined = sweep.per_grid.back();
  bool all_ok = true;
  for (const auto& r : sweep.per_grid) all_ok = all_ok && r.lemma_ok && r.symmetric;
  if (grids.size() >= 3) {
    std::vector<double> v;
    for (const auto& r : sweep.per_grid) v.push_back(r.min_abs_mu);
    sweep.mu_study = analyze_convergence(grids, v);
    if (sweep.mu_study->extrapolated || sweep.mu_study->status == "stationary") {
      auto& c = sweep.combined;
      c.min_abs_mu = sweep.mu_study->extrapolated_value;
      c.margin = c.min_abs_mu - c.threshold;
      c.disc_tol = 3.0 * sweep.mu_study->extrapolation_error_estimate;
      c.extrapolated = sweep.mu_study->extrapolated;
    }
  }
  auto& c = sweep.combined;
  c.pass = c.margin >= -c.disc_tol && all_ok;
  return sweep;
}

ProductSweep run_product_sweep(const Problem& p, const std::vector<int>& grids, const SolveOptions& opt,
                               int kronecker_grid) {
  if (grids.empty()) throw ValidationError("grids: at least one grid size is needed");
  if (p.geom.n() != 2) throw ValidationError("degree: product composition takes exactly two factors");
  const int k = std::max(opt.k, expected_kernel_dim(p.spec) + 2);
  const double thr = kernel_threshold(p.spec, p.geom);
  struct One {
    bool converged;
    ProductGrid g;
    bool he;
  };
  auto results = for_grids(grids, opt.parallel, [&](int n) {
    const auto grid = make_grid(n, p.geom);
    const auto conn = build_connection(p, grid);
    EigenResult fs[2];
    OperatorHandle trace[2];
    for (int f = 0; f < 2; ++f) {
      const auto lap = assemble_laplacian(conn, grid, p.geom, f);
      fs[f] = laplacian_spectrum(lap, k, opt);
      trace[f] = assemble_trace_laplacian(conn, grid, p.geom, f);
      if (!fs[f].converged) return One{false, {}, false};
    }
    ProductGrid g;
    g.sites_per_dim = n;
    g.factor_lambda[0] = fs[0].eigenvalues.front();
    g.factor_lambda[1] = fs[1].eigenvalues.front();
    g.spectrum = product_spectrum(fs[0], fs[1], k);
    const auto pairs = product_index_pairs(fs[0], fs[1], k);
    std::size_t first = pairs.size();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (g.spectrum.eigenvalues[i] < thr)
        ++g.kernel_dim;
      else if (first == pairs.size())
        first = i;
    }
    if (first == pairs.size())
      throw InsufficientInputError("product: every computed sum lies below the kernel threshold, raise k");
    g.lambda_1 = g.spectrum.eigenvalues[first];
    const auto [ia, ib] = pairs[first];
    g.twistor_rho = product_twistor_residual(fs[0].eigenvectors[static_cast<std::size_t>(ia)],
                                             fs[1].eigenvectors[static_cast<std::size_t>(ib)], g.lambda_1, trace[0],
                                             trace[1]);
    g.f_max = conn.f_max();
    g.bound = bound_value(g.f_max, 2);
    g.margin = g.lambda_1 - g.bound;
    return One{true, std::move(g), curvature_statistics(conn).is_hermitian_einstein};
  });

  ProductSweep sweep;
  bool he = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].converged) {
      sweep.converged = false;
      sweep.failed_grid = grids[i];
      return sweep;
    }
    he = results[i].he;
    sweep.per_grid.push_back(std::move(results[i].g));
  }

  const auto& last = sweep.per_grid.back();
  auto& c = sweep.combined;
  c.n = 2;
  c.sites_per_dim = last.sites_per_dim;
  c.f_max = last.f_max;
  c.bound = last.bound;
  c.lambda_1 = last.lambda_1;
  c.margin = last.margin;
  c.kernel_dim = last.kernel_dim;
  c.expected_kernel_dim = expected_kernel_dim(p.spec);
  c.kernel_threshold = thr;
  c.he_flag = he;
  c.twistor_rho = last.twistor_rho;
  c.twistor_consistent = true;
  c.disc_tol = single_grid_tolerance(c.bound, c.sites_per_dim);
  if (grids.size() >= 3) {
    std::vector<double> lam;
    std::vector<double> rho;
    for (const auto& g : sweep.per_grid) {
      lam.push_back(g.lambda_1);
      rho.push_back(g.twistor_rho);
    }
    sweep.lambda_study = analyze_convergence(grids, lam);
    sweep.rho_study = analyze_convergence(grids, rho);
    if (sweep.lambda_study->extrapolated || sweep.lambda_study->status == "stationary") {
      c.lambda_1 = sweep.lambda_study->extrapolated_value;
      c.margin = c.lambda_1 - c.bound;
      c.disc_tol = 3.0 * sweep.lambda_study->extrapolation_error_estimate;
      c.extrapolated = sweep.lambda_study->extrapolated;
    }
  }
  c.pass = c.margin >= -c.disc_tol;

  if (kronecker_grid > 0) {
    const auto grid = make_grid(kronecker_grid, p.geom);
    const auto conn = build_connection(p, grid);
    const auto a = assemble_laplacian(conn, grid, p.geom, 0);
    const auto b = assemble_laplacian(conn, grid, p.geom, 1);
    sweep.kronecker_grid = kronecker_grid;
    sweep.kronecker_defect = kronecker_check(a.matrix, b.matrix);
  }
  return sweep;
}

double weitzenbock_at(const Problem& p, int sites_per_dim, const SolveOptions& opt, int modes, bool* converged) {
  const auto grid = make_grid(sites_per_dim, p.geom);
  const auto conn = build_connection(p, grid);
  const auto lap = assemble_laplacian(conn, grid, p.geom);
  const auto trace = assemble_trace_laplacian(conn, grid, p.geom);
  const auto spec = laplacian_spectrum(lap, modes, opt);
  if (converged) *converged = spec.converged;
  const auto defect = weitzenbock_defect(lap, trace, conn.factor(0));
  return weitzenbock_residual(defect, spec.eigenvectors).norm;
}

}  // namespace dolbeault
