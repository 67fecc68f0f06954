#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dolbeault/analysis.hpp"
#include "dolbeault/bundle.hpp"
#include "dolbeault/errors.hpp"
#include "oracles.hpp"

using namespace dolbeault;

namespace {

constexpr double kPi = std::numbers::pi;

struct Case {
  TorusGeometry geom;
  LineBundleSpec spec;
  LatticeGrid grid;
  ConnectionField conn;
};

Case make_case(int d, int n, double amp = 0.0, TorusFactor f = {0.0, 1.0, 1.0}) {
  auto g = make_torus({f});
  auto s = make_line_bundle({d});
  auto grid = make_grid(n, g);
  auto conn = constant_curvature_connection(s, g, grid);
  if (amp != 0.0) conn = perturb_connection(conn, profile_cosine(grid), amp);
  return {g, s, grid, conn};
}

EigenResult lowest(const Case& c, int k) {
  EigenRequest req;
  req.k = k;
  return lanczos_lowest(assemble_laplacian(c.conn, c.grid, c.geom), req);
}

EigenResult fake(std::vector<double> ev) {
  EigenResult r;
  r.eigenvalues = std::move(ev);
  r.residuals.assign(r.eigenvalues.size(), 0.0);
  r.converged = true;
  r.norm_bound = 1.0;
  return r;
}

}  // namespace

TEST_CASE("bound value") {
  CHECK(bound_value(-2 * kPi, 1) == doctest::Approx(2 * kPi));
  CHECK(bound_value(-1.0, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(bound_value(0.0, 1) == 0.0);
  CHECK(bound_value(0.0, 3) == 0.0);
  CHECK(bound_value(-4 * kPi, 2) == doctest::Approx(8 * kPi / 3));
  for (double f : {-3.0, -0.5, 1.0, 7.0})
    for (double c : {0.5, 2.0, 10.0}) CHECK(bound_value(c * f, 2) == doctest::Approx(c * bound_value(f, 2)));
  double prev = 1e300;
  for (double f = -10.0; f <= 10.0; f += 0.5) {
    CHECK(bound_value(f, 3) < prev);
    prev = bound_value(f, 3);
  }
  CHECK_THROWS_AS(bound_value(-1.0, 0), ValidationError);
}

TEST_CASE("kernel rule") {
  CHECK(expected_kernel_dim(make_line_bundle({-2})) == 0);
  CHECK(expected_kernel_dim(make_line_bundle({0})) == 1);
  CHECK(expected_kernel_dim(make_line_bundle({3})) == 3);
  CHECK(expected_kernel_dim(make_line_bundle({2, 3})) == 6);
  CHECK(expected_kernel_dim(make_line_bundle({2, -1})) == 0);
  const auto g = make_torus({{0.0, 1.0, 1.0}});
  CHECK(kernel_threshold(make_line_bundle({0}), g) == doctest::Approx(kPi));
  CHECK(kernel_threshold(make_line_bundle({-3}), g) == doctest::Approx(3 * kPi));
  CHECK(single_grid_tolerance(2 * kPi, 16) == doctest::Approx(10.0 / 16 * 2 * kPi));
}

TEST_CASE("verify_bound on the constant connection") {
  const auto c = make_case(-1, 16);
  const auto spec = lowest(c, 3);
  REQUIRE(spec.converged);
  const auto r = verify_bound(spec, c.conn, c.grid, c.geom, c.spec);
  CHECK(r.bound == doctest::Approx(2 * kPi).epsilon(1e-13));
  CHECK(r.bound == doctest::Approx(bound_value(hermitian_einstein_constant(c.spec, c.geom), 1)).epsilon(1e-13));
  CHECK(r.he_flag);
  CHECK(r.kernel_dim == 0);
  CHECK(r.lambda_1 == doctest::Approx(spec.eigenvalues[0]));
  CHECK(r.margin == doctest::Approx(r.lambda_1 - r.bound));
  CHECK(r.disc_tol == doctest::Approx(single_grid_tolerance(r.bound, 16)));
  CHECK(r.pass);
  CHECK(r.twistor_rho >= 0.0);
  CHECK(r.twistor_rho < 0.05 * 2 * kPi);
}

TEST_CASE("verify_bound away from equality") {
  const auto c = make_case(-1, 16, 0.2 * 2 * kPi);
  const auto r = verify_bound(lowest(c, 3), c.conn, c.grid, c.geom, c.spec);
  CHECK_FALSE(r.he_flag);
  CHECK(r.f_max == curvature_statistics(c.conn).f_max);
  CHECK(r.bound == doctest::Approx(-r.f_max));
  CHECK(r.bound < 2 * kPi);
  CHECK(r.margin > 0.1 * 2 * kPi);
  CHECK(r.pass);
}

TEST_CASE("verify_bound with a kernel") {
  const auto c = make_case(2, 12);
  const auto spec = lowest(c, 5);
  const auto r = verify_bound(spec, c.conn, c.grid, c.geom, c.spec);
  CHECK(r.kernel_dim == 2);
  CHECK(r.expected_kernel_dim == 2);
  const auto ref = dense_oracle(assemble_laplacian(c.conn, c.grid, c.geom), false);
  CHECK(r.lambda_1 == doctest::Approx(ref.eigenvalues[2]).epsilon(1e-8));
  CHECK(r.bound < 0.0);
  CHECK(r.pass);

  const auto flat = make_case(0, 12);
  const auto rf = verify_bound(lowest(flat, 3), flat.conn, flat.grid, flat.geom, flat.spec);
  CHECK(rf.bound == 0.0);
  CHECK(rf.kernel_dim == 1);
  CHECK(rf.pass);
}

TEST_CASE("verify_bound is gauge invariant") {
  const auto c = make_case(-2, 12, 1.5);
  const auto gauged = gauge_transform(c.conn, random_gauge(c.grid, 31));
  const auto a = verify_bound(lowest(c, 4), c.conn, c.grid, c.geom, c.spec);
  Case cg = c;
  cg.conn = gauged;
  const auto b = verify_bound(lowest(cg, 4), cg.conn, cg.grid, cg.geom, cg.spec);
  CHECK(std::abs(a.lambda_1 - b.lambda_1) < 1e-9);
  CHECK(std::abs(a.bound - b.bound) < 1e-9);
  CHECK(std::abs(a.margin - b.margin) < 1e-9);
  CHECK(std::abs(a.twistor_rho - b.twistor_rho) < 1e-9);
  CHECK(a.kernel_dim == b.kernel_dim);
  CHECK(a.pass == b.pass);
  CHECK(a.he_flag == b.he_flag);
}

TEST_CASE("verify_bound preconditions") {
  const auto c = make_case(-1, 8);
  auto spec = lowest(c, 2);
  auto unconverged = spec;
  unconverged.converged = false;
  CHECK_THROWS_AS(verify_bound(unconverged, c.conn, c.grid, c.geom, c.spec), InsufficientInputError);
  auto novec = spec;
  novec.eigenvectors.clear();
  CHECK_THROWS_AS(verify_bound(novec, c.conn, c.grid, c.geom, c.spec), InsufficientInputError);
  const auto k2 = make_case(2, 8);
  CHECK_THROWS_AS(verify_bound(lowest(k2, 2), k2.conn, k2.grid, k2.geom, k2.spec), InsufficientInputError);
}

TEST_CASE("a forced violation is a FAIL verdict, not an exception") {
  const auto c = make_case(-1, 8);
  auto spec = lowest(c, 2);
  spec.eigenvalues[0] = 4.0;  // above the kernel cut, below 2 pi
  BoundOptions opt;
  opt.disc_tol = 0.1;
  const auto r = verify_bound(spec, c.conn, c.grid, c.geom, c.spec, opt);
  CHECK_FALSE(r.pass);
  CHECK(r.margin < -r.disc_tol);
}

TEST_CASE("convergence study on designed sequences") {
  const std::vector<int> sizes{16, 32, 64};
  SUBCASE("first order") {
    std::vector<double> v;
    for (int n : sizes) v.push_back(3.0 + 5.0 / n);
    const auto s = analyze_convergence(sizes, v);
    CHECK(s.status == "extrapolated");
    CHECK(s.extrapolated);
    CHECK(s.monotone);
    CHECK(s.observed_order == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.extrapolated_value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.extrapolation_error_estimate == doctest::Approx(5.0 / 64).epsilon(1e-8));
  }
  SUBCASE("second order, uneven sizes") {
    const std::vector<int> sz{10, 17, 24, 40};
    std::vector<double> v;
    for (int n : sz) v.push_back(-1.0 - 7.0 / (n * n));
    const auto s = analyze_convergence(sz, v);
    CHECK(s.observed_order == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s.extrapolated_value == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("non-monotone is flagged and not extrapolated") {
    const auto s = analyze_convergence(sizes, {1.0, 2.0, 1.5});
    CHECK(s.status == "non_monotone");
    CHECK_FALSE(s.monotone);
    CHECK_FALSE(s.extrapolated);
    CHECK(s.extrapolated_value == 1.5);
  }
  SUBCASE("growing differences") {
    const auto s = analyze_convergence(sizes, {1.0, 1.1, 1.5});
    CHECK(s.status == "non_convergent");
    CHECK_FALSE(s.extrapolated);
  }
  SUBCASE("stationary") {
    const auto s = analyze_convergence(sizes, {2.0, 2.0, 2.0});
    CHECK(s.status == "stationary");
    CHECK(s.extrapolated_value == 2.0);
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS(analyze_convergence({16, 32}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(analyze_convergence({16, 16, 32}, {1.0, 2.0, 3.0}), ValidationError);
    CHECK_THROWS_AS(analyze_convergence({16, 32, 64}, {1.0, 2.0}), ValidationError);
  }
}

TEST_CASE("convergence study runner is order independent") {
  auto f = [](int n) { return 2.0 + 1.0 / (n * std::sqrt(static_cast<double>(n))); };
  const auto a = convergence_study(f, {8, 16, 32}, false);
  const auto b = convergence_study(f, {32, 8, 16}, true);
  CHECK(a.grid_sizes == b.grid_sizes);
  CHECK(a.values == b.values);
  CHECK(a.extrapolated_value == b.extrapolated_value);
  CHECK(a.observed_order == doctest::Approx(1.5).epsilon(1e-8));
  CHECK_THROWS_AS(convergence_study(f, {8, 16}), ValidationError);
}

TEST_CASE("lambda_1 extrapolates to the first Landau level") {
  auto run = [](int n) {
    const auto c = make_case(-1, n);
    EigenRequest req;
    req.k = 1;
    return lanczos_lowest(assemble_laplacian(c.conn, c.grid, c.geom), req).eigenvalues[0];
  };
  const auto s = convergence_study(run, {16, 32, 64}, true);
  CHECK(s.extrapolated);
  CHECK(std::abs(s.extrapolated_value - 2 * kPi) < 0.01 * 2 * kPi);
}

TEST_CASE("product spectrum") {
  const auto r = product_spectrum(fake({1.0, 2.0}), fake({10.0, 20.0}), 2);
  REQUIRE(r.eigenvalues.size() == 2);
  CHECK(r.eigenvalues[0] == 11.0);
  CHECK(r.eigenvalues[1] == 12.0);
  CHECK(r.converged);

  const auto a = fake({0.5, 1.0, 4.0, 9.0});
  const auto b = fake({0.25, 2.0, 2.5, 7.0});
  const auto ab = product_spectrum(a, b, 5);
  const auto ba = product_spectrum(b, a, 5);
  CHECK(ab.eigenvalues == ba.eigenvalues);
  const auto pairs = product_index_pairs(a, b, 5);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    CHECK(ab.eigenvalues[i] == a.eigenvalues[static_cast<std::size_t>(pairs[i].first)] +
                                   b.eigenvalues[static_cast<std::size_t>(pairs[i].second)]);

  // 4th sum is 13 but a_last + b_0 = 12: an uncomputed sum could undercut it
  CHECK_THROWS_AS(product_spectrum(fake({1.0, 2.0}), fake({10.0, 11.0}), 4), InsufficientInputError);
  CHECK_THROWS_AS(product_spectrum(fake({1.0}), fake({10.0, 30.0}), 2), InsufficientInputError);
  auto bad = fake({1.0, 2.0});
  bad.converged = false;
  CHECK_THROWS_AS(product_spectrum(bad, fake({1.0, 2.0}), 1), InsufficientInputError);
}

TEST_CASE("Kronecker sum cross-check") {
  const std::size_t n = 6;
  const auto ad = oracle::random_hermitian(n, 1);
  const auto bd = oracle::random_hermitian(n, 2);
  auto to_csr = [n](const std::vector<cplx>& d) {
    std::vector<Triplet> t;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        t.push_back({static_cast<std::int32_t>(r), static_cast<std::int32_t>(c), d[r * n + c]});
    return CsrMatrix(static_cast<std::int32_t>(n), static_cast<std::int32_t>(n), std::move(t));
  };
  const auto a = to_csr(ad);
  const auto b = to_csr(bd);
  CHECK(kronecker_check(a, b) < 1e-12);
  // independent route: Jacobi on the assembled sum vs pairwise Jacobi sums
  const auto sum = kronecker_sum(a, b);
  const auto es = oracle::jacobi_eigenvalues(sum.to_dense(), n * n);
  const auto ea = oracle::jacobi_eigenvalues(ad, n);
  const auto eb = oracle::jacobi_eigenvalues(bd, n);
  std::vector<double> pair;
  for (double x : ea)
    for (double y : eb) pair.push_back(x + y);
  std::sort(pair.begin(), pair.end());
  CHECK(oracle::max_abs_diff(es, pair, n * n) < 1e-11);

  const auto c = make_case(-1, 6);
  const auto lap = assemble_laplacian(c.conn, c.grid, c.geom);
  CHECK(kronecker_check(lap.matrix, lap.matrix) < 1e-10);
}

TEST_CASE("product twistor residual") {
  const auto c = make_case(-1, 16);
  const auto tr = assemble_trace_laplacian(c.conn, c.grid, c.geom);
  const auto spec = lowest(c, 1);
  const auto& psi = spec.eigenvectors[0];
  const double lam = 2 * spec.eigenvalues[0];
  const double e = twistor_residual(psi, 0.0, 1, tr, 1.0).gradient_energy;
  const double rho = product_twistor_residual(psi, psi, lam, tr, tr);
  CHECK(rho == doctest::Approx(2 * e - lam / 2).epsilon(1e-12));
  CHECK(std::abs(rho - 2 * kPi) < 0.05 * 2 * kPi);
}

TEST_CASE("Dirac corollary check") {
  const auto c = make_case(-1, 8, 1.0);
  const auto dir = dense_oracle(assemble_dirac(c.conn, c.grid, c.geom));
  const auto lap = dense_oracle(assemble_laplacian(c.conn, c.grid, c.geom), false);
  EigenResult d = dir;
  d.residuals.assign(d.eigenvalues.size(), 0.0);
  const auto r = dirac_corollary_check(d, lap, c.conn, c.grid, c.geom, c.spec);
  CHECK(r.symmetric);
  CHECK(r.lemma_ok);
  CHECK(r.threshold == doctest::Approx(std::sqrt(-2 * r.f_max)));
  CHECK(r.zero_modes >= 64);
  CHECK(r.p0_ratios.size() == 5);
  CHECK(r.p0_max_deviation < 1e-8);
  CHECK(r.min_abs_mu > 0.0);
  CHECK(r.pass);

  const auto pos = make_case(1, 8);
  const auto pd = dense_oracle(assemble_dirac(pos.conn, pos.grid, pos.geom));
  CHECK_THROWS_AS(dirac_corollary_check(pd, pd, pos.conn, pos.grid, pos.geom, pos.spec), ValidationError);
}

TEST_CASE("Dirac lemma mismatch is detected") {
  const auto c = make_case(-1, 6);
  const auto dir = dense_oracle(assemble_dirac(c.conn, c.grid, c.geom));
  auto lap = dense_oracle(assemble_laplacian(c.conn, c.grid, c.geom), false);
  for (auto& v : lap.eigenvalues) v += 0.5;
  const auto r = dirac_corollary_check(dir, lap, c.conn, c.grid, c.geom, c.spec);
  CHECK_FALSE(r.lemma_ok);
  CHECK_FALSE(r.pass);
}
