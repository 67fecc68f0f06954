#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dolbeault/analysis.hpp"
#include "dolbeault/bundle.hpp"
#include "dolbeault/eigensolver.hpp"
#include "dolbeault/errors.hpp"
#include "dolbeault/operators.hpp"
#include "oracles.hpp"

using namespace dolbeault;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup {
  TorusGeometry geom;
  LineBundleSpec spec;
  LatticeGrid grid;
  ConnectionField conn;
};

Setup setup(int d, int n, TorusFactor f = {0.0, 1.0, 1.0}) {
  auto g = make_torus({f});
  auto s = make_line_bundle({d});
  auto grid = make_grid(n, g);
  return {g, s, grid, constant_curvature_connection(s, g, grid)};
}

std::vector<double> jacobi(const CsrMatrix& m) {
  return oracle::jacobi_eigenvalues(m.to_dense(), static_cast<std::size_t>(m.rows()));
}

// Dense product of row-major matrices, (r x k) (k x c).
std::vector<cplx> matmul(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t r, std::size_t k,
                         std::size_t c) {
  std::vector<cplx> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const cplx x = a[i * k + l];
      if (x == cplx{}) continue;
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] += x * b[l * c + j];
    }
  return out;
}

std::vector<cplx> adjoint_dense(const std::vector<cplx>& a, std::size_t r, std::size_t c) {
  std::vector<cplx> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = std::conj(a[i * c + j]);
  return out;
}

ConnectionField perturbed(const Setup& s, std::uint64_t seed, double amp) {
  return perturb_connection(s.conn, profile_random_smooth(s.grid, seed), amp);
}

}  // namespace

TEST_CASE("exact hermiticity and adjointness") {
  for (TorusFactor f : {TorusFactor{0.0, 1.0, 1.0}, TorusFactor{0.35, 0.8, 1.7}}) {
    for (int d : {-2, 0, 3}) {
      auto s = setup(d, 8, f);
      const auto conn = perturbed(s, 3, 2.0);
      const auto lap = assemble_laplacian(conn, s.grid, s.geom);
      const auto dir = assemble_dirac(conn, s.grid, s.geom);
      const auto tr = assemble_trace_laplacian(conn, s.grid, s.geom);
      CHECK(lap.matrix.hermiticity_defect() == 0.0);
      CHECK(dir.matrix.hermiticity_defect() == 0.0);
      CHECK(tr.matrix.hermiticity_defect() == 0.0);

      const auto b = assemble_dbar(conn, s.grid, s.geom);
      const auto bh = assemble_dbar_adjoint(conn, s.grid, s.geom);
      REQUIRE(b.matrix.rows() == 2 * 64);
      REQUIRE(bh.matrix.cols() == 2 * 64);
      for (const auto& t : b.matrix.to_triplets()) CHECK(bh.matrix.at(t.col, t.row) == std::conj(t.value));
      CHECK(bh.matrix.nonzeros() == b.matrix.nonzeros());
    }
  }
}

TEST_CASE("dbar kills constants on the flat bundle") {
  auto s = setup(0, 8, {0.4, 1.3, 2.0});
  const auto b = assemble_dbar(s.conn, s.grid, s.geom);
  const std::vector<cplx> one(64, {1.0, 0.0});
  for (const auto& v : b.apply(one)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("flat spectrum matches the Fourier symbol") {
  for (TorusFactor f : {TorusFactor{0.0, 1.0, 1.0}, TorusFactor{0.0, 1.0, 2.5}, TorusFactor{0.3, 0.9, 1.0}}) {
    auto s = setup(0, 8, f);
    const auto lap = assemble_laplacian(s.conn, s.grid, s.geom);
    const auto got = jacobi(lap.matrix);
    const auto expect = oracle::flat_symbol_spectrum(8, f.modulus(), f.area);
    CHECK(oracle::max_abs_diff(got, expect, 64) < 1e-9 * expect.back());
    // simple zero mode
    CHECK(std::abs(got[0]) < 1e-10);
    CHECK(got[1] > 1.0);
  }
}

TEST_CASE("negative degree has no kernel") {
  auto s = setup(-1, 8);
  const auto ev = jacobi(assemble_laplacian(s.conn, s.grid, s.geom).matrix);
  CHECK(ev[0] > 0.8 * 2 * kPi);
}

TEST_CASE("spectra approach the Landau levels") {
  // d = -1 and d = -3 on the unit torus: first levels with multiplicity |d|.
  for (int d : {-1, -3}) {
    double prev = 1e300;
    for (int n : {8, 16}) {
      auto s = setup(d, n);
      const auto res = dense_oracle(assemble_laplacian(s.conn, s.grid, s.geom), false);
      const auto levels = oracle::landau_levels(d, 1.0, 2 * std::abs(d));
      double err = 0.0;
      for (std::size_t i = 0; i < levels.size(); ++i)
        err = std::max(err, std::abs(res.eigenvalues[i] - levels[i]) / levels[i]);
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 0.05);
  }
}

TEST_CASE("positive degree kernel is counted by the threshold rule") {
  auto s = setup(2, 16);
  const auto res = dense_oracle(assemble_laplacian(s.conn, s.grid, s.geom), false);
  const double thr = kernel_threshold(s.spec, s.geom);
  const auto below = std::count_if(res.eigenvalues.begin(), res.eigenvalues.end(), [&](double v) { return v < thr; });
  CHECK(below == 2);
  // the near-zero pair shrinks under refinement
  auto s8 = setup(2, 8);
  const auto r8 = dense_oracle(assemble_laplacian(s8.conn, s8.grid, s8.geom), false);
  CHECK(res.eigenvalues[1] < r8.eigenvalues[1]);
}

TEST_CASE("Dirac square is block diagonal with twice the Laplacians") {
  auto s = setup(-1, 6, {0.2, 1.1, 1.3});
  const auto conn = perturbed(s, 9, 1.0);
  const auto d = assemble_dirac(conn, s.grid, s.geom);
  const auto b = assemble_dbar(conn, s.grid, s.geom);
  const std::size_t n0 = 36, n1 = 72, n = 108;
  const auto dd = d.matrix.to_dense();
  const auto d2 = matmul(dd, dd, n, n, n);
  const auto bd = b.matrix.to_dense();
  const auto bh = adjoint_dense(bd, n1, n0);
  const auto btb = matmul(bh, bd, n0, n1, n0);
  const auto bbt = matmul(bd, bh, n1, n0, n1);
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      cplx expect{};
      if (i < n0 && j < n0) expect = 2.0 * btb[i * n0 + j];
      if (i >= n0 && j >= n0) expect = 2.0 * bbt[(i - n0) * n1 + (j - n0)];
      err = std::max(err, std::abs(d2[i * n + j] - expect));
      scale = std::max(scale, std::abs(expect));
    }
  CHECK(err < 1e-12 * scale);

  // and the assembled Laplacian is that same block
  const auto lap = assemble_laplacian(conn, s.grid, s.geom).matrix.to_dense();
  double lerr = 0.0;
  for (std::size_t i = 0; i < n0 * n0; ++i) lerr = std::max(lerr, std::abs(lap[i] - btb[i]));
  CHECK(lerr < 1e-12 * scale);
}

TEST_CASE("Dirac spectrum is symmetric and p0 carries half the norm") {
  auto s = setup(-1, 8);
  const auto conn = perturbed(s, 4, 1.5);
  const auto d = assemble_dirac(conn, s.grid, s.geom);
  const auto ev = jacobi(d.matrix);
  const auto n = ev.size();
  double defect = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(ev[i]) < 1e-8) continue;
    double best = 1e300;
    for (double w : ev) best = std::min(best, std::abs(ev[i] + w));
    defect = std::max(defect, best);
  }
  CHECK(defect < 1e-10 * std::max(1.0, ev.back()));

  const auto res = dense_oracle(d);
  int checked = 0;
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
    if (std::abs(res.eigenvalues[i]) < 1e-6) continue;
    const auto sec = to_section(d, res.eigenvectors[i]);
    const double ratio = project_p0(sec).norm_squared() / sec.norm_squared();
    CHECK(ratio == doctest::Approx(0.5).epsilon(1e-8));
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("half mu squared is a Laplacian eigenvalue") {
  auto s = setup(-2, 6);
  const auto conn = perturbed(s, 2, 1.0);
  const auto mu = jacobi(assemble_dirac(conn, s.grid, s.geom).matrix);
  const auto lam = jacobi(assemble_laplacian(conn, s.grid, s.geom).matrix);
  for (double m : mu) {
    if (m <= 1e-8) continue;
    double best = 1e300;
    for (double l : lam) best = std::min(best, std::abs(0.5 * m * m - l));
    CHECK(best < 1e-9 * std::max(1.0, 0.5 * m * m));
  }
}

TEST_CASE("trace Laplacian") {
  auto s0 = setup(0, 8);
  const auto ev0 = jacobi(assemble_trace_laplacian(s0.conn, s0.grid, s0.geom).matrix);
  CHECK(std::abs(ev0[0]) < 1e-10);
  CHECK(ev0[1] > 1.0);
  double prev = 1e300;
  for (int n : {8, 16}) {
    auto s = setup(-1, n);
    const auto r = dense_oracle(assemble_trace_laplacian(s.conn, s.grid, s.geom), false);
    const double err = std::abs(r.eigenvalues[0] - 2 * kPi);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01 * 2 * kPi);
}

TEST_CASE("Weitzenbock defect") {
  SUBCASE("vanishes for the flat square torus") {
    auto s = setup(0, 8);
    const auto lap = assemble_laplacian(s.conn, s.grid, s.geom);
    const auto tr = assemble_trace_laplacian(s.conn, s.grid, s.geom);
    const auto r = weitzenbock_defect(lap, tr, s.conn.factor(0));
    CHECK(r.frobenius_norm() < 1e-12 * lap.matrix.frobenius_norm());
    const auto modes = dense_oracle(lap).eigenvectors;
    CHECK(weitzenbock_residual(r, std::span(modes.data(), 4)).norm < 1e-10);
  }
  SUBCASE("gauge invariant on low modes") {
    auto s = setup(-1, 8);
    const auto a = perturbed(s, 6, 1.0);
    const auto b = gauge_transform(a, random_gauge(s.grid, 17));
    auto residual = [&](const ConnectionField& c) {
      const auto lap = assemble_laplacian(c, s.grid, s.geom);
      const auto tr = assemble_trace_laplacian(c, s.grid, s.geom);
      const auto modes = dense_oracle(lap).eigenvectors;
      return weitzenbock_residual(weitzenbock_defect(lap, tr, c.factor(0)), std::span(modes.data(), 3)).norm;
    };
    CHECK(std::abs(residual(a) - residual(b)) < 1e-12 * std::max(1.0, residual(a)));
  }
  SUBCASE("mismatched handles are rejected") {
    auto s = setup(-1, 8);
    auto t = setup(-2, 8);
    const auto lap = assemble_laplacian(s.conn, s.grid, s.geom);
    const auto tr = assemble_trace_laplacian(t.conn, t.grid, t.geom);
    CHECK_THROWS_AS(weitzenbock_defect(lap, tr, s.conn.factor(0)), ValidationError);
    CHECK_THROWS_AS(weitzenbock_defect(lap, lap, s.conn.factor(0)), ValidationError);
  }
}

TEST_CASE("gauge covariance of the spectrum") {
  auto s = setup(-2, 8, {0.25, 0.9, 1.2});
  const auto a = perturbed(s, 8, 2.0);
  const auto b = gauge_transform(a, random_gauge(s.grid, 23));
  const auto ea = jacobi(assemble_laplacian(a, s.grid, s.geom).matrix);
  const auto eb = jacobi(assemble_laplacian(b, s.grid, s.geom).matrix);
  CHECK(oracle::max_abs_diff(ea, eb, ea.size()) < 1e-9);
}

TEST_CASE("twistor residual identity") {
  auto s = setup(-1, 8);
  const auto lap = assemble_laplacian(s.conn, s.grid, s.geom);
  const auto tr = assemble_trace_laplacian(s.conn, s.grid, s.geom);
  const auto res = dense_oracle(lap);
  const auto& psi = res.eigenvectors[0];
  const auto tpsi = tr.apply(psi);
  cplx q{};
  for (std::size_t i = 0; i < psi.size(); ++i) q += std::conj(psi[i]) * tpsi[i];
  const auto t = twistor_residual(psi, res.eigenvalues[0], 1, tr, 0.01);
  CHECK(t.rho == doctest::Approx(q.real() - res.eigenvalues[0]).epsilon(1e-12));
  CHECK(t.gradient_energy == doctest::Approx(q.real()).epsilon(1e-12));
  CHECK_THROWS_AS(twistor_residual(psi, 1.0, 1, lap, 0.01), ValidationError);
  CHECK_THROWS_AS(twistor_residual(psi, 1.0, 0, tr, 0.01), ValidationError);
}

TEST_CASE("sections and p0 projection") {
  auto s = setup(-1, 4);
  const auto d = assemble_dirac(s.conn, s.grid, s.geom);
  std::vector<cplx> v(48);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = {static_cast<double>(i), -1.0};
  const auto sec = to_section(d, v);
  CHECK(sec.components.at(0).size() == 16);
  CHECK(sec.components.at(1).size() == 32);
  CHECK(from_section(sec) == v);
  double sq = 0.0;
  for (const auto& z : v) sq += std::norm(z);
  CHECK(sec.norm_squared() == doctest::Approx(sq * s.conn.factor(0).cell_area));

  std::vector<cplx> pure0(16, {1.0, 2.0});
  const auto s0 = to_section(assemble_laplacian(s.conn, s.grid, s.geom), pure0);
  CHECK(from_section(project_p0(s0)) == pure0);
  std::vector<cplx> pure1(48, {0.0, 0.0});
  for (std::size_t i = 16; i < 48; ++i) pure1[i] = {1.0, -1.0};
  CHECK(project_p0(to_section(d, pure1)).norm_squared() == 0.0);
  CHECK_THROWS_AS(to_section(d, std::vector<cplx>(5)), ValidationError);
}

TEST_CASE("assembly is deterministic") {
  auto s = setup(3, 8, {0.1, 1.0, 1.0});
  const auto a = assemble_dirac(s.conn, s.grid, s.geom);
  const auto b = assemble_dirac(s.conn, s.grid, s.geom);
  CHECK(a.matrix.fingerprint() == b.matrix.fingerprint());
  CHECK(a.grid_fingerprint == s.grid.fingerprint());
  CHECK(a.connection_fingerprint == s.conn.fingerprint());
  CHECK(to_string(a.kind) == "dirac");
}
