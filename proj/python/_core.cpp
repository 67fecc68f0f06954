#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dolbeault/analysis.hpp"
#include "dolbeault/bundle.hpp"
#include "dolbeault/cli.hpp"
#include "dolbeault/eigensolver.hpp"
#include "dolbeault/errors.hpp"
#include "dolbeault/operators.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace dolbeault;

namespace {

py::array_t<cplx> to_numpy(const std::vector<cplx>& v) {
  py::array_t<cplx> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<cplx> from_numpy(const py::array_t<cplx, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

py::array_t<cplx> dense(const CsrMatrix& m) {
  py::array_t<cplx> a({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  const auto d = m.to_dense();
  std::copy(d.begin(), d.end(), a.mutable_data());
  return a;
}

TorusGeometry torus_from(const std::vector<std::pair<cplx, double>>& factors) {
  std::vector<TorusFactor> f;
  for (const auto& [tau, area] : factors) f.push_back({tau.real(), tau.imag(), area});
  return make_torus(std::move(f));
}

EigenRequest request(int k, double tol, std::uint64_t seed, int max_iter) {
  EigenRequest r;
  r.k = k;
  r.tol = tol;
  r.seed = seed;
  r.max_iter = max_iter;
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Twisted Dolbeault and Dirac operators on line bundles over flat tori";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<InsufficientInputError>(m, "InsufficientInputError", PyExc_RuntimeError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

  py::class_<TorusGeometry>(m, "TorusGeometry")
      .def_property_readonly("n", &TorusGeometry::n)
      .def_property_readonly("volume", &TorusGeometry::volume)
      .def_property_readonly("scalar_curvature", &TorusGeometry::scalar_curvature)
      .def_property_readonly("areas", [](const TorusGeometry& g) {
        std::vector<double> a;
        for (const auto& f : g.factors()) a.push_back(f.area);
        return a;
      });
  m.def("make_torus", &torus_from, "factors"_a, "List of (modulus, area) pairs, one per factor.");

  py::class_<LineBundleSpec>(m, "LineBundleSpec")
      .def_readonly("degrees", &LineBundleSpec::degrees)
      .def_readonly("total_degree", &LineBundleSpec::total_degree);
  m.def("make_line_bundle", &make_line_bundle, "degrees"_a);
  m.def("degree_pairing", &degree_pairing, "spec"_a, "geom"_a);
  m.def("hermitian_einstein_constant", &hermitian_einstein_constant, "spec"_a, "geom"_a);
  m.def("continuum_constant_curvature", &continuum_constant_curvature, "spec"_a, "geom"_a, "factor_index"_a = 0);

  py::class_<LatticeGrid>(m, "LatticeGrid")
      .def_readonly("sites_per_dim", &LatticeGrid::sites_per_dim)
      .def_readonly("spacing", &LatticeGrid::spacing)
      .def_property_readonly("sites", &LatticeGrid::sites);
  m.def("make_grid", &make_grid, "sites_per_dim"_a, "geom"_a);

  py::class_<FactorConnection>(m, "FactorConnection")
      .def_readonly("sites_per_dim", &FactorConnection::sites_per_dim)
      .def_readonly("degree", &FactorConnection::degree)
      .def_readonly("cell_area", &FactorConnection::cell_area)
      .def_readonly("angle_x", &FactorConnection::angle_x)
      .def_readonly("angle_y", &FactorConnection::angle_y)
      .def_readonly("plaquette_fluxes", &FactorConnection::plaquette_fluxes)
      .def_readonly("curvature_samples", &FactorConnection::curvature_samples)
      .def_readonly("f_max", &FactorConnection::f_max)
      .def("total_flux", &FactorConnection::total_flux);
  py::class_<ConnectionField>(m, "ConnectionField")
      .def_readonly("factors", &ConnectionField::factors)
      .def_property_readonly("f_max", &ConnectionField::f_max)
      .def("to_json", [](const ConnectionField& c, const TorusGeometry& g) { return connection_to_json(c, g); });
  m.def("connection_from_json", &connection_from_json, "text"_a, "geom"_a);
  m.def("constant_curvature_connection", &constant_curvature_connection, "spec"_a, "geom"_a, "grid"_a);
  m.def(
      "perturb_connection",
      [](const ConnectionField& c, const std::vector<double>& profile, double amplitude, int factor) {
        return perturb_connection(c, profile, amplitude, factor);
      },
      "conn"_a, "profile"_a, "amplitude"_a, "factor_index"_a = 0);
  m.def("profile", &profile_by_name, "name"_a, "grid"_a, "seed"_a = 1);
  m.def(
      "gauge_transform",
      [](const ConnectionField& c, const std::vector<double>& f, int factor) {
        return gauge_transform(c, GaugeFunction{f}, factor);
      },
      "conn"_a, "values"_a, "factor_index"_a = 0);
  m.def(
      "random_gauge", [](const LatticeGrid& g, std::uint64_t seed, double amp) { return random_gauge(g, seed, amp).values; },
      "grid"_a, "seed"_a, "amplitude"_a = 3.0);

  py::class_<CurvatureStatistics>(m, "CurvatureStatistics")
      .def_readonly("f_max", &CurvatureStatistics::f_max)
      .def_readonly("f_mean", &CurvatureStatistics::f_mean)
      .def_readonly("f_min", &CurvatureStatistics::f_min)
      .def_readonly("is_hermitian_einstein", &CurvatureStatistics::is_hermitian_einstein);
  m.def("curvature_statistics", &curvature_statistics, "conn"_a, "he_tolerance"_a = kDefaultHeTolerance);

  py::class_<OperatorHandle>(m, "OperatorHandle")
      .def_property_readonly("kind", [](const OperatorHandle& h) { return to_string(h.kind); })
      .def_property_readonly("dim", &OperatorHandle::dim)
      .def_readonly("sites", &OperatorHandle::sites)
      .def_property_readonly("hermiticity_defect", [](const OperatorHandle& h) { return h.matrix.hermiticity_defect(); })
      .def("dense", [](const OperatorHandle& h) { return dense(h.matrix); })
      .def("apply", [](const OperatorHandle& h, const py::array_t<cplx, py::array::c_style | py::array::forcecast>& x) {
        const auto v = from_numpy(x);
        if (v.size() != static_cast<std::size_t>(h.matrix.cols())) throw ValidationError("apply: wrong vector length");
        return to_numpy(h.apply(v));
      });
  m.def("assemble_dbar", &assemble_dbar, "conn"_a, "grid"_a, "geom"_a, "factor_index"_a = 0);
  m.def("assemble_laplacian", &assemble_laplacian, "conn"_a, "grid"_a, "geom"_a, "factor_index"_a = 0);
  m.def("assemble_dirac", &assemble_dirac, "conn"_a, "grid"_a, "geom"_a, "factor_index"_a = 0);
  m.def("assemble_trace_laplacian", &assemble_trace_laplacian, "conn"_a, "grid"_a, "geom"_a, "factor_index"_a = 0);
  m.def(
      "weitzenbock_residual",
      [](const OperatorHandle& lap, const OperatorHandle& tr, const ConnectionField& c,
         const std::vector<std::vector<cplx>>& modes) {
        return weitzenbock_residual(weitzenbock_defect(lap, tr, c.factor(0)), modes).norm;
      },
      "laplacian"_a, "trace_laplacian"_a, "conn"_a, "modes"_a);

  py::class_<EigenResult>(m, "EigenResult")
      .def_readonly("eigenvalues", &EigenResult::eigenvalues)
      .def_readonly("residuals", &EigenResult::residuals)
      .def_readonly("iterations", &EigenResult::iterations)
      .def_readonly("converged", &EigenResult::converged)
      .def_readonly("norm_bound", &EigenResult::norm_bound)
      .def_property_readonly("eigenvectors", [](const EigenResult& r) {
        py::list out;
        for (const auto& v : r.eigenvectors) out.append(to_numpy(v));
        return out;
      });
  m.def(
      "lanczos_lowest",
      [](const OperatorHandle& op, int k, double tol, std::uint64_t seed, int max_iter) {
        py::gil_scoped_release release;
        return lanczos_lowest(op, request(k, tol, seed, max_iter));
      },
      "op"_a, "k"_a = 5, "tol"_a = 1e-10, "seed"_a = 1, "max_iter"_a = 3000);
  m.def(
      "dense_oracle", [](const OperatorHandle& op, bool vectors) { return dense_oracle(op, vectors); }, "op"_a,
      "want_vectors"_a = true);
  m.def("orthonormality_check", &orthonormality_check, "result"_a);

  m.def("bound_value", &bound_value, "f_max"_a, "n"_a);
  m.def("kernel_threshold", &kernel_threshold, "spec"_a, "geom"_a);
  m.def("expected_kernel_dim", &expected_kernel_dim, "spec"_a);

  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("n", &BoundReport::n)
      .def_readonly("f_max", &BoundReport::f_max)
      .def_readonly("bound", &BoundReport::bound)
      .def_readonly("lambda_1", &BoundReport::lambda_1)
      .def_readonly("margin", &BoundReport::margin)
      .def_readonly("kernel_dim", &BoundReport::kernel_dim)
      .def_readonly("he_flag", &BoundReport::he_flag)
      .def_readonly("twistor_rho", &BoundReport::twistor_rho)
      .def_readonly("disc_tol", &BoundReport::disc_tol)
      .def_readonly("passed", &BoundReport::pass);
  m.def(
      "verify_bound",
      [](const EigenResult& s, const ConnectionField& c, const LatticeGrid& g, const TorusGeometry& geom,
         const LineBundleSpec& spec) { return verify_bound(s, c, g, geom, spec); },
      "spectrum"_a, "conn"_a, "grid"_a, "geom"_a, "spec"_a);

  py::class_<ConvergenceStudy>(m, "ConvergenceStudy")
      .def_readonly("grid_sizes", &ConvergenceStudy::grid_sizes)
      .def_readonly("values", &ConvergenceStudy::values)
      .def_readonly("observed_order", &ConvergenceStudy::observed_order)
      .def_readonly("extrapolated_value", &ConvergenceStudy::extrapolated_value)
      .def_readonly("extrapolation_error_estimate", &ConvergenceStudy::extrapolation_error_estimate)
      .def_readonly("monotone", &ConvergenceStudy::monotone)
      .def_readonly("extrapolated", &ConvergenceStudy::extrapolated)
      .def_readonly("status", &ConvergenceStudy::status);
  m.def("analyze_convergence", &analyze_convergence, "sizes"_a, "values"_a);
  // Python callables hold the GIL, so the study runs serially here.
  m.def(
      "convergence_study",
      [](const std::function<double(int)>& runner, std::vector<int> sizes) {
        return convergence_study(runner, std::move(sizes), false);
      },
      "runner"_a, "sizes"_a);

  m.def(
      "product_spectrum",
      [](const std::vector<double>& a, const std::vector<double>& b, int k) {
        EigenResult ra, rb;
        ra.eigenvalues = a;
        rb.eigenvalues = b;
        ra.converged = rb.converged = true;
        return product_spectrum(ra, rb, k).eigenvalues;
      },
      "spec_a"_a, "spec_b"_a, "k"_a, "Lowest k pairwise sums of two ascending eigenvalue lists.");

  m.def(
      "run",
      [](const std::map<std::string, std::string>& flags, const std::string& config_path) {
        CommandOutcome o;
        {
          py::gil_scoped_release release;
          o = run_from_key_values(config_path, flags);
        }
        return py::make_tuple(o.exit_code, o.report, o.message);
      },
      "flags"_a, "config_path"_a = "",
      "Runs one CLI command from key=value settings; returns (exit_code, report, message).");
}
