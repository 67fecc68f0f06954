#include "dolbeault/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dolbeault/sparse.hpp"

namespace dolbeault {

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

void emit(const Json& j, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  const std::string inner(static_cast<std::size_t>(2 * depth + 2), ' ');
  switch (j.type()) {
    case Json::value_t::number_float:
      out += format_number(j.get<double>());
      return;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), is_scalar);
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          emit(j[i], depth + 1, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += inner;
        emit(j[i], depth + 1, out);
        out += i + 1 < j.size() ? ",\n" : "\n";
      }
      out += pad + "]";
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (const auto& [k, v] : j.items()) {
        out += inner + Json(k).dump() + ": ";
        emit(v, depth + 1, out);
        out += ++i < j.size() ? ",\n" : "\n";
      }
      out += pad + "}";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  emit(j, 0, out);
  out += "\n";
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const std::vector<ModuleVersion>& module_versions() {
  static const std::vector<ModuleVersion> mods = [] {
    // Conventions that change numbers are part of the fingerprint.
    const std::vector<std::pair<std::string, std::string>> defs{
        {"geometry", "vol=prod(area);deg=(n-1)!*sum d_k prod_{j!=k} A_j;c=sum 2pi d_k/A_k"},
        {"bundle", "theta=-int A;flux=ccw sum;axial gauge;harmonic part removed"},
        {"operators", "dbar=forward+backward sheets/sqrt2;trace=orthonormal forward gradient;D=sqrt2(dbar+dbar^H)"},
        {"eigensolver", "lanczos full reorth cgs2, locking, chiral split;dense=householder+ql"},
        {"analysis", "kernel=0.5max(|c|,2pi/Amax);disc=3*richardson err|10/N*|bound|"},
        {"cli", "report v1;%.17g"},
    };
    std::vector<ModuleVersion> out;
    for (const auto& [name, conv] : defs) {
      const std::string text = name + "/" + kToolVersion + "/" + conv;
      out.push_back({name, kToolVersion, hex64(fnv1a(text.data(), text.size()))});
    }
    return out;
  }();
  return mods;
}

Json report_header(const RunConfig& cfg) {
  Json h;
  h["tool"] = "dolbeault";
  h["version"] = kToolVersion;
  h["command"] = cfg.command;
  h["config_hash"] = hex64(config_hash(cfg));
  Json c;
  const auto text = canonical_config(cfg);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl - pos);
    const auto eq = line.find('=');
    c[line.substr(0, eq)] = line.substr(eq + 1);
    pos = nl + 1;
  }
  h["config"] = c;
  Json m;
  for (const auto& mv : module_versions()) m[mv.name] = {{"version", mv.version}, {"fingerprint", mv.fingerprint}};
  h["modules"] = m;
  return h;
}

Json to_json(const BoundReport& r) {
  return Json{{"n", r.n},
              {"f_max", r.f_max},
              {"bound", r.bound},
              {"lambda_1", r.lambda_1},
              {"margin", r.margin},
              {"kernel_dim", r.kernel_dim},
              {"expected_kernel_dim", r.expected_kernel_dim},
              {"kernel_threshold", r.kernel_threshold},
              {"he_flag", r.he_flag},
              {"twistor_rho", r.twistor_rho},
              {"twistor_consistent", r.twistor_consistent},
              {"extrapolated", r.extrapolated},
              {"disc_tol", r.disc_tol},
              {"grid", r.sites_per_dim},
              {"verdict", r.pass ? "PASS" : "FAIL"}};
}

Json to_json(const DiracReport& r) {
  return Json{{"f_max", r.f_max},
              {"threshold", r.threshold},
              {"min_abs_mu", r.min_abs_mu},
              {"margin", r.margin},
              {"zero_modes", r.zero_modes},
              {"zero_cut", r.zero_cut},
              {"symmetry_defect", r.symmetry_defect},
              {"symmetric", r.symmetric},
              {"lemma_max_mismatch", r.lemma_max_mismatch},
              {"lemma_ok", r.lemma_ok},
              {"p0_ratios", r.p0_ratios},
              {"p0_max_deviation", r.p0_max_deviation},
              {"extrapolated", r.extrapolated},
              {"disc_tol", r.disc_tol},
              {"grid", r.sites_per_dim},
              {"verdict", r.pass ? "PASS" : "FAIL"}};
}

Json to_json(const ConvergenceStudy& s) {
  return Json{{"grid_sizes", s.grid_sizes},
              {"values", s.values},
              {"observed_order", s.observed_order},
              {"extrapolated_value", s.extrapolated_value},
              {"extrapolation_error_estimate", s.extrapolation_error_estimate},
              {"monotone", s.monotone},
              {"extrapolated", s.extrapolated},
              {"status", s.status}};
}

Json eigen_summary(const EigenResult& r) {
  return Json{{"eigenvalues", r.eigenvalues},
              {"residuals", r.residuals},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"norm_bound", r.norm_bound}};
}

std::string csv_rows(const std::vector<std::pair<int, double>>& rows, const ConvergenceStudy* study) {
  auto cell = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
  std::string out = "N,value,extrapolated\n";
  const std::string ex = study && study->extrapolated ? cell(study->extrapolated_value) : "";
  for (const auto& [n, v] : rows) out += std::to_string(n) + "," + cell(v) + "," + ex + "\n";
  return out;
}

}  // namespace dolbeault
