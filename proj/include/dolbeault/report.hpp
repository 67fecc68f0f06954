#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dolbeault/analysis.hpp"
#include "dolbeault/config.hpp"
#include "dolbeault/pipeline.hpp"

namespace dolbeault {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// %.17g; non-finite values become "null" in JSON and empty cells in CSV.
std::string format_number(double v);

/// Two-space indented JSON with every float printed by format_number.
/// Key order is insertion order, so equal inputs give equal bytes.
std::string dump_json(const Json& j);

struct ModuleVersion {
  std::string name;
  std::string version;
  std::string fingerprint;  // 16 hex digits over name, version and conventions
};

const std::vector<ModuleVersion>& module_versions();

std::string hex64(std::uint64_t v);

/// {tool, version, command, config_hash, config, modules}.
Json report_header(const RunConfig& cfg);

Json to_json(const BoundReport& r);
Json to_json(const DiracReport& r);
Json to_json(const ConvergenceStudy& s);
Json eigen_summary(const EigenResult& r);

/// Header row "N,value,extrapolated"; extrapolated is empty when the study
/// did not extrapolate.
std::string csv_rows(const std::vector<std::pair<int, double>>& rows, const ConvergenceStudy* study);

}  // namespace dolbeault
