#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dolbeault {

using KeyValues = std::map<std::string, std::string>;

/// Resolved run configuration. Keys in files and flag names coincide:
///   command, degree, area, modulus, grid, grids, perturb-profile,
///   perturb-amplitude, k, tol, seed, max-iter, quantity, modes,
///   kronecker-grid, save-connection, load-connection, out, format
struct RunConfig {
  std::string command = "spectrum";
  std::vector<int> degrees{-1};
  std::vector<double> areas{1.0};
  std::vector<std::complex<double>> moduli{{0.0, 1.0}};
  int grid = 32;
  std::vector<int> grids{16, 32, 64};
  std::string perturb_profile = "none";
  double perturb_amplitude = 0.0;
  int k = 5;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  int max_iter = 20000;
  std::string quantity = "lambda1";
  int modes = 4;
  int kronecker_grid = 6;
  std::string save_connection;
  std::string load_connection;
  std::string out;
  std::string format = "json";

  /// Number of torus factors after broadcasting single-entry lists.
  int factor_count() const;
};

const std::vector<std::string>& config_keys();

/// `key = value` lines; '#' starts a comment; blank lines ignored.
/// Throws ValidationError on malformed lines, unknown or repeated keys.
KeyValues parse_key_values(const std::string& text, const std::string& origin = "config");
KeyValues read_config_file(const std::string& path);

/// base overridden by top.
KeyValues merge_key_values(KeyValues base, const KeyValues& top);

/// Builds and validates a RunConfig; errors name the offending key.
RunConfig make_run_config(const KeyValues& kv);

/// Parses "a+bi", "a-bi", "bi", "i", "-i" or a plain real.
std::complex<double> parse_complex(const std::string& text);

/// Canonical `key=value` dump of every setting except `out`, sorted by key.
std::string canonical_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace dolbeault
