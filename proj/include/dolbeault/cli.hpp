#pragma once

#include <string>

#include "dolbeault/config.hpp"

namespace dolbeault {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNotConverged = 2, kExitFail = 3 };

struct CommandOutcome {
  int exit_code = kExitOk;
  std::string report;   // JSON or CSV, per cfg.format
  std::string message;  // one line for stderr
};

/// Runs one command end to end without touching files, except
/// save-connection / load-connection. Configuration problems found while
/// running (k too large for a grid, Dirac on f_max >= 0) come back as exit 1.
CommandOutcome run_command(const RunConfig& cfg);

/// Full CLI flow: config file (may be empty) merged under flag values,
/// run, write report to cfg.out or return it in `report`.
CommandOutcome run_from_key_values(const std::string& config_path, const KeyValues& flags);

}  // namespace dolbeault
