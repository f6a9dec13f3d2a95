#pragma once

#include "kdvstab/config.hpp"
#include "kdvstab/critical.hpp"

namespace kdvstab {

struct RunResult {
    int exit_code = 0;
    std::string summary_json;
    std::vector<std::filesystem::path> artifacts;
};

/// Dispatch a simulate / finite-time run: writes the report CSV, the
/// resolved config echo, and a summary JSON (fitted rates, envelope
/// violations, condition numbers, guard metrics). Exit code 0 iff every
/// enabled assertion passed.
RunResult run_simulation(const RunConfig& cfg);

/// Assemble (or load) a Gramian and write it to the cache; one row of
/// diagnostics to the summary.
RunResult run_gramian(const RunConfig& cfg, const std::string& method,
                      const std::vector<double>& lambdas);

/// Conditioning scan over an L range.
RunResult run_critical_scan(const RunConfig& cfg, double L_lo, double L_hi, int points);

/// Antisymmetry defects, admissibility constant, Lyapunov residuals.
RunResult run_diagnose(const RunConfig& cfg);

}  // namespace kdvstab
