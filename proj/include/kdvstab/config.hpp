#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kdvstab/finitetime.hpp"

namespace kdvstab {

enum class RunMode { Static, Dynamic, FiniteTime, Linear };

std::string to_string(RunMode m);

struct ScheduleConfig {
    int n_max = 4;
    double lambda_base = 0.5;
    double c = 1.0;
    double margin = 0.1;
    std::optional<std::vector<double>> custom_t;
    std::optional<std::vector<double>> custom_lambda;
};

/// Fully resolved run configuration. JSON keys mirror the field names;
/// unknown keys are rejected, flags override file values.
struct RunConfig {
    double L = 1.0;
    int N = 64;
    std::optional<double> dt;       // default min(h, 1/(2 lambda), 1e-2)
    double T = 2.0;
    double lambda = 1.0;
    std::optional<double> lambda1;  // dynamic mode
    double c0 = 1.0;
    RunMode mode = RunMode::Static;

    std::string ic = "sine2";       // gauss | sine2 | sine3 | random
    double amplitude = 1e-3;
    std::string tilde_profile = "sine3";  // dynamic mode: preimage source
    double tilde_mix = 0.75;              // ytilde0 = Q^{-1}(mix y0 + (1-mix) amp profile)
    std::uint64_t seed = 1;

    ScheduleConfig schedule;
    double floor = 1e-12;

    bool guards = true;
    double eps_proxy = 1e-2;
    double cond_limit = 1e12;
    double gramian_tol = 1e-6;      // quadrature truncation tolerance
    double slack = 0.1;             // envelope slack for violation counting

    std::filesystem::path out_dir = "out";
    std::optional<std::filesystem::path> cache_dir;

    std::string to_json() const;
    void validate() const;
};

/// Strict JSON parse: unknown keys, type mismatches, and mode/field
/// mismatches are usage errors naming the offending field.
RunConfig parse_config_json(const std::string& json_text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Apply one "KEY=VALUE" override (same keys as the JSON file).
void apply_override(RunConfig& cfg, const std::string& key_value);

/// Seeded initial profile on the grid, normalized to `amplitude` in the
/// h-weighted norm. Profiles: gauss (centered bump), sine2 = sin(2 pi x/L),
/// sine3 = sin(6 pi x/L), random (seeded normals).
Eigen::VectorXd initial_profile(const Grid& grid, const std::string& name, double amplitude,
                                std::uint64_t seed);

}  // namespace kdvstab
