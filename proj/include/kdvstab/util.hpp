#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kdvstab {

/// Bad user input: parameters, config files, violated preconditions.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

/// Failure inside a numerical routine (factorization breakdown, conditioning).
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

/// Deterministic RNG independent of the standard library's distribution
/// implementations, so seeded runs are reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double next_double();
    /// Standard normal via Box-Muller.
    double next_normal();
    Eigen::VectorXd normal_vector(Eigen::Index n);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a over a canonical parameter string; used for cache file names.
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

/// Format a double as shortest round-trippable decimal ("%.17g").
std::string format_g17(double v);

/// Write a file atomically (temp file in the same directory + rename).
void atomic_write(const std::filesystem::path& path, const std::string& content);
void atomic_write_binary(const std::filesystem::path& path, const char* data, std::size_t size);

/// CSV emission with a header row; every value is %.17g UTF-8 text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::string to_string() const;
};

/// Least-squares exponential fit: returns rate r for v ~ C exp(-r t) over the
/// samples with t in [t_lo, t_hi] and v > 0. All-nonpositive input yields
/// +infinity (the "already at zero" marker).
double fit_exponential_rate(const Eigen::VectorXd& times, const Eigen::VectorXd& values,
                            double t_lo, double t_hi);

}  // namespace kdvstab
