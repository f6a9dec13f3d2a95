#include "kdvstab/util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace kdvstab {

std::uint64_t Rng::next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next_normal();
    return v;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    atomic_write_binary(path, content.data(), content.size());
}

void atomic_write_binary(const std::filesystem::path& path, const char* data, std::size_t size) {
    auto dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("io", "cannot open for writing: " + tmp.string());
        out.write(data, static_cast<std::streamsize>(size));
        if (!out) throw ConfigError("io", "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string CsvTable::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) os << ',';
        os << header[i];
    }
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            if (std::isnan(row[i]))
                ;  // empty field where mode-inapplicable
            else
                os << format_g17(row[i]);
        }
        os << '\n';
    }
    return os.str();
}

double fit_exponential_rate(const Eigen::VectorXd& times, const Eigen::VectorXd& values,
                            double t_lo, double t_hi) {
    double st = 0, sv = 0, stt = 0, stv = 0;
    long n = 0;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        double t = times[i], v = values[i];
        if (t < t_lo || t > t_hi || !(v > 0.0)) continue;
        double lv = std::log(v);
        st += t;
        sv += lv;
        stt += t * t;
        stv += t * lv;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::infinity();
    double denom = n * stt - st * st;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    double slope = (n * stv - st * sv) / denom;
    return -slope;
}

}  // namespace kdvstab
