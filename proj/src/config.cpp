#include "kdvstab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kdvstab {

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Static: return "static";
        case RunMode::Dynamic: return "dynamic";
        case RunMode::FiniteTime: return "finite-time";
        case RunMode::Linear: return "linear";
    }
    return "?";
}

namespace {

RunMode mode_from_string(const std::string& s) {
    if (s == "static") return RunMode::Static;
    if (s == "dynamic") return RunMode::Dynamic;
    if (s == "finite-time") return RunMode::FiniteTime;
    if (s == "linear") return RunMode::Linear;
    throw ConfigError("config", "unknown mode '" + s + "' (static|dynamic|finite-time|linear)");
}

const std::set<std::string> kKnownKeys = {
    "L", "N", "dt", "T", "lambda", "lambda1", "c0", "mode", "ic", "amplitude",
    "tilde_profile", "tilde_mix", "seed", "schedule", "floor", "guards", "eps_proxy",
    "cond_limit", "gramian_tol", "slack", "out", "cache"};

const std::set<std::string> kScheduleKeys = {"n_max", "lambda_base", "c", "margin", "t", "lambda"};

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config", "field '" + key + "' has the wrong type");
    }
}

}  // namespace

void RunConfig::validate() const {
    if (!(L > 0.0)) throw ConfigError("config", "field 'L' must be positive");
    if (N < 8) throw ConfigError("config", "field 'N' must be >= 8");
    if (dt && !(*dt > 0.0)) throw ConfigError("config", "field 'dt' must be positive");
    if (!(T > 0.0)) throw ConfigError("config", "field 'T' must be positive");
    if (!(lambda > 0.0)) throw ConfigError("config", "field 'lambda' must be positive");
    if (!(amplitude > 0.0)) throw ConfigError("config", "field 'amplitude' must be positive");
    if (!(c0 > 0.0)) throw ConfigError("config", "field 'c0' must be positive");
    if (tilde_mix < 0.0 || tilde_mix > 1.0)
        throw ConfigError("config", "field 'tilde_mix' must lie in [0, 1]");
    if (mode == RunMode::Dynamic) {
        if (!lambda1) throw ConfigError("config", "mode 'dynamic' requires field 'lambda1'");
        if (!(*lambda1 - (2.0 + c0) * lambda > 0.0))
            throw ConfigError("feedback-separation",
                              "mode 'dynamic' requires lambda1 > (2 + c0) * lambda: lambda1 = " +
                                  format_g17(*lambda1) + ", (2 + c0) * lambda = " +
                                  format_g17((2.0 + c0) * lambda));
    } else if (lambda1) {
        throw ConfigError("config", "field 'lambda1' only applies to mode 'dynamic'");
    }
    if (mode == RunMode::FiniteTime) {
        if (schedule.n_max < 2) throw ConfigError("config", "schedule.n_max must be >= 2");
        if (!(schedule.lambda_base > 0.0))
            throw ConfigError("config", "schedule.lambda_base must be positive");
    }
    if (ic != "gauss" && ic != "sine2" && ic != "sine3" && ic != "random")
        throw ConfigError("config", "field 'ic' must be gauss|sine2|sine3|random");
    if (tilde_profile != "gauss" && tilde_profile != "sine2" && tilde_profile != "sine3" &&
        tilde_profile != "random")
        throw ConfigError("config", "field 'tilde_profile' must be gauss|sine2|sine3|random");
}

RunConfig parse_config_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config", std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config", "config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key)) throw ConfigError("config", "unknown key '" + key + "'");

    RunConfig cfg;
    if (j.contains("L")) cfg.L = get_as<double>(j, "L");
    if (j.contains("N")) cfg.N = get_as<int>(j, "N");
    if (j.contains("dt")) cfg.dt = get_as<double>(j, "dt");
    if (j.contains("T")) cfg.T = get_as<double>(j, "T");
    if (j.contains("lambda")) cfg.lambda = get_as<double>(j, "lambda");
    if (j.contains("lambda1")) cfg.lambda1 = get_as<double>(j, "lambda1");
    if (j.contains("c0")) cfg.c0 = get_as<double>(j, "c0");
    if (j.contains("mode")) cfg.mode = mode_from_string(get_as<std::string>(j, "mode"));
    if (j.contains("ic")) cfg.ic = get_as<std::string>(j, "ic");
    if (j.contains("amplitude")) cfg.amplitude = get_as<double>(j, "amplitude");
    if (j.contains("tilde_profile")) cfg.tilde_profile = get_as<std::string>(j, "tilde_profile");
    if (j.contains("tilde_mix")) cfg.tilde_mix = get_as<double>(j, "tilde_mix");
    if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed");
    if (j.contains("floor")) cfg.floor = get_as<double>(j, "floor");
    if (j.contains("guards")) cfg.guards = get_as<bool>(j, "guards");
    if (j.contains("eps_proxy")) cfg.eps_proxy = get_as<double>(j, "eps_proxy");
    if (j.contains("cond_limit")) cfg.cond_limit = get_as<double>(j, "cond_limit");
    if (j.contains("gramian_tol")) cfg.gramian_tol = get_as<double>(j, "gramian_tol");
    if (j.contains("slack")) cfg.slack = get_as<double>(j, "slack");
    if (j.contains("out")) cfg.out_dir = get_as<std::string>(j, "out");
    if (j.contains("cache")) cfg.cache_dir = get_as<std::string>(j, "cache");
    if (j.contains("schedule")) {
        const auto& js = j.at("schedule");
        if (!js.is_object()) throw ConfigError("config", "field 'schedule' must be an object");
        for (const auto& [key, _] : js.items())
            if (!kScheduleKeys.count(key))
                throw ConfigError("config", "unknown key 'schedule." + key + "'");
        if (js.contains("n_max")) cfg.schedule.n_max = get_as<int>(js, "n_max");
        if (js.contains("lambda_base")) cfg.schedule.lambda_base = get_as<double>(js, "lambda_base");
        if (js.contains("c")) cfg.schedule.c = get_as<double>(js, "c");
        if (js.contains("margin")) cfg.schedule.margin = get_as<double>(js, "margin");
        if (js.contains("t")) cfg.schedule.custom_t = get_as<std::vector<double>>(js, "t");
        if (js.contains("lambda"))
            cfg.schedule.custom_lambda = get_as<std::vector<double>>(js, "lambda");
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& key_value) {
    auto eq = key_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config", "override must be KEY=VALUE: '" + key_value + "'");
    std::string key = key_value.substr(0, eq);
    std::string val = key_value.substr(eq + 1);
    // route through the JSON parser for uniform typing and strictness
    nlohmann::json leaf;
    if (val == "true" || val == "false") {
        leaf = (val == "true");
    } else if (key == "mode" || key == "ic" || key == "tilde_profile" || key == "out" ||
               key == "cache") {
        leaf = val;
    } else {
        try {
            std::size_t used = 0;
            double d = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument("trailing");
            leaf = d;
            if (key == "N" || key == "seed" || key == "schedule.n_max") {
                leaf = static_cast<std::int64_t>(std::llround(d));
            }
        } catch (const std::exception&) {
            leaf = val;
        }
    }
    nlohmann::json patch;
    auto dot = key.find('.');
    if (dot != std::string::npos)
        patch[key.substr(0, dot)][key.substr(dot + 1)] = leaf;
    else
        patch[key] = leaf;

    nlohmann::json full = nlohmann::json::parse(cfg.to_json());
    full.merge_patch(patch);
    cfg = parse_config_json(full.dump());
}

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["L"] = L;
    j["N"] = N;
    if (dt) j["dt"] = *dt;
    j["T"] = T;
    j["lambda"] = lambda;
    if (lambda1) j["lambda1"] = *lambda1;
    j["c0"] = c0;
    j["mode"] = to_string(mode);
    j["ic"] = ic;
    j["amplitude"] = amplitude;
    j["tilde_profile"] = tilde_profile;
    j["tilde_mix"] = tilde_mix;
    j["seed"] = seed;
    j["floor"] = floor;
    j["guards"] = guards;
    j["eps_proxy"] = eps_proxy;
    j["cond_limit"] = cond_limit;
    j["gramian_tol"] = gramian_tol;
    j["slack"] = slack;
    j["out"] = out_dir.string();
    if (cache_dir) j["cache"] = cache_dir->string();
    nlohmann::json js;
    js["n_max"] = schedule.n_max;
    js["lambda_base"] = schedule.lambda_base;
    js["c"] = schedule.c;
    js["margin"] = schedule.margin;
    if (schedule.custom_t) js["t"] = *schedule.custom_t;
    if (schedule.custom_lambda) js["lambda"] = *schedule.custom_lambda;
    j["schedule"] = js;
    return j.dump(2);
}

Eigen::VectorXd initial_profile(const Grid& grid, const std::string& name, double amplitude,
                                std::uint64_t seed) {
    Eigen::VectorXd v(grid.size());
    if (name == "gauss") {
        // centered bump; the interior-node representation clips it to the
        // homogeneous boundary values
        double sigma = grid.L / 10.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            double r = (grid.nodes[i] - grid.L / 2.0) / sigma;
            v[i] = std::exp(-r * r);
        }
    } else if (name == "sine2") {
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            v[i] = std::sin(2.0 * M_PI * grid.nodes[i] / grid.L);
    } else if (name == "sine3") {
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            v[i] = std::sin(6.0 * M_PI * grid.nodes[i] / grid.L);
    } else if (name == "random") {
        Rng rng(seed);
        v = rng.normal_vector(grid.size());
    } else {
        throw ConfigError("config", "unknown initial profile '" + name + "'");
    }
    double n = grid.norm(v);
    if (n == 0.0) throw NumericalError("profile", "degenerate initial profile");
    return (amplitude / n) * v;
}

}  // namespace kdvstab
