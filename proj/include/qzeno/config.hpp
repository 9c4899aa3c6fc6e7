#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qzeno/distributions.hpp"
#include "qzeno/errors.hpp"
#include "qzeno/model.hpp"

namespace qzeno {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kGeneratorId = "xoshiro256++(splitmix64-derived-streams)";
inline constexpr double kNsToS = 1e-9;

struct ModelConfig {
    int n = 9;
    double omega_hz = 5000.0;          // frequency; omega = 2 pi f (rad/s)
    std::string couplings = "all_x";   // "all_x", "all_z", or "custom"
    std::vector<std::array<double, 3>> coupling_list;
    std::string state = "product_zero"; // or "ghz"
};

struct DistributionConfig {
    std::string type = "uniform"; // or "dirac"
    double mu1_ns = 10.0;
    double mu2_ns = 60.0;
    double mu_ns = 35.0;
};

struct GridAxis {
    double min_ns = 5.0;
    double max_ns = 100.0;
    int count = 10;

    double value(int i) const {
        if (count < 1 || i < 0 || i >= count) throw ArgumentError("grid index out of range");
        if (count == 1) return min_ns;
        return min_ns + (max_ns - min_ns) * static_cast<double>(i) / (count - 1);
    }
};

struct SurfaceConfig {
    GridAxis mu1{5.0, 100.0, 10};
    GridAxis mu2{5.0, 100.0, 10};
};

struct ScalingConfig {
    std::vector<int> n_values{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<long long> m_values{1000, 2000, 3000, 4000, 5000};
    long long batches = 20;  // batches < 2 skips the empirical column
    long long runs = 1000;
};

struct LdConfig {
    std::vector<long long> m_values{100, 1000, 10000};
    long long runs = 20000;
};

struct CrbConfig {
    long long batches = 200;
    long long runs = 10000;
};

struct ExperimentConfig {
    ModelConfig model;
    DistributionConfig distribution;
    long long m = 5000;
    long long runs = 100000;
    std::uint64_t seed = 20260814ULL;
    int k_moments = 8;
    std::string mode = "product"; // or "sequential"
    int threads = 1;
    std::string calibration = "khz"; // "mhz" scales omega_hz by 1000
    long long sample_budget = 4'000'000'000LL;
    SurfaceConfig surface;
    ScalingConfig scaling;
    LdConfig ld;
    CrbConfig crb;

    double calibration_scale() const {
        if (calibration == "khz") return 1.0;
        if (calibration == "mhz") return 1000.0;
        throw ArgumentError("calibration must be khz or mhz");
    }

    double omega_rad_per_s() const {
        return 2.0 * std::numbers::pi * model.omega_hz * calibration_scale();
    }

    std::vector<Eigen::Vector3d> coupling_vectors() const {
        if (model.couplings == "all_x") return all_x_couplings(model.n);
        if (model.couplings == "all_z") return all_z_couplings(model.n);
        if (model.couplings != "custom") throw ArgumentError("unknown couplings tag");
        if (coupling_list_size() != model.n) {
            throw ArgumentError("need one coupling vector per spin");
        }
        std::vector<Eigen::Vector3d> vs;
        vs.reserve(model.coupling_list.size());
        for (const auto& a : model.coupling_list) vs.emplace_back(a[0], a[1], a[2]);
        return vs;
    }

    SpinModel build_spin_model() const {
        return qzeno::build_spin_model(model.n, omega_rad_per_s(), coupling_vectors());
    }

    Vector initial_state() const {
        if (model.state == "product_zero") return product_zero_state(model.n);
        if (model.state == "ghz") return ghz_state(model.n);
        throw ArgumentError("state must be product_zero or ghz");
    }

    SurvivalModel build_survival() const {
        return SurvivalModel::from_spin_model(build_spin_model(), initial_state());
    }

    // distribution in seconds
    IntervalDistribution build_distribution() const {
        if (distribution.type == "uniform") {
            return IntervalDistribution::uniform(distribution.mu1_ns * kNsToS,
                                                 distribution.mu2_ns * kNsToS);
        }
        if (distribution.type == "dirac") {
            return IntervalDistribution::dirac(distribution.mu_ns * kNsToS);
        }
        throw ArgumentError("distribution type must be uniform or dirac");
    }

private:
    int coupling_list_size() const { return static_cast<int>(model.coupling_list.size()); }
};

// ---- JSON parsing ----

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ArgumentError(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("model")) {
        const auto& jm = j.at("model");
        cfg.model.n = detail::get_or(jm, "n", cfg.model.n);
        cfg.model.omega_hz = detail::get_or(jm, "omega_hz", cfg.model.omega_hz);
        cfg.model.state = detail::get_or(jm, "state", cfg.model.state);
        if (jm.contains("alphas")) {
            const auto& ja = jm.at("alphas");
            if (ja.is_string()) {
                cfg.model.couplings = ja.get<std::string>();
                if (cfg.model.couplings != "all_x" && cfg.model.couplings != "all_z") {
                    throw ArgumentError("alphas string must be all_x or all_z");
                }
            } else if (ja.is_array()) {
                cfg.model.couplings = "custom";
                for (const auto& v : ja) {
                    if (!v.is_array() || v.size() != 3) {
                        throw ArgumentError("each alpha must be a 3-array");
                    }
                    cfg.model.coupling_list.push_back(
                        {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
                }
            } else {
                throw ArgumentError("alphas must be a string tag or array of 3-arrays");
            }
        }
    }
    if (j.contains("distribution")) {
        const auto& jd = j.at("distribution");
        cfg.distribution.type = detail::get_or(jd, "type", cfg.distribution.type);
        cfg.distribution.mu1_ns = detail::get_or(jd, "mu1_ns", cfg.distribution.mu1_ns);
        cfg.distribution.mu2_ns = detail::get_or(jd, "mu2_ns", cfg.distribution.mu2_ns);
        cfg.distribution.mu_ns = detail::get_or(jd, "mu_ns", cfg.distribution.mu_ns);
    }
    cfg.m = detail::get_or(j, "m", cfg.m);
    cfg.runs = detail::get_or(j, "runs", cfg.runs);
    cfg.seed = detail::get_or(j, "seed", cfg.seed);
    cfg.k_moments = detail::get_or(j, "k_moments", cfg.k_moments);
    cfg.mode = detail::get_or(j, "mode", cfg.mode);
    cfg.threads = detail::get_or(j, "threads", cfg.threads);
    cfg.calibration = detail::get_or(j, "calibration", cfg.calibration);
    cfg.sample_budget = detail::get_or(j, "sample_budget", cfg.sample_budget);

    if (j.contains("surface")) {
        const auto& js = j.at("surface");
        auto axis = [&](const char* key, GridAxis fallback) {
            if (!js.contains(key)) return fallback;
            const auto& ja = js.at(key);
            GridAxis ax;
            ax.min_ns = detail::get_or(ja, "min_ns", fallback.min_ns);
            ax.max_ns = detail::get_or(ja, "max_ns", fallback.max_ns);
            ax.count = detail::get_or(ja, "count", fallback.count);
            return ax;
        };
        cfg.surface.mu1 = axis("mu1", cfg.surface.mu1);
        cfg.surface.mu2 = axis("mu2", cfg.surface.mu2);
    }
    if (j.contains("scaling")) {
        const auto& js = j.at("scaling");
        cfg.scaling.n_values =
            detail::get_or(js, "n_values", cfg.scaling.n_values);
        cfg.scaling.m_values =
            detail::get_or(js, "m_values", cfg.scaling.m_values);
        cfg.scaling.batches = detail::get_or(js, "batches", cfg.scaling.batches);
        cfg.scaling.runs = detail::get_or(js, "runs", cfg.scaling.runs);
    }
    if (j.contains("ld")) {
        const auto& jl = j.at("ld");
        cfg.ld.m_values = detail::get_or(jl, "m_values", cfg.ld.m_values);
        cfg.ld.runs = detail::get_or(jl, "runs", cfg.ld.runs);
    }
    if (j.contains("crb")) {
        const auto& jc = j.at("crb");
        cfg.crb.batches = detail::get_or(jc, "batches", cfg.crb.batches);
        cfg.crb.runs = detail::get_or(jc, "runs", cfg.crb.runs);
    }

    // structural validation
    if (cfg.m < 1 || cfg.runs < 1) throw ArgumentError("m and runs must be at least 1");
    if (cfg.k_moments < 1 || cfg.k_moments > 8) throw ArgumentError("k_moments must be 1..8");
    if (cfg.threads < 1) throw ArgumentError("threads must be at least 1");
    if (cfg.mode != "product" && cfg.mode != "sequential") {
        throw ArgumentError("mode must be product or sequential");
    }
    if (cfg.calibration != "khz" && cfg.calibration != "mhz") {
        throw ArgumentError("calibration must be khz or mhz");
    }
    if (cfg.distribution.type == "uniform" &&
        !(cfg.distribution.mu2_ns > cfg.distribution.mu1_ns && cfg.distribution.mu1_ns >= 0.0)) {
        throw ArgumentError("uniform distribution needs 0 <= mu1_ns < mu2_ns");
    }
    if (cfg.distribution.type == "dirac" && !(cfg.distribution.mu_ns >= 0.0)) {
        throw ArgumentError("dirac distribution needs mu_ns >= 0");
    }
    return cfg;
}

// ---- canonical serialization and hashing ----

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Stable, whitespace-free rendering of the resolved configuration; the hash
// of this string identifies the experiment in output metadata.
inline std::string canonical_config(const ExperimentConfig& cfg) {
    std::string s;
    s += "model{n=" + std::to_string(cfg.model.n);
    s += ",omega_hz=" + detail::fmt_double(cfg.model.omega_hz);
    s += ",couplings=" + cfg.model.couplings;
    for (const auto& a : cfg.model.coupling_list) {
        s += ",(" + detail::fmt_double(a[0]) + "," + detail::fmt_double(a[1]) + "," +
             detail::fmt_double(a[2]) + ")";
    }
    s += ",state=" + cfg.model.state + "}";
    s += "dist{type=" + cfg.distribution.type;
    if (cfg.distribution.type == "uniform") {
        s += ",mu1_ns=" + detail::fmt_double(cfg.distribution.mu1_ns);
        s += ",mu2_ns=" + detail::fmt_double(cfg.distribution.mu2_ns);
    } else {
        s += ",mu_ns=" + detail::fmt_double(cfg.distribution.mu_ns);
    }
    s += "}m=" + std::to_string(cfg.m);
    s += ",runs=" + std::to_string(cfg.runs);
    s += ",seed=" + std::to_string(cfg.seed);
    s += ",k=" + std::to_string(cfg.k_moments);
    s += ",mode=" + cfg.mode;
    s += ",calibration=" + cfg.calibration;
    s += ",budget=" + std::to_string(cfg.sample_budget);
    auto axis = [](const GridAxis& a) {
        return detail::fmt_double(a.min_ns) + ":" + detail::fmt_double(a.max_ns) + ":" +
               std::to_string(a.count);
    };
    s += ",surface{" + axis(cfg.surface.mu1) + ";" + axis(cfg.surface.mu2) + "}";
    s += ",scaling{n=";
    for (int n : cfg.scaling.n_values) s += std::to_string(n) + " ";
    s += ";m=";
    for (long long m : cfg.scaling.m_values) s += std::to_string(m) + " ";
    s += ";b=" + std::to_string(cfg.scaling.batches) +
         ";r=" + std::to_string(cfg.scaling.runs) + "}";
    s += ",ld{m=";
    for (long long m : cfg.ld.m_values) s += std::to_string(m) + " ";
    s += ";r=" + std::to_string(cfg.ld.runs) + "}";
    s += ",crb{b=" + std::to_string(cfg.crb.batches) +
         ";r=" + std::to_string(cfg.crb.runs) + "}";
    return s;
}

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace qzeno
