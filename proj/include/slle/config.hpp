#pragma once

// Shared run configuration for the command line driver and the experiment
// harness. The hash covers every field that changes a result, and skips the
// ones that only change where output lands or how many threads compute it,
// so reruns of the same experiment are recognizable across machines.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slle/errors.hpp"
#include "slle/grid.hpp"
#include "slle/model.hpp"
#include "slle/util.hpp"

namespace slle {

struct ExperimentConfig {
    std::string model = "CONST";
    std::size_t grid_n = 2400;
    double x_min = -12.0;
    double x_max = 12.0;
    double dt = 1e-3;     // solver step and driving-path step
    double t = 0.25;      // time horizon
    std::uint64_t seed = 1;
    std::size_t reps = 10'000;      // Monte Carlo replicas or paths
    std::size_t particles = 1'000;  // population size per replica
    std::vector<double> eps;        // block widths for smoothed-drive sweeps

    // Not hashed: where results go and how they are computed.
    std::string out;
    unsigned threads = 1;

    Grid1D grid() const { return Grid1D::make(x_min, x_max, grid_n); }
    ModelPreset preset() const { return make_preset(model); }

    /// Canonical text form of the hashed fields.
    std::string canonical() const {
        std::ostringstream os;
        os << "model=" << model << ";grid_n=" << grid_n
           << ";x_min=" << format_g17(x_min) << ";x_max=" << format_g17(x_max)
           << ";dt=" << format_g17(dt) << ";t=" << format_g17(t)
           << ";seed=" << seed << ";reps=" << reps
           << ";particles=" << particles << ";eps=";
        for (double e : eps) os << format_g17(e) << ",";
        return os.str();
    }
};

/// FNV-1a over the canonical form, rendered as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : cfg.canonical()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["model"] = cfg.model;
    j["grid_n"] = cfg.grid_n;
    j["x_min"] = cfg.x_min;
    j["x_max"] = cfg.x_max;
    j["dt"] = cfg.dt;
    j["t"] = cfg.t;
    j["seed"] = cfg.seed;
    j["reps"] = cfg.reps;
    j["particles"] = cfg.particles;
    j["eps"] = cfg.eps;
    j["config_hash"] = config_hash(cfg);
    return j;
}

}  // namespace slle
