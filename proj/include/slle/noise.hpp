#pragma once

// Common-noise machinery: sampled Brownian increments, Brownian-bridge
// refinement, time reversal, and piecewise-constant block rates for the
// smoothed-noise equations. Paths are value types; every operation is a pure
// function of its arguments, so a (seed, dt, T) triple pins a path exactly.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slle/errors.hpp"
#include "slle/rng.hpp"
#include "slle/util.hpp"

namespace slle {

struct BrownianPath {
    double horizon = 0.0;  // T
    double dt = 0.0;
    std::uint64_t seed = 0;  // root seed; level 0 draws and bridge draws derive from it
    int refine_level = 0;    // number of bridge refinements applied so far
    std::vector<double> increments;  // increments[k] = W((k+1)dt) - W(k dt)

    std::size_t steps() const { return increments.size(); }

    /// W at the right endpoint of step k (prefix sum; O(k)).
    double value_after(std::size_t k) const {
        double w = 0.0;
        for (std::size_t i = 0; i <= k && i < increments.size(); ++i)
            w += increments[i];
        return w;
    }
};

namespace detail {
/// Number of steps of size dt in duration T; BadGrid unless integral.
inline std::size_t step_count(double horizon, double dt, const char* what) {
    if (!(dt > 0.0) || !(horizon > 0.0))
        throw BadGrid(std::string(what) + ": horizon and dt must be positive");
    const double ratio = horizon / dt;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (n == 0 || std::abs(static_cast<double>(n) * dt - horizon) >
                      1e-9 * std::max(horizon, 1.0))
        throw BadGrid(std::string(what) + ": horizon is not an integral number of steps");
    return n;
}
}  // namespace detail

/// Independent N(0, dt) increments. The sampling stream is derive_seed(seed, 0, 0)
/// so that refinement levels 1, 2, ... can never collide with it.
inline BrownianPath sample_path(double horizon, double dt, std::uint64_t seed) {
    const std::size_t n = detail::step_count(horizon, dt, "sample_path");
    BrownianPath path;
    path.horizon = horizon;
    path.dt = dt;
    path.seed = seed;
    path.increments.resize(n);
    Rng rng(derive_seed(seed, 0, 0));
    const double sd = std::sqrt(dt);
    for (double& d : path.increments) d = sd * rng.gauss();
    return path;
}

/// Brownian-bridge refinement: halves dt, keeping every existing partial sum.
/// The midpoint offset of coarse step k is drawn from the stream seeded
/// derive_seed(seed, level, k) with level = refine_level + 1, so refining a
/// path is reproducible regardless of how the path itself was produced.
inline BrownianPath refine(const BrownianPath& path) {
    if (path.steps() == 0) throw BadGrid("refine: empty path");
    BrownianPath out;
    out.horizon = path.horizon;
    out.dt = 0.5 * path.dt;
    out.seed = path.seed;
    out.refine_level = path.refine_level + 1;
    out.increments.resize(2 * path.steps());
    const double sd = std::sqrt(0.25 * path.dt);
    for (std::size_t k = 0; k < path.steps(); ++k) {
        Rng rng(derive_seed(path.seed,
                            static_cast<std::uint64_t>(out.refine_level), k));
        const double half = 0.5 * path.increments[k];
        const double xi = sd * rng.gauss();
        out.increments[2 * k] = half + xi;
        out.increments[2 * k + 1] = half - xi;
    }
    return out;
}

/// First round(t/dt) increments in reverse order: the driving path of the
/// backward equation viewed forward in time. Refine before reversing when
/// both are needed; refining a reversed path indexes bridge streams by the
/// reversed positions and will not match the forward refinement.
inline BrownianPath reversed(const BrownianPath& path, double t) {
    const std::size_t n = detail::step_count(t, path.dt, "reversed");
    if (n > path.steps())
        throw BadGrid("reversed: requested horizon exceeds the path");
    BrownianPath out;
    out.horizon = t;
    out.dt = path.dt;
    out.seed = path.seed;
    out.refine_level = path.refine_level;
    out.increments.assign(path.increments.rend() -
                              static_cast<std::ptrdiff_t>(n),
                          path.increments.rend());
    return out;
}

/// Piecewise-constant rate over blocks of width eps: within block j the value
/// is (W((j+1)eps) - W(j eps)) / eps, stored once per path step for direct
/// consumption by the solver loop.
struct WZRate {
    double horizon = 0.0;
    double dt = 0.0;   // underlying path step
    double eps = 0.0;  // block width
    std::vector<double> values;  // values[k] = rate on step k
};

inline WZRate wz_rate(const BrownianPath& path, double eps) {
    const std::size_t per_block = detail::step_count(eps, path.dt, "wz_rate");
    if (path.steps() % per_block != 0)
        throw BadGrid("wz_rate: eps does not tile the path");
    WZRate rate;
    rate.horizon = path.horizon;
    rate.dt = path.dt;
    rate.eps = eps;
    rate.values.resize(path.steps());
    for (std::size_t j = 0; j < path.steps() / per_block; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < per_block; ++i)
            sum += path.increments[j * per_block + i];
        const double v = sum / eps;
        for (std::size_t i = 0; i < per_block; ++i)
            rate.values[j * per_block + i] = v;
    }
    return rate;
}

/// CSV round-trip, header "t,dW", one row per increment. The t column is the
/// right endpoint (k+1)dt, which keeps dt recoverable from a one-row file.
inline void dump_path_csv(const BrownianPath& path, std::ostream& os) {
    os << "t,dW\n";
    for (std::size_t k = 0; k < path.steps(); ++k)
        os << format_g17(static_cast<double>(k + 1) * path.dt) << ','
           << format_g17(path.increments[k]) << '\n';
}

inline void dump_path_csv(const BrownianPath& path, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot open for writing: " + file);
    dump_path_csv(path, os);
}

/// Loads a path written by dump_path_csv. Seed and refinement level are not
/// stored in the file; the loaded path carries seed 0, so refining it is
/// deterministic but unrelated to the original stream.
inline BrownianPath load_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,dW")
        throw ConfigError("path csv: bad header");
    BrownianPath path;
    std::vector<double> times;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("path csv: malformed row: " + line);
        times.push_back(std::stod(line.substr(0, comma)));
        path.increments.push_back(std::stod(line.substr(comma + 1)));
    }
    if (times.empty()) throw ConfigError("path csv: no increments");
    path.dt = times.front();
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::abs(times[k] - static_cast<double>(k + 1) * path.dt) >
            1e-9 * std::max(times.back(), 1.0))
            throw ConfigError("path csv: time column is not uniform");
    }
    path.horizon = times.back();
    return path;
}

inline BrownianPath load_path_csv(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open: " + file);
    return load_path_csv(is);
}

}  // namespace slle
