#pragma once

// Weighted-particle representation of the field equation's solution. A fixed
// population of n particles carries positions xi_i and weights m_i; the
// empirical field (1/n) sum_i m_i delta_{xi_i}, smoothed with a gaussian
// kernel, tracks the solution y_t. Dynamics per step, coefficients read at
// the step-start position:
//
//     d xi =  (2a' - b - c c') dt - c dW + e dB_i
//     m   *=  exp( (a'' - b' - D(xi)) dt - c'(xi) dW - c'(xi)^2 dt / 2 )
//
// where D is the current smoothed density itself: the -D m dt term is the
// quadratic reaction seen through the particles. Each particle also carries a
// twin weight integrated without the -D term; since D >= 0 the real weight
// never exceeds its twin, which bounds the feedback loop pathwise.
//
// The density build caps the raw mean weight at `cap` (hat factor), so a
// transient overshoot cannot feed back into exploding kill rates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "slle/errors.hpp"
#include "slle/grid.hpp"
#include "slle/model.hpp"
#include "slle/noise.hpp"
#include "slle/rng.hpp"

namespace slle {

struct RepState {
    std::vector<double> xi;
    std::vector<double> m;
    std::vector<double> m_twin;
    double base_mass = 0.0;  // <f, 1> at initialization

    std::size_t size() const { return xi.size(); }
};

/// Positions sampled from f / <f,1> by inverting the trapezoid CDF; every
/// weight starts at <f,1> so the empirical field integrates to <f,1>.
inline RepState init_rep(const Field& f0, std::size_t n, Rng& rng) {
    if (n == 0) throw EmptyMeasure("init_rep: need at least one particle");
    const double total = integral(f0);
    if (!(total > 0.0)) throw EmptyMeasure("init_rep: initial field has no mass");
    for (double v : f0.values)
        if (v < 0.0) throw ConfigError("init_rep: initial field must be nonnegative");

    const Grid1D& g = f0.grid;
    const double h = g.h();
    std::vector<double> cdf(g.n_nodes(), 0.0);
    for (std::size_t j = 1; j < g.n_nodes(); ++j)
        cdf[j] = cdf[j - 1] + 0.5 * h * (f0.values[j - 1] + f0.values[j]);

    RepState st;
    st.base_mass = total;
    st.xi.resize(n);
    st.m.assign(n, total);
    st.m_twin.assign(n, total);
    for (double& x : st.xi) {
        const double target = rng.uniform() * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            it - cdf.begin(), 1, static_cast<std::ptrdiff_t>(g.n_cells)));
        const double seg = cdf[j] - cdf[j - 1];
        const double frac = seg > 0.0 ? (target - cdf[j - 1]) / seg : 0.5;
        x = g.node(j - 1) + frac * h;
    }
    return st;
}

struct RepDensity {
    Field field;
    double raw = 0.0;  // mean weight before capping
    double hat = 0.0;  // applied attenuation, min(raw, cap) / raw
};

/// Cloud-in-cell deposit of the weighted particles followed by gaussian
/// smoothing with kernel variance eps. Particles outside the grid are
/// dropped; an empty or weightless population yields the zero field.
inline RepDensity rep_density(const RepState& st, const Grid1D& g, double eps,
                              double cap) {
    if (!(cap > 0.0)) throw ConfigError("rep_density: cap must be positive");
    RepDensity out;
    out.field = Field::zeros(g);
    if (st.size() == 0) return out;

    const double n = static_cast<double>(st.size());
    double raw = 0.0;
    for (double w : st.m) raw += w;
    raw /= n;
    out.raw = raw;
    if (!(raw > 0.0)) return out;
    out.hat = std::min(raw, cap) / raw;

    const double h = g.h();
    const double scale = out.hat / (n * h);
    for (std::size_t i = 0; i < st.size(); ++i) {
        const double x = st.xi[i];
        if (x < g.x_min || x > g.x_max) continue;
        const double pos = (x - g.x_min) / h;
        auto j = static_cast<std::size_t>(pos);
        if (j >= g.n_cells) j = g.n_cells - 1;
        const double theta = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
        out.field.values[j] += st.m[i] * (1.0 - theta) * scale;
        out.field.values[j + 1] += st.m[i] * theta * scale;
    }
    out.field = mollify(out.field, eps);
    return out;
}

/// One Euler step of positions and weights under the shared increment dw.
/// `density` supplies the kill rate D at the step-start positions. The kill
/// enters as its own factor exp(-D dt) <= 1 rather than folded into the
/// exponent: multiplication by a common factor and by a factor at most one
/// are both monotone in IEEE rounding, so a weight can never drift above its
/// twin even at the last bit.
inline void step_rep(RepState& st, const CoefficientSet& cs, double dt,
                     double dw, const Field& density, Rng& rng) {
    const double sq = std::sqrt(dt);
    if (cs.spatially_constant) {
        const double drift = rep_position_drift(cs, 0.0) * dt - cs.c(0.0) * dw;
        const double e0 = cs.e(0.0);
        const double grow = std::exp(rep_weight_drift(cs, 0.0) * dt);  // c'==0
        for (std::size_t i = 0; i < st.size(); ++i) {
            const double d = density.interp(st.xi[i]);
            st.m[i] *= grow * std::exp(-d * dt);
            st.m_twin[i] *= grow;
            st.xi[i] += drift + e0 * sq * rng.gauss();
        }
        return;
    }
    for (std::size_t i = 0; i < st.size(); ++i) {
        const double x = st.xi[i];
        const double d = density.interp(x);
        const double dc = detail::eval(cs.dc, x, "c'");
        const double grow = std::exp(rep_weight_drift(cs, x) * dt - dc * dw -
                                     0.5 * dc * dc * dt);
        st.m[i] *= grow * std::exp(-d * dt);
        st.m_twin[i] *= grow;
        st.xi[i] += rep_position_drift(cs, x) * dt -
                    detail::eval(cs.c, x, "c") * dw +
                    detail::eval(cs.e, x, "e") * sq * rng.gauss();
    }
}

struct RepParams {
    double eps = 0.01;            // kernel variance of the density estimate
    double cap = 0.0;             // weight cap; <= 0 means 10 <f,1>
    std::size_t store_every = 0;  // 0: final only; k: every k-th step
};

struct RepResult {
    Field density;
    double hat_min = 1.0;   // smallest attenuation seen along the run
    double mass_final = 0.0;
    double m_min = 0.0;     // final weight range
    double m_max = 0.0;
    double boundary_fraction = 0.0;  // final weight share outside the grid
    std::vector<double> hat_history;
    std::vector<double> times;    // populated when store_every > 0
    std::vector<Field> densities;
};

/// Full self-consistent run: at every path step the density is rebuilt from
/// the current weights and fed back as the kill rate.
inline RepResult run_rep(const Field& f0, const CoefficientSet& cs,
                         std::size_t n, const BrownianPath& path, double t,
                         std::uint64_t seed, const RepParams& rp = {}) {
    const std::size_t n_steps = detail::step_count(t, path.dt, "run_rep");
    if (n_steps > path.steps())
        throw BadGrid("run_rep: path shorter than the requested horizon");
    Rng rng(seed);
    RepState st = init_rep(f0, n, rng);
    const double cap = rp.cap > 0.0 ? rp.cap : 10.0 * st.base_mass;

    RepResult out;
    out.density = Field::zeros(f0.grid);
    out.hat_history.reserve(n_steps + 1);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const RepDensity dens = rep_density(st, f0.grid, rp.eps, cap);
        out.hat_min = std::min(out.hat_min, dens.hat);
        out.hat_history.push_back(dens.hat);
        if (rp.store_every > 0 && k % rp.store_every == 0) {
            out.times.push_back(static_cast<double>(k) * path.dt);
            out.densities.push_back(dens.field);
        }
        step_rep(st, cs, path.dt, path.increments[k], dens.field, rng);
    }
    const RepDensity last = rep_density(st, f0.grid, rp.eps, cap);
    out.density = last.field;
    out.hat_min = std::min(out.hat_min, last.hat);
    out.hat_history.push_back(last.hat);
    if (rp.store_every > 0) {
        out.times.push_back(static_cast<double>(n_steps) * path.dt);
        out.densities.push_back(last.field);
    }
    out.mass_final = integral(last.field);

    double total = 0.0, outside = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) {
        out.m_min = i == 0 ? st.m[i] : std::min(out.m_min, st.m[i]);
        out.m_max = std::max(out.m_max, st.m[i]);
        total += st.m[i];
        if (st.xi[i] < f0.grid.x_min || st.xi[i] > f0.grid.x_max)
            outside += st.m[i];
    }
    out.boundary_fraction = total > 0.0 ? outside / total : 0.0;
    return out;
}

}  // namespace slle
