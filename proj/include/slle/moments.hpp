#pragma once

// Independent routes to the first and second moments of <X_t, f>.
//
// Tracer route (pure particle simulation, no field solve):
//   E <X_t, f>   = <mu, E f(Z_t)>            dZ = b dt + c dW + e dB
//   E <X_t, f>^2 = <mu x mu, E f(Z^1_t) f(Z^2_t)>
//                + 2 t mu_tot E_s,anc [ f(Y^1_t) f(Y^2_t) ]
// where Z^1, Z^2 share the W increments but carry independent B, and the
// second term averages a uniformly drawn split time s: one ancestor runs for
// t - s, then two descendants run from its endpoint for s, again sharing W.
// The factor 2 t mu_tot is the total branching weight; together with the
// critical offspring variance it is what fixes Var <X_t, 1> = 2 mu_tot t.
//
// Duality route (field solves, no particles):
//   E <X_t, f>   = E_W <mu, z_t>      z the linear solve
//   E <X_t, f>^2 = E_W [ <mu, z_t>^2 - <mu, h_t> ]   h the companion solve
//
// The two routes share nothing numerically, which is the point: they bracket
// the branching ensemble from opposite sides.

#include <cmath>
#include <cstdint>
#include <vector>

#include "slle/errors.hpp"
#include "slle/grid.hpp"
#include "slle/lle_solver.hpp"
#include "slle/model.hpp"
#include "slle/noise.hpp"
#include "slle/rng.hpp"
#include "slle/util.hpp"

namespace slle {

struct McEstimate {
    double value = 0.0;
    double std_err = 0.0;
    std::size_t n_samples = 0;
};

namespace detail {

/// Euler scheme for one tracer over an arbitrary duration: full steps of dt
/// and one remainder step. For spatially constant coefficients this is exact
/// in law at any dt.
inline double sim_single(const CoefficientSet& cs, double x, double duration,
                         double dt, Rng& rng) {
    auto advance = [&](double z, double step) {
        const double sq = std::sqrt(step);
        return z + eval(cs.b, z, "b") * step + eval(cs.c, z, "c") * sq * rng.gauss() +
               eval(cs.e, z, "e") * sq * rng.gauss();
    };
    const auto n_full = static_cast<std::size_t>(duration / dt + 1e-9);
    for (std::size_t k = 0; k < n_full; ++k) x = advance(x, dt);
    const double rem = duration - static_cast<double>(n_full) * dt;
    if (rem > 1e-12 * dt) x = advance(x, rem);
    return x;
}

/// Two tracers sharing the W increments, independent B.
inline std::pair<double, double> sim_pair(const CoefficientSet& cs, double x1,
                                          double x2, double duration, double dt,
                                          Rng& rng) {
    auto advance = [&](double step) {
        const double sq = std::sqrt(step);
        const double dw = sq * rng.gauss();
        const double g1 = rng.gauss(), g2 = rng.gauss();
        x1 += eval(cs.b, x1, "b") * step + eval(cs.c, x1, "c") * dw +
              eval(cs.e, x1, "e") * sq * g1;
        x2 += eval(cs.b, x2, "b") * step + eval(cs.c, x2, "c") * dw +
              eval(cs.e, x2, "e") * sq * g2;
    };
    const auto n_full = static_cast<std::size_t>(duration / dt + 1e-9);
    for (std::size_t k = 0; k < n_full; ++k) advance(dt);
    const double rem = duration - static_cast<double>(n_full) * dt;
    if (rem > 1e-12 * dt) advance(rem);
    return {x1, x2};
}

inline McEstimate reduce(const std::vector<double>& vals) {
    McEstimate est;
    est.value = mean(vals);
    est.std_err = standard_error(vals);
    est.n_samples = vals.size();
    return est;
}

}  // namespace detail

inline McEstimate first_moment_tracer(const CoefficientSet& cs,
                                      const InitialMeasure& mu, const RealFn& f,
                                      double t, double dt, std::size_t n_samples,
                                      std::uint64_t seed, unsigned threads = 1) {
    if (n_samples == 0) throw ConfigError("first_moment_tracer: need samples");
    const double mass = mu.total_mass();
    std::vector<double> vals(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        const double x = mu.sample(rng);
        vals[i] = mass * f(detail::sim_single(cs, x, t, dt, rng));
    });
    return detail::reduce(vals);
}

inline McEstimate second_moment_tracer(const CoefficientSet& cs,
                                       const InitialMeasure& mu, const RealFn& f,
                                       double t, double dt,
                                       std::size_t n_samples, std::uint64_t seed,
                                       unsigned threads = 1) {
    if (n_samples == 0) throw ConfigError("second_moment_tracer: need samples");
    const double mass = mu.total_mass();
    const auto n_steps = static_cast<std::size_t>(t / dt + 1e-9);
    if (n_steps == 0) throw BadGrid("second_moment_tracer: t must exceed dt");
    std::vector<double> vals(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));

        const double x1 = mu.sample(rng), x2 = mu.sample(rng);
        const auto [z1, z2] = detail::sim_pair(cs, x1, x2, t, dt, rng);
        const double pair_term = f(z1) * f(z2);

        // Midpoint-of-cell split time keeps the time integral O(dt^2).
        const auto cell = static_cast<std::size_t>(rng.uniform() * double(n_steps));
        const double s = (static_cast<double>(std::min(cell, n_steps - 1)) + 0.5) * dt;
        const double anc =
            detail::sim_single(cs, mu.sample(rng), t - s, dt, rng);
        const auto [y1, y2] = detail::sim_pair(cs, anc, anc, s, dt, rng);
        const double branch_term = f(y1) * f(y2);

        vals[i] = mass * mass * pair_term + 2.0 * t * mass * branch_term;
    });
    return detail::reduce(vals);
}

struct DualityMoments {
    McEstimate first, second;
};

/// Field-side moments: averages <mu, z_t> and <mu, z_t>^2 - <mu, h_t> over
/// independent driving paths. `f0` is the test function sampled on the solve
/// grid. For c == 0 every path gives the same value and n_paths may be 1.
inline DualityMoments moments_via_duality(const Field& f0,
                                          const CoefficientSet& cs,
                                          const InitialMeasure& mu, double t,
                                          double noise_dt, std::size_t n_paths,
                                          std::uint64_t seed,
                                          const SolverParams& params = {}) {
    if (n_paths == 0) throw ConfigError("moments_via_duality: need paths");
    std::vector<double> firsts(n_paths), seconds(n_paths);
    SolverParams dense = params;
    dense.store_every = 1;  // the companion solve consumes every step of z
    for (std::size_t p = 0; p < n_paths; ++p) {
        const BrownianPath path = sample_path(t, noise_dt, derive_seed(seed, p));
        const Trajectory z = solve_linear(f0, cs, path, t, dense);
        const Trajectory h = solve_h(z, cs, path, t, params);
        const Field& zt = z.final_field();
        const Field& ht = h.final_field();
        const double zpair = mu.integrate([&](double x) { return zt.interp(x); });
        const double hpair = mu.integrate([&](double x) { return ht.interp(x); });
        firsts[p] = zpair;
        seconds[p] = zpair * zpair - hpair;
    }
    DualityMoments out;
    out.first = detail::reduce(firsts);
    out.second = detail::reduce(seconds);
    return out;
}

}  // namespace slle
