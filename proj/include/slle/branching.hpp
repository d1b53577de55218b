#pragma once

// Branching-particle representation of the measure-valued process. A
// population of equal-mass particles moves by
//
//     d eta_i = b(eta_i) dt + c(eta_i) dW + e(eta_i) dB_i,
//
// with W shared across the population and the B_i independent, and branches
// critically at rate lambda. The mass normalization beta = mu_total / n and
// the calibration lambda * beta = 2 make the population's Laplace functional
// match the quadratic reaction of the field equation, so
// E exp(-<X_t, f>) = E exp(-<mu, y_{0,t}>) and Var <X_t, 1> = 2 mu_total t.
//
// Offspring are drawn from the exact dt-transition of the critical binary
// count process,
//
//     P(Z = 0) = p0,  P(Z = k) = (1 - p0)^2 p0^(k-1)  (k >= 1),
//     p0 = (lambda dt / 2) / (1 + lambda dt / 2),
//
// the flow of dF/dt = (lambda/2)(1 - F)^2 evaluated at time dt. Counts at
// grid times are therefore exact in law for any dt; only the spatial mixing
// between branch times is step-size limited, which the rate-per-step guard
// below keeps in check.

#include <cmath>
#include <cstdint>
#include <vector>

#include "slle/errors.hpp"
#include "slle/model.hpp"
#include "slle/noise.hpp"
#include "slle/rng.hpp"

namespace slle {

struct PopulationState {
    std::vector<double> positions;
    double beta = 0.0;    // mass per particle
    double lambda = 0.0;  // branching rate; lambda * beta == 2

    double mass() const { return beta * static_cast<double>(positions.size()); }
};

inline PopulationState init_population(const InitialMeasure& mu, std::size_t n,
                                       Rng& rng) {
    if (n == 0) throw EmptyMeasure("init_population: need at least one particle");
    PopulationState st;
    st.beta = mu.total_mass() / static_cast<double>(n);
    st.lambda = 2.0 / st.beta;
    st.positions.resize(n);
    for (double& x : st.positions) x = mu.sample(rng);
    return st;
}

namespace detail {

/// One offspring count. Conditional on survival, Z - 1 is geometric with
/// failure probability p0, sampled by inversion. The caller hoists log(p0)
/// out of its particle loop.
inline std::size_t sample_offspring(double p0, double log_p0, Rng& rng) {
    if (rng.uniform() < p0) return 0;
    const double v = rng.uniform();
    return 1 + static_cast<std::size_t>(std::log(v) / log_p0);
}

inline std::size_t sample_offspring(double p0, Rng& rng) {
    return sample_offspring(p0, std::log(p0), rng);
}

inline double offspring_p0(double lambda, double dt) {
    const double half = 0.5 * lambda * dt;
    return half / (1.0 + half);
}

}  // namespace detail

/// One Euler step of every particle (shared increment dw) followed by one
/// branching generation. `scratch` avoids reallocating the offspring vector.
inline void step_population(PopulationState& st, const CoefficientSet& cs,
                            double dt, double dw, Rng& rng,
                            std::vector<double>& scratch) {
    if (st.positions.empty()) return;
    const double sq = std::sqrt(dt);
    if (cs.spatially_constant) {
        const double shift = cs.b(0.0) * dt + cs.c(0.0) * dw;
        const double e0 = cs.e(0.0);
        for (double& x : st.positions) x += shift + e0 * sq * rng.gauss();
    } else {
        for (double& x : st.positions)
            x += detail::eval(cs.b, x, "b") * dt +
                 detail::eval(cs.c, x, "c") * dw +
                 detail::eval(cs.e, x, "e") * sq * rng.gauss();
    }

    const double p0 = detail::offspring_p0(st.lambda, dt);
    const double log_p0 = std::log(p0);
    scratch.clear();
    for (double x : st.positions) {
        const std::size_t z = detail::sample_offspring(p0, log_p0, rng);
        scratch.insert(scratch.end(), z, x);
    }
    st.positions.swap(scratch);
}

/// Same step under the block-averaged drive: the smooth-noise particle
/// motion needs the Stratonovich-form drift bar_b so that its small-block
/// limit is the Ito system above.
inline void step_population_wz(PopulationState& st, const CoefficientSet& cs,
                               double dt, double rate, Rng& rng,
                               std::vector<double>& scratch) {
    if (st.positions.empty()) return;
    const double sq = std::sqrt(dt);
    if (cs.spatially_constant) {
        const double shift = (cs.b(0.0) + cs.c(0.0) * rate) * dt;
        const double e0 = cs.e(0.0);
        for (double& x : st.positions) x += shift + e0 * sq * rng.gauss();
    } else {
        for (double& x : st.positions)
            x += (bar_b(cs, x) + detail::eval(cs.c, x, "c") * rate) * dt +
                 detail::eval(cs.e, x, "e") * sq * rng.gauss();
    }

    const double p0 = detail::offspring_p0(st.lambda, dt);
    const double log_p0 = std::log(p0);
    scratch.clear();
    for (double x : st.positions) {
        const std::size_t z = detail::sample_offspring(p0, log_p0, rng);
        scratch.insert(scratch.end(), z, x);
    }
    st.positions.swap(scratch);
}

struct ReplicaObservables {
    double mass = 0.0;        // <X_t, 1>
    double integral_f = 0.0;  // <X_t, f>
    double exp_neg = 1.0;     // exp(-<X_t, f>)
};

inline ReplicaObservables observe(const PopulationState& st, const RealFn& f) {
    double acc = 0.0;
    for (double x : st.positions) acc += f(x);
    ReplicaObservables obs;
    obs.mass = st.mass();
    obs.integral_f = st.beta * acc;
    obs.exp_neg = std::exp(-obs.integral_f);
    return obs;
}

struct BranchingParams {
    std::size_t n_particles = 1000;
    /// Upper bound on lambda * dt. The count law is exact at any step, but
    /// past this much branching per step the spatial genealogy blurs.
    double max_rate_dt = 10.0;
};

namespace detail {
inline void check_rate(double lambda, double dt, double bound) {
    if (lambda * dt > bound)
        throw ValidationFailed(
            "branching: lambda * dt exceeds the per-step budget; decrease the "
            "step or the particle count");
}
}  // namespace detail

/// Population driven by the given path from mu to time t; observables of f at
/// the final time. All particle randomness comes from `seed`.
inline ReplicaObservables run_replica(const CoefficientSet& cs,
                                      const InitialMeasure& mu, const RealFn& f,
                                      const BrownianPath& path, double t,
                                      std::uint64_t seed,
                                      const BranchingParams& bp = {}) {
    const std::size_t n_steps = detail::step_count(t, path.dt, "run_replica");
    if (n_steps > path.steps())
        throw BadGrid("run_replica: path shorter than the requested horizon");
    Rng rng(seed);
    PopulationState st = init_population(mu, bp.n_particles, rng);
    detail::check_rate(st.lambda, path.dt, bp.max_rate_dt);
    std::vector<double> scratch;
    scratch.reserve(2 * bp.n_particles);
    for (std::size_t k = 0; k < n_steps && !st.positions.empty(); ++k)
        step_population(st, cs, path.dt, path.increments[k], rng, scratch);
    return observe(st, f);
}

/// Same population under the block-averaged drive.
inline ReplicaObservables run_replica_wz(const CoefficientSet& cs,
                                         const InitialMeasure& mu,
                                         const RealFn& f, const WZRate& rate,
                                         double t, std::uint64_t seed,
                                         const BranchingParams& bp = {}) {
    const std::size_t n_steps = detail::step_count(t, rate.dt, "run_replica_wz");
    if (n_steps > rate.values.size())
        throw BadGrid("run_replica_wz: rate shorter than the requested horizon");
    Rng rng(seed);
    PopulationState st = init_population(mu, bp.n_particles, rng);
    detail::check_rate(st.lambda, rate.dt, bp.max_rate_dt);
    std::vector<double> scratch;
    scratch.reserve(2 * bp.n_particles);
    for (std::size_t k = 0; k < n_steps && !st.positions.empty(); ++k)
        step_population_wz(st, cs, rate.dt, rate.values[k], rng, scratch);
    return observe(st, f);
}

}  // namespace slle
