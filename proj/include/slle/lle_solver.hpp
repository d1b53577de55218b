#pragma once

// Pathwise solvers for the stochastic log-Laplace equation and its linear
// relatives, driven by a sampled Brownian path W (or its block-averaged
// rate). The Ito equation
//
//     dy = (b y' + a y'' - y^2) dt + c y' dW
//
// is stepped in its Stratonovich-equivalent form: drift bar_b = b - c c'/2,
// diffusion bar_a = e^2/2, plus transport along the characteristics of
// c dW. Per noise increment the splitting is
//
//     exact reaction  ->  upwind drift  ->  implicit diffusion  ->
//     semi-Lagrangian transport with the full increment,
//
// where the three deterministic substeps may subcycle (solver dt divides the
// path dt) and the drift additionally substeps to satisfy a CFL target.
// Every substep maps [0, max f] into itself, so solutions obey the
// comparison bound 0 <= y <= sup f exactly; the one roundoff-unsafe kernel
// (the tridiagonal solve) is clamped and the clamp magnitude reported in the
// trajectory diagnostics, where anything above ulp scale means a bug.
//
// Transport characteristics: the Stratonovich term c y' dW transports values
// along dX = c(X) dW, i.e. the profile at x is read from x + c(x) dW
// (one Heun step approximates the Stratonovich characteristic). Transport is
// skipped when c vanishes at every grid node, which keeps c == 0 runs
// bitwise independent of the driving path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "slle/errors.hpp"
#include "slle/grid.hpp"
#include "slle/model.hpp"
#include "slle/noise.hpp"

namespace slle {

struct SolverParams {
    double dt = 1e-3;          // deterministic substep; must divide the path dt
    double substep_cfl = 0.9;  // drift CFL target, must be in (0, 1]
    double boundary_tol = 1e-8;  // boundary-leak threshold relative to sup f
    bool strang = false;         // symmetrized splitting around the transport
    std::size_t store_every = 0;  // 0: initial+final only; k: every k-th noise step
    std::size_t max_drift_substeps = 100000;
};

struct SolveDiagnostics {
    double max_boundary_ratio = 0.0;  // max |y| next to the wall / reference sup
    double max_clamp = 0.0;           // largest diffusion overshoot clamped away
};

struct Trajectory {
    double noise_dt = 0.0;
    std::vector<double> times;
    std::vector<Field> fields;
    SolveDiagnostics diag;

    const Field& final_field() const { return fields.back(); }
    double final_time() const { return times.back(); }
};

namespace detail {

enum class Reaction { quadratic, none, source };

struct StepScratch {
    std::vector<double> buf;
};

/// Explicit upwind sweep for the drift term +bar_b y'. One-sided differences
/// chosen so each node update is a convex combination; substepped to keep
/// theta = |bar_b| dt / h within the CFL target.
inline void drift_substep(Field& y, const std::vector<double>& bb, double dt,
                          double max_bb, const SolverParams& p,
                          StepScratch& scratch) {
    if (max_bb == 0.0) return;
    const double h = y.grid.h();
    const double full = max_bb * dt / h;
    const auto n_sub = static_cast<std::size_t>(
        std::max(1.0, std::ceil(full / p.substep_cfl)));
    if (n_sub > p.max_drift_substeps)
        throw CFLViolation("drift substep budget exhausted");
    const double dts = dt / static_cast<double>(n_sub);
    const std::size_t last = y.grid.n_cells;
    scratch.buf.resize(y.values.size());
    for (std::size_t s = 0; s < n_sub; ++s) {
        std::vector<double>& prev = y.values;
        for (std::size_t j = 1; j < last; ++j) {
            const double v = bb[j];
            const double a = prev[j];
            const double nb = v >= 0.0 ? prev[j + 1] : prev[j - 1];
            const double theta = std::abs(v) * dts / h;
            scratch.buf[j] = a + theta * (nb - a);
        }
        scratch.buf[0] = prev[0];
        scratch.buf[last] = prev[last];
        y.values.swap(scratch.buf);
    }
}

/// Shared stepping loop. `eff_increments[k]` is the transport increment of
/// noise step k: the raw Brownian increment for the exact equations, or the
/// block rate times dt for the smoothed-noise equation.
inline Trajectory solve_core(const Field& initial, const CoefficientSet& cs,
                             std::span<const double> eff_increments,
                             double noise_dt, double t, const SolverParams& p,
                             Reaction reaction, const Trajectory* source_z) {
    if (!(p.substep_cfl > 0.0 && p.substep_cfl <= 1.0))
        throw ConfigError("substep_cfl must be in (0, 1]");
    const std::size_t n_steps = detail::step_count(t, noise_dt, "solve");
    if (n_steps > eff_increments.size())
        throw BadGrid("solve: path shorter than requested duration");
    const double sub_ratio = noise_dt / p.dt;
    const auto m = static_cast<std::size_t>(std::llround(sub_ratio));
    if (m == 0 || std::abs(static_cast<double>(m) * p.dt - noise_dt) >
                      1e-9 * noise_dt)
        throw BadGrid("solve: solver dt must divide the path dt");

    const Grid1D& g = initial.grid;
    std::vector<double> bb(g.n_nodes()), ba(g.n_nodes());
    double max_bb = 0.0, max_c = 0.0;
    for (std::size_t j = 0; j < g.n_nodes(); ++j) {
        const double x = g.node(j);
        bb[j] = bar_b(cs, x);
        ba[j] = bar_a(cs, x);
        max_bb = std::max(max_bb, std::abs(bb[j]));
        max_c = std::max(max_c, std::abs(detail::eval(cs.c, x, "c")));
    }
    const bool do_transport = max_c > 0.0;

    double lo_bound = 0.0, hi_bound = 0.0;
    for (double v : initial.values) {
        lo_bound = std::min(lo_bound, v);
        hi_bound = std::max(hi_bound, v);
    }
    const double sup0 = std::max(std::abs(lo_bound), std::abs(hi_bound));
    if (reaction == Reaction::quadratic && lo_bound < 0.0)
        throw ConfigError("solve_forward: initial condition must be nonnegative");
    if (reaction == Reaction::source) lo_bound = -std::numeric_limits<double>::infinity();

    if (source_z) {
        const bool aligned =
            source_z->noise_dt == noise_dt &&
            source_z->fields.size() >= n_steps + 1 &&
            source_z->times.size() > 1 &&
            std::abs(source_z->times[1] - noise_dt) <= 1e-12 * noise_dt &&
            source_z->fields.front().grid == g;
        if (!aligned)
            throw TrajectoryMismatch(
                "solve_h: source trajectory must be stored at every step of the "
                "same path and grid");
    }

    Trajectory traj;
    traj.noise_dt = noise_dt;
    Field y = initial;
    traj.times.push_back(0.0);
    traj.fields.push_back(y);

    double monitor_ref = sup0;
    StepScratch scratch;

    auto reaction_substep = [&](double dt_s, std::size_t k) {
        switch (reaction) {
            case Reaction::none:
                break;
            case Reaction::quadratic:
                for (double& v : y.values) v = v / (1.0 + v * dt_s);
                break;
            case Reaction::source: {
                const std::vector<double>& z = source_z->fields[k].values;
                for (std::size_t j = 0; j < y.values.size(); ++j)
                    y.values[j] -= 2.0 * z[j] * z[j] * dt_s;
                break;
            }
        }
    };
    auto diffusion_substep = [&](double dt_s) {
        Field next = implicit_diffusion_step(y, ba, dt_s);
        // Clamp the tridiagonal roundoff overshoot; anything beyond ulp scale
        // in diag.max_clamp indicates a real positivity violation.
        for (double& v : next.values) {
            if (v < lo_bound) {
                traj.diag.max_clamp = std::max(traj.diag.max_clamp, lo_bound - v);
                v = lo_bound;
            } else if (v > hi_bound) {
                traj.diag.max_clamp = std::max(traj.diag.max_clamp, v - hi_bound);
                v = hi_bound;
            }
        }
        y = std::move(next);
    };
    auto transport_substep = [&](double dw) {
        if (!do_transport || dw == 0.0) return;
        y = transport_step(y, [&](double x) {
            const double k1 = cs.c(x) * dw;
            const double k2 = cs.c(x + k1) * dw;
            return -0.5 * (k1 + k2);
        });
    };

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double dw = eff_increments[k];
        if (p.strang) {
            const double half = 0.5 * p.dt;
            for (std::size_t s = 0; s < m; ++s) {
                reaction_substep(half, k);
                drift_substep(y, bb, half, max_bb, p, scratch);
                diffusion_substep(half);
            }
            transport_substep(dw);
            for (std::size_t s = 0; s < m; ++s) {
                diffusion_substep(half);
                drift_substep(y, bb, half, max_bb, p, scratch);
                reaction_substep(half, k);
            }
        } else {
            for (std::size_t s = 0; s < m; ++s) {
                reaction_substep(p.dt, k);
                drift_substep(y, bb, p.dt, max_bb, p, scratch);
                diffusion_substep(p.dt);
            }
            transport_substep(dw);
        }

        if (reaction == Reaction::source)
            monitor_ref = std::max(monitor_ref, y.max_abs());
        const double near_wall =
            std::max(std::abs(y.values[1]), std::abs(y.values[g.n_cells - 1]));
        if (monitor_ref > 0.0) {
            traj.diag.max_boundary_ratio =
                std::max(traj.diag.max_boundary_ratio, near_wall / monitor_ref);
            if (near_wall > p.boundary_tol * monitor_ref)
                throw BoundaryLeak("solution mass reached the domain wall at step " +
                                   std::to_string(k + 1));
        }

        const bool last = k + 1 == n_steps;
        if (last || (p.store_every > 0 && (k + 1) % p.store_every == 0)) {
            traj.times.push_back(static_cast<double>(k + 1) * noise_dt);
            traj.fields.push_back(y);
        }
    }
    return traj;
}

}  // namespace detail

/// Forward equation with the quadratic reaction, driven by the given path.
inline Trajectory solve_forward(const Field& initial, const CoefficientSet& cs,
                                const BrownianPath& path, double t,
                                const SolverParams& p) {
    return detail::solve_core(initial, cs, path.increments, path.dt, t, p,
                              detail::Reaction::quadratic, nullptr);
}

/// Linear version (no reaction); the first-moment generator solve.
inline Trajectory solve_linear(const Field& initial, const CoefficientSet& cs,
                               const BrownianPath& path, double t,
                               const SolverParams& p) {
    return detail::solve_core(initial, cs, path.increments, path.dt, t, p,
                              detail::Reaction::none, nullptr);
}

/// Forward solve of alpha * initial; the scaling family used by the
/// derivative identities.
inline Trajectory solve_scaled(double alpha, const Field& initial,
                               const CoefficientSet& cs, const BrownianPath& path,
                               double t, const SolverParams& p) {
    Field scaled = initial;
    for (double& v : scaled.values) v *= alpha;
    return solve_forward(scaled, cs, path, t, p);
}

/// Backward solution y_{0,t} evaluated via time reversal: the backward Ito
/// equation over [0,t] is the forward equation driven by the reversed
/// increments, so this is exactly solve_forward on reversed(path, t).
inline Trajectory solve_backward(const Field& terminal, const CoefficientSet& cs,
                                 const BrownianPath& path, double t,
                                 const SolverParams& p) {
    const BrownianPath rev = reversed(path, t);
    return detail::solve_core(terminal, cs, rev.increments, rev.dt, t, p,
                              detail::Reaction::quadratic, nullptr);
}

/// Companion equation with zero initial condition and source -2 z^2, where z
/// is a previously computed linear solve stored at every noise step of the
/// same path. Used by the second-moment identities; the solution is <= 0.
inline Trajectory solve_h(const Trajectory& z, const CoefficientSet& cs,
                          const BrownianPath& path, double t,
                          const SolverParams& p) {
    const Field zero = Field::zeros(z.fields.front().grid);
    return detail::solve_core(zero, cs, path.increments, path.dt, t, p,
                              detail::Reaction::source, &z);
}

/// Smoothed-noise equation: within each block of width eps the transport
/// velocity is the block-averaged rate, so the effective transport increment
/// of step k is rate[k] * dt. Same splitting as solve_forward.
inline Trajectory solve_wz(const Field& initial, const CoefficientSet& cs,
                           const WZRate& rate, double t, const SolverParams& p) {
    std::vector<double> eff(rate.values.size());
    for (std::size_t k = 0; k < eff.size(); ++k) eff[k] = rate.values[k] * rate.dt;
    return detail::solve_core(initial, cs, eff, rate.dt, t, p,
                              detail::Reaction::quadratic, nullptr);
}

}  // namespace slle
