#pragma once

// Uniform 1-D grid, nodal fields, and the spatial building blocks of the
// solvers: trapezoid pairings, Gaussian smoothing, one implicit diffusion
// step, and semi-Lagrangian transport.
//
// Bound preservation is a hard requirement on these kernels, in exact
// floating point and not merely up to roundoff. Interpolation is therefore
// written in the incremental form a + theta*(b - a): with theta in [0,1] and
// monotone rounding the result provably stays inside [min(a,b), max(a,b)].
// The implicit diffusion step is the one kernel where no such proof exists
// (a tridiagonal solve can overshoot by an ulp), so its caller is handed the
// overshoot magnitude and clamps explicitly; see lle_solver.hpp.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "slle/errors.hpp"
#include "slle/util.hpp"

namespace slle {

struct Grid1D {
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t n_cells = 0;  // nodes are 0..n_cells inclusive

    static Grid1D make(double x_min, double x_max, std::size_t n_cells) {
        if (!(x_max > x_min) || n_cells < 2)
            throw BadGrid("Grid1D: need x_max > x_min and at least 2 cells");
        return Grid1D{x_min, x_max, n_cells};
    }

    double h() const { return (x_max - x_min) / static_cast<double>(n_cells); }
    std::size_t n_nodes() const { return n_cells + 1; }
    double node(std::size_t j) const {
        return x_min + static_cast<double>(j) * h();
    }
    bool operator==(const Grid1D&) const = default;
};

struct Field {
    Grid1D grid;
    std::vector<double> values;  // one per node

    static Field zeros(const Grid1D& g) {
        return Field{g, std::vector<double>(g.n_nodes(), 0.0)};
    }

    template <typename Fn>
    static Field sample(const Grid1D& g, Fn&& fn) {
        Field f = zeros(g);
        for (std::size_t j = 0; j < g.n_nodes(); ++j) f.values[j] = fn(g.node(j));
        return f;
    }

    /// Clamped linear interpolation; exactly 0 outside the domain. The value
    /// never leaves [min, max] of the two bracketing nodes (see file header).
    double interp(double x) const {
        if (x < grid.x_min || x > grid.x_max) return 0.0;
        const double h = grid.h();
        double pos = (x - grid.x_min) / h;
        auto j = static_cast<std::size_t>(pos);
        if (j >= grid.n_cells) return values.back();
        double theta = pos - static_cast<double>(j);
        if (theta < 0.0) theta = 0.0;
        if (theta > 1.0) theta = 1.0;
        const double a = values[j];
        return a + theta * (values[j + 1] - a);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

inline void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw GridMismatch("fields live on different grids");
}

/// Trapezoid pairing <A,B> = integral of A*B over the domain.
inline double inner(const Field& a, const Field& b) {
    require_same_grid(a, b);
    const std::size_t n = a.grid.n_cells;
    double acc = 0.5 * (a.values[0] * b.values[0] + a.values[n] * b.values[n]);
    for (std::size_t j = 1; j < n; ++j) acc += a.values[j] * b.values[j];
    return acc * a.grid.h();
}

/// Trapezoid integral of the field itself.
inline double integral(const Field& a) {
    const std::size_t n = a.grid.n_cells;
    double acc = 0.5 * (a.values[0] + a.values[n]);
    for (std::size_t j = 1; j < n; ++j) acc += a.values[j];
    return acc * a.grid.h();
}

inline double l2_norm(const Field& a) { return std::sqrt(inner(a, a)); }

/// Discrete Gaussian convolution with kernel variance eps. The kernel is
/// truncated at 6 standard deviations and renormalized to unit discrete mass,
/// so total trapezoid mass of compactly supported input is preserved exactly
/// up to roundoff. Reads outside the domain are zero.
inline Field mollify(const Field& in, double eps) {
    const double h = in.grid.h();
    if (!(eps > 0.0) || std::sqrt(eps) < h)
        throw BandwidthTooSmall("mollify: need sqrt(eps) >= grid spacing");
    const auto radius =
        static_cast<std::ptrdiff_t>(std::ceil(6.0 * std::sqrt(eps) / h));
    std::vector<double> w(static_cast<std::size_t>(radius) + 1);
    double total = 0.0;
    for (std::ptrdiff_t r = -radius; r <= radius; ++r) {
        const double x = static_cast<double>(r) * h;
        const double v = std::exp(-x * x / (2.0 * eps));
        if (r >= 0) w[static_cast<std::size_t>(r)] = v;
        total += v;
    }
    const double norm = 1.0 / (total * h);  // sum(w)*h == 1 after scaling
    for (double& v : w) v *= norm;

    Field out = Field::zeros(in.grid);
    const auto n = static_cast<std::ptrdiff_t>(in.grid.n_nodes());
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        double acc = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, j - radius);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, j + radius);
        for (std::ptrdiff_t i = lo; i <= hi; ++i) {
            const std::ptrdiff_t r = j >= i ? j - i : i - j;
            acc += w[static_cast<std::size_t>(r)] *
                   in.values[static_cast<std::size_t>(i)];
        }
        out.values[static_cast<std::size_t>(j)] = acc * h;
    }
    return out;
}

/// One backward-Euler diffusion step with nodewise coefficient `coef`:
/// solves (I - dt * coef(x) * D2) u = in with homogeneous Dirichlet walls,
/// D2 the centered second difference. Thomas algorithm; the system is
/// strictly diagonally dominant for coef >= 0, any non-positive pivot
/// signals a genuinely broken coefficient and raises SingularSystem.
inline Field implicit_diffusion_step(const Field& in,
                                     const std::vector<double>& coef,
                                     double dt) {
    const std::size_t nodes = in.grid.n_nodes();
    if (coef.size() != nodes)
        throw GridMismatch("implicit_diffusion_step: coefficient size mismatch");
    if (!(dt > 0.0)) throw BadGrid("implicit_diffusion_step: dt must be positive");
    const double h = in.grid.h();
    const double r = dt / (h * h);

    Field out = Field::zeros(in.grid);
    if (nodes < 3) return out;
    const std::size_t m = nodes - 2;  // interior unknowns
    std::vector<double> diag(m), rhs(m), upper(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double k = coef[i + 1] * r;
        if (!(coef[i + 1] >= 0.0))
            throw SingularSystem("implicit_diffusion_step: negative diffusion");
        diag[i] = 1.0 + 2.0 * k;
        upper[i] = -k;
        rhs[i] = in.values[i + 1];
    }
    // forward sweep (lower entry of row i equals upper[i] by symmetry of -k)
    for (std::size_t i = 1; i < m; ++i) {
        const double lower = -coef[i + 1] * r;
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        if (!(diag[i] > 0.0))
            throw SingularSystem("implicit_diffusion_step: non-positive pivot");
        rhs[i] -= w * rhs[i - 1];
    }
    out.values[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;)
        out.values[i + 1] = (rhs[i] - upper[i] * out.values[i + 2]) / diag[i];
    out.values[0] = 0.0;
    out.values[nodes - 1] = 0.0;
    return out;
}

/// Semi-Lagrangian transport: out(x) = in(x - displacement(x)), with the
/// clamped linear interpolation of Field::interp. Monotone and bound
/// preserving for any displacement field.
inline Field transport_step(const Field& in,
                            const std::function<double(double)>& displacement) {
    Field out = Field::zeros(in.grid);
    for (std::size_t j = 0; j < in.grid.n_nodes(); ++j) {
        const double x = in.grid.node(j);
        out.values[j] = in.interp(x - displacement(x));
    }
    return out;
}

/// CSV dump, header "x,value".
inline void dump_field_csv(const Field& f, std::ostream& os) {
    os << "x,value\n";
    for (std::size_t j = 0; j < f.grid.n_nodes(); ++j)
        os << format_g17(f.grid.node(j)) << ',' << format_g17(f.values[j]) << '\n';
}

inline void dump_field_csv(const Field& f, const std::string& file) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot open for writing: " + file);
    dump_field_csv(f, os);
}

}  // namespace slle
