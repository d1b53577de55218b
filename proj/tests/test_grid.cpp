#include <catch2/catch_amalgamated.hpp>

#include <slle/grid.hpp>
#include <slle/model.hpp>
#include <slle/rng.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

using namespace slle;

TEST_CASE("grid construction and node placement", "[grid]") {
    const Grid1D g = Grid1D::make(-1.0, 3.0, 8);
    CHECK(g.h() == 0.5);
    CHECK(g.n_nodes() == 9);
    CHECK(g.node(0) == -1.0);
    CHECK(g.node(8) == 3.0);
    CHECK_THROWS_AS(Grid1D::make(1.0, 1.0, 4), BadGrid);
    CHECK_THROWS_AS(Grid1D::make(0.0, 1.0, 1), BadGrid);
}

TEST_CASE("trapezoid rule carries the classical h^2 correction", "[grid]") {
    // For f(x) = x^2 on [0,1] the composite trapezoid value is exactly
    // 1/3 + h^2/6: the Euler-Maclaurin error term (h^2/12) [f']_0^1 with no
    // higher corrections since f'' is constant.
    const Grid1D g = Grid1D::make(0.0, 1.0, 100);
    const Field f = Field::sample(g, [](double x) { return x; });
    const double h = g.h();
    CHECK(inner(f, f) == Catch::Approx(1.0 / 3.0 + h * h / 6.0).margin(1e-15));

    const Field one = Field::sample(g, [](double) { return 1.0; });
    CHECK(integral(one) == Catch::Approx(1.0).margin(1e-14));
    CHECK(l2_norm(one) == Catch::Approx(1.0).margin(1e-14));

    const Field other = Field::zeros(Grid1D::make(0.0, 1.0, 50));
    CHECK_THROWS_AS(inner(f, other), GridMismatch);
}

TEST_CASE("interpolation is exact on affine data and zero outside", "[grid]") {
    const Grid1D g = Grid1D::make(0.0, 1.0, 10);
    const Field f = Field::sample(g, [](double x) { return 2.0 * x + 1.0; });
    CHECK(f.interp(0.237) == Catch::Approx(1.474).margin(1e-14));
    CHECK(f.interp(0.0) == 1.0);
    CHECK(f.interp(1.0) == 3.0);
    CHECK(f.interp(-0.001) == 0.0);
    CHECK(f.interp(1.001) == 0.0);
}

TEST_CASE("interpolation never leaves the bracketing node interval", "[grid]") {
    const Grid1D g = Grid1D::make(-2.0, 2.0, 57);
    Rng rng(5);
    Field f = Field::zeros(g);
    for (double& v : f.values) v = 2.0 * rng.uniform() - 1.0;
    const double h = g.h();
    for (int trial = 0; trial < 10'000; ++trial) {
        const auto j = static_cast<std::size_t>(rng.uniform() * 56.999);
        const double u = 0.1 + 0.8 * rng.uniform();  // stay off the nodes
        const double x = g.x_min + (static_cast<double>(j) + u) * h;
        const double v = f.interp(x);
        CHECK(v >= std::min(f.values[j], f.values[j + 1]));
        CHECK(v <= std::max(f.values[j], f.values[j + 1]));
    }
}

TEST_CASE("mollification matches the gaussian convolution closed form", "[grid]") {
    // N(0, v) convolved with N(0, eps) is N(0, v + eps); for the bump
    // A exp(-x^2/2v) the smoothed profile is A sqrt(v/(v+eps)) exp(-x^2/(2(v+eps))).
    const Grid1D g = Grid1D::make(-10.0, 10.0, 2000);
    const double v = 0.25, eps = 0.04, amp = 2.0;
    const Field f = Field::sample(g, gaussian_bump(v, amp).f);
    const Field out = mollify(f, eps);

    const double factor = amp * std::sqrt(v / (v + eps));
    double worst = 0.0;
    for (std::size_t j = 0; j < g.n_nodes(); ++j) {
        const double x = g.node(j);
        if (std::abs(x) > 2.0) continue;
        const double want = factor * std::exp(-x * x / (2.0 * (v + eps)));
        worst = std::max(worst, std::abs(out.values[j] - want));
    }
    CHECK(worst < 1e-6);

    // Renormalized kernel preserves trapezoid mass of interior-supported input.
    CHECK(integral(out) == Catch::Approx(integral(f)).epsilon(1e-12));

    CHECK_THROWS_AS(mollify(f, 2.5e-5), BandwidthTooSmall);
    CHECK_NOTHROW(mollify(f, 1e-4));
}

TEST_CASE("implicit diffusion damps dirichlet eigenvectors exactly", "[grid]") {
    // sin(k pi x) is an eigenvector of the centered second difference with
    // eigenvalue -4 sin^2(k pi h / 2) / h^2, so one backward Euler step
    // divides it by 1 + dt a lambda_k.
    const Grid1D g = Grid1D::make(0.0, 1.0, 200);
    const double h = g.h(), a = 0.3, dt = 1e-3;
    const int k = 3;
    const Field in = Field::sample(
        g, [k](double x) { return std::sin(k * std::numbers::pi * x); });
    const std::vector<double> coef(g.n_nodes(), a);
    const Field out = implicit_diffusion_step(in, coef, dt);

    const double s = std::sin(0.5 * k * std::numbers::pi * h);
    const double lambda = 4.0 * s * s / (h * h);
    const double damp = 1.0 / (1.0 + dt * a * lambda);
    for (std::size_t j = 0; j < g.n_nodes(); ++j)
        CHECK(std::abs(out.values[j] - damp * in.values[j]) < 1e-12);

    CHECK_THROWS_AS(implicit_diffusion_step(in, std::vector<double>(3, a), dt),
                    GridMismatch);
    CHECK_THROWS_AS(implicit_diffusion_step(in, std::vector<double>(g.n_nodes(), -1.0), dt),
                    SingularSystem);
    CHECK_THROWS_AS(implicit_diffusion_step(in, coef, 0.0), BadGrid);
}

TEST_CASE("implicit diffusion respects the range of the input", "[grid]") {
    const Grid1D g = Grid1D::make(0.0, 1.0, 150);
    Rng rng(17);
    Field in = Field::zeros(g);
    for (std::size_t j = 1; j + 1 < g.n_nodes(); ++j) in.values[j] = rng.uniform();
    std::vector<double> coef(g.n_nodes());
    for (double& c : coef) c = 0.5 + rng.uniform();
    const Field out = implicit_diffusion_step(in, coef, 5e-3);
    for (double v : out.values) {
        CHECK(v >= -1e-13);
        CHECK(v <= 1.0 + 1e-13);
    }
}

TEST_CASE("transport shifts node values when the displacement tiles the grid", "[grid]") {
    // h = 2/128 is a power of two, so node arithmetic and the shift by
    // 32 h = 0.5 are exact and the semi-Lagrangian step is a pure reindex.
    const Grid1D g = Grid1D::make(0.0, 2.0, 128);
    const Field in = Field::sample(
        g, [](double x) { return std::max(0.0, 0.5 - std::abs(x - 1.0)); });

    const Field right = transport_step(in, [](double) { return 0.5; });
    for (std::size_t j = 0; j < g.n_nodes(); ++j) {
        if (j >= 32)
            CHECK(right.values[j] == in.values[j - 32]);
        else
            CHECK(right.values[j] == 0.0);
    }

    const Field still = transport_step(in, [](double) { return 0.0; });
    CHECK(still.values == in.values);

    const Field left = transport_step(in, [](double) { return -0.5; });
    for (std::size_t j = 0; j + 32 < g.n_nodes(); ++j)
        CHECK(left.values[j] == in.values[j + 32]);
}

TEST_CASE("field csv dump", "[grid]") {
    const Grid1D g = Grid1D::make(0.0, 1.0, 2);
    const Field f = Field::sample(g, [](double x) { return 3.0 * x; });
    std::ostringstream os;
    dump_field_csv(f, os);
    CHECK(os.str() == "x,value\n0,0\n0.5,1.5\n1,3\n");
}
