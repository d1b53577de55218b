#include <catch2/catch_amalgamated.hpp>

#include <slle/moments.hpp>

#include <cmath>
#include <vector>

using namespace slle;

TEST_CASE("single tracer has the right gaussian law", "[moments]") {
    // Constant coefficients make the Euler scheme exact: Z_t is normal with
    // mean x + b t and variance (c^2 + e^2) t.
    const ModelPreset preset = make_preset("CONST:b0=0.3");
    const double t = 0.25;
    const int n = 200'000;
    Rng rng(3);
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = detail::sim_single(preset.coeffs, 1.0, t, t / 4.0, rng);
        s1 += z;
        s2 += z * z;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean - (1.0 + 0.3 * t)) < 4.0 * std::sqrt(2.0 * t / n));
    CHECK(std::abs(var - 2.0 * t) < 0.05 * 2.0 * t);
}

TEST_CASE("paired tracers correlate through the shared drive", "[moments]") {
    // Cov(Z^1_t, Z^2_t) = c^2 t: the B parts are independent.
    const ModelPreset preset = make_preset("CONST");
    const double t = 0.25;
    const int n = 100'000;
    Rng rng(4);
    double s1 = 0, s2 = 0, s12 = 0, q1 = 0, q2 = 0;
    for (int i = 0; i < n; ++i) {
        const auto [z1, z2] =
            detail::sim_pair(preset.coeffs, 0.0, 0.0, t, t / 4.0, rng);
        s1 += z1; s2 += z2; s12 += z1 * z2; q1 += z1 * z1; q2 += z2 * z2;
    }
    const double cov = s12 / n - (s1 / n) * (s2 / n);
    CHECK(std::abs(cov - t) < 4.0 * std::sqrt(2.0 * t * t / n) + 0.01 * t);
    CHECK(std::abs(q1 / n - 2.0 * t) < 0.05);
    CHECK(std::abs(q2 / n - 2.0 * t) < 0.05);
}

TEST_CASE("tracer first moment matches the heat closed form", "[moments]") {
    const ModelPreset preset = make_preset("ZERO_C");
    const double t = 0.25, v0 = 0.25;
    const McEstimate est = first_moment_tracer(
        preset.coeffs, preset.mu, preset.initial.f, t, 0.05, 100'000, 12);
    const double want = std::sqrt(v0 / (v0 + t));
    INFO("est=" << est.value << " want=" << want << " se=" << est.std_err);
    CHECK(std::abs(est.value - want) < 4.0 * est.std_err);
    CHECK(est.std_err < 0.005);
}

TEST_CASE("tracer first moment with drift and shared noise", "[moments]") {
    // Z_t ~ N(b t, 2t), so E f(Z_t) for the gaussian bump has a drift factor.
    const ModelPreset preset = make_preset("CONST:b0=0.5");
    const double t = 0.25, v0 = 0.25, b = 0.5;
    const TestFunction f = gaussian_bump(v0);
    const McEstimate est = first_moment_tracer(
        preset.coeffs, preset.mu, f.f, t, 0.0625, 100'000, 13);
    const double vt = v0 + 2.0 * t;
    const double want = std::sqrt(v0 / vt) * std::exp(-b * t * b * t / (2.0 * vt));
    INFO("est=" << est.value << " want=" << want << " se=" << est.std_err);
    CHECK(std::abs(est.value - want) < 4.0 * est.std_err);
    CHECK(est.std_err < 0.005);
}

TEST_CASE("second moment of the total mass is exact by construction", "[moments]") {
    // With f identically 1 both product terms are 1 and the estimator
    // collapses to mu^2 + 2 t mu deterministically; any miscalibrated
    // branching weight would shift this away from 1 + 2t.
    const ModelPreset preset = make_preset("CONST");
    const double t = 0.25;
    const McEstimate est = second_moment_tracer(
        preset.coeffs, preset.mu, [](double) { return 1.0; }, t, 1e-3, 200, 14);
    CHECK(est.value == Catch::Approx(1.0 + 2.0 * t).margin(1e-12));
    CHECK(est.std_err < 1e-12);
}

TEST_CASE("tracer and duality second moments agree off the trivial case", "[moments]") {
    // c = 0 keeps the duality route deterministic while the tracer route
    // stays a genuine two-term Monte Carlo; agreement pins the branching
    // weight 2 t mu against the companion-field route.
    const ModelPreset preset = make_preset("ZERO_C");
    const double t = 0.25;
    const Grid1D grid = Grid1D::make(-12.0, 12.0, 2400);
    const Field f0 = Field::sample(grid, preset.initial.f);

    const DualityMoments dual = moments_via_duality(
        f0, preset.coeffs, preset.mu, t, 1e-3, 1, 15);
    const McEstimate fk = second_moment_tracer(
        preset.coeffs, preset.mu, preset.initial.f, t, 2.5e-3, 40'000, 16);

    INFO("dual=" << dual.second.value << " tracer=" << fk.value
                 << " se=" << fk.std_err);
    CHECK(std::abs(fk.value - dual.second.value) <
          4.0 * fk.std_err + 0.01 * dual.second.value);

    const McEstimate fk1 = first_moment_tracer(
        preset.coeffs, preset.mu, preset.initial.f, t, 2.5e-3, 40'000, 17);
    CHECK(std::abs(fk1.value - dual.first.value) <
          4.0 * fk1.std_err + 0.005 * dual.first.value);
}

TEST_CASE("moment estimators reject empty sampling plans", "[moments]") {
    const ModelPreset preset = make_preset("CONST");
    const Grid1D grid = Grid1D::make(-12.0, 12.0, 240);
    const Field f0 = Field::sample(grid, preset.initial.f);
    CHECK_THROWS_AS(first_moment_tracer(preset.coeffs, preset.mu,
                                        preset.initial.f, 0.25, 1e-3, 0, 1),
                    ConfigError);
    CHECK_THROWS_AS(moments_via_duality(f0, preset.coeffs, preset.mu, 0.25,
                                        1e-3, 0, 1),
                    ConfigError);
}
