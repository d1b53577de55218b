#include <catch2/catch_amalgamated.hpp>

#include <slle/branching.hpp>

#include <cmath>
#include <vector>

using namespace slle;

namespace {

struct Moments {
    double mean = 0.0, var = 0.0, se_mean = 0.0, se_var = 0.0;
};

Moments sample_moments(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double s1 = 0;
    for (double x : xs) s1 += x;
    const double mean = s1 / n;
    double s2 = 0, s4 = 0;
    for (double x : xs) {
        const double d = x - mean;
        s2 += d * d;
        s4 += d * d * d * d;
    }
    Moments m;
    m.mean = mean;
    m.var = s2 / (n - 1);
    m.se_mean = std::sqrt(m.var / n);
    m.se_var = std::sqrt(std::max(0.0, s4 / n - m.var * m.var) / n);
    return m;
}

}  // namespace

TEST_CASE("offspring law matches its closed form", "[branching]") {
    // lambda dt = 2 gives p0 = 1/2: P(0) = 1/2, P(k) = (1/4) 2^{-(k-1)}.
    const double p0 = detail::offspring_p0(2000.0, 1e-3);
    REQUIRE(p0 == Catch::Approx(0.5).margin(1e-15));

    const int n = 1'000'000;
    Rng rng(31);
    std::vector<int> freq(12, 0);
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const auto z = detail::sample_offspring(p0, rng);
        if (z < freq.size()) ++freq[z];
        s1 += static_cast<double>(z);
        s2 += static_cast<double>(z) * static_cast<double>(z);
    }
    auto expect = [&](std::size_t k) {
        return k == 0 ? p0 : (1.0 - p0) * (1.0 - p0) * std::pow(p0, double(k - 1));
    };
    for (std::size_t k = 0; k <= 5; ++k) {
        const double p = expect(k);
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(freq[k] / double(n) - p) < 4.0 * se);
    }
    // Critical mean and variance lambda dt, exact properties of the law.
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(var - 2.0) < 0.05 * 2.0);
}

TEST_CASE("offspring transitions compose across step doubling", "[branching]") {
    // The law is the time-dt flow of dF/dt = (lambda/2)(1-F)^2, so a
    // generation at dt followed by an independent generation at dt equals one
    // generation at 2 dt in law. Compared through the generating function at
    // s = 1/2, where the 2dt closed form gives 1 - (1/2)/(1 + 2 * 1/2) = 3/4.
    const double lambda = 2000.0, dt = 1e-3;
    const double p_one = detail::offspring_p0(lambda, dt);
    const double p_two = detail::offspring_p0(lambda, 2.0 * dt);
    const double s = 0.5;

    const int n = 1'000'000;
    Rng rng(32);
    double pgf_comp = 0.0, pgf_direct = 0.0;
    for (int i = 0; i < n; ++i) {
        std::size_t total = 0;
        const std::size_t z1 = detail::sample_offspring(p_one, rng);
        for (std::size_t j = 0; j < z1; ++j)
            total += detail::sample_offspring(p_one, rng);
        pgf_comp += std::pow(s, double(total));
        pgf_direct += std::pow(s, double(detail::sample_offspring(p_two, rng)));
    }
    pgf_comp /= n;
    pgf_direct /= n;
    const double theta = 0.5 * lambda * 2.0 * dt;  // = 2
    const double want = 1.0 - (1.0 - s) / (1.0 + theta * (1.0 - s));
    CHECK(want == Catch::Approx(0.75).margin(1e-15));
    CHECK(std::abs(pgf_comp - want) < 2e-3);
    CHECK(std::abs(pgf_direct - want) < 2e-3);
    CHECK(std::abs(pgf_comp - pgf_direct) < 3e-3);
}

TEST_CASE("population init splits the mass evenly", "[branching]") {
    Rng rng(1);
    const PopulationState st =
        init_population(InitialMeasure::point(1.5, 2.0), 500, rng);
    CHECK(st.beta == 0.004);
    CHECK(st.lambda == 500.0);
    CHECK(st.lambda * st.beta == 2.0);
    CHECK(st.mass() == 2.0);
    for (double x : st.positions) CHECK(x == 1.5);
    CHECK_THROWS_AS(init_population(InitialMeasure::point(0.0, 1.0), 0, rng),
                    EmptyMeasure);
}

TEST_CASE("total mass is a martingale with variance 2 mu t", "[branching]") {
    // beta^2 n k lambda dt telescopes to 2 mu t for any particle count and
    // step size; checked here at n = 50 and dt = 2.5e-3.
    const ModelPreset preset = make_preset("CONST");
    BranchingParams bp;
    bp.n_particles = 50;
    const double t = 0.25;
    const int reps = 2000;
    std::vector<double> masses(reps);
    for (int r = 0; r < reps; ++r) {
        const BrownianPath path = sample_path(t, 2.5e-3, derive_seed(900, r));
        masses[r] = run_replica(preset.coeffs, preset.mu,
                                [](double) { return 1.0; }, path, t,
                                derive_seed(901, r), bp).mass;
    }
    const Moments m = sample_moments(masses);
    INFO("mean=" << m.mean << " var=" << m.var << " se_var=" << m.se_var);
    CHECK(std::abs(m.mean - 1.0) < 4.0 * m.se_mean);
    CHECK(std::abs(m.var - 0.5) < 4.0 * m.se_var);
    CHECK(m.se_var < 0.06);  // enough replicas for the check to mean something
}

TEST_CASE("first moment follows the single-particle heat kernel", "[branching]") {
    // E <X_t, f> = <mu, P_t f>: with c = 0, e = 1 the motion is standard
    // brownian, so P_t f(0) for the gaussian bump is sqrt(v/(v+t)).
    const ModelPreset preset = make_preset("ZERO_C");
    BranchingParams bp;
    bp.n_particles = 30;
    const double t = 0.25;
    const int reps = 2000;
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) {
        const BrownianPath path = sample_path(t, 1e-3, derive_seed(910, r));
        vals[r] = run_replica(preset.coeffs, preset.mu, preset.initial.f, path,
                              t, derive_seed(911, r), bp).integral_f;
    }
    const Moments m = sample_moments(vals);
    const double want = std::sqrt(0.25 / (0.25 + t));
    INFO("mean=" << m.mean << " want=" << want << " se=" << m.se_mean);
    CHECK(std::abs(m.mean - want) < 4.0 * m.se_mean);
    CHECK(m.se_mean < 0.02);
}

TEST_CASE("replicas are reproducible and seed-sensitive", "[branching]") {
    const ModelPreset preset = make_preset("CONST");
    const BrownianPath path = sample_path(0.1, 1e-3, 4);
    BranchingParams bp;
    bp.n_particles = 200;
    const auto a = run_replica(preset.coeffs, preset.mu, preset.initial.f, path,
                               0.1, 77, bp);
    const auto b = run_replica(preset.coeffs, preset.mu, preset.initial.f, path,
                               0.1, 77, bp);
    CHECK(a.mass == b.mass);
    CHECK(a.integral_f == b.integral_f);
    CHECK(a.exp_neg == b.exp_neg);
    const auto c = run_replica(preset.coeffs, preset.mu, preset.initial.f, path,
                               0.1, 78, bp);
    CHECK(a.integral_f != c.integral_f);
}

TEST_CASE("vanishing c decouples replicas from the shared path", "[branching]") {
    const ModelPreset preset = make_preset("ZERO_C");
    BranchingParams bp;
    bp.n_particles = 200;
    const auto a = run_replica(preset.coeffs, preset.mu, preset.initial.f,
                               sample_path(0.1, 1e-3, 1), 0.1, 55, bp);
    const auto b = run_replica(preset.coeffs, preset.mu, preset.initial.f,
                               sample_path(0.1, 1e-3, 2), 0.1, 55, bp);
    CHECK(a.mass == b.mass);
    CHECK(a.integral_f == b.integral_f);
}

TEST_CASE("one-step block rate reproduces the exact drive", "[branching]") {
    // With eps = dt the wz drift collapses to the Ito one up to roundoff in
    // (dw/dt)*dt, and the branching stream stays aligned, so the counts agree
    // exactly and positions to ulps.
    const ModelPreset preset = make_preset("CONST");
    const BrownianPath path = sample_path(0.1, 1e-3, 9);
    const WZRate rate = wz_rate(path, 1e-3);
    BranchingParams bp;
    bp.n_particles = 200;
    const auto a = run_replica(preset.coeffs, preset.mu, preset.initial.f, path,
                               0.1, 66, bp);
    const auto b = run_replica_wz(preset.coeffs, preset.mu, preset.initial.f,
                                  rate, 0.1, 66, bp);
    CHECK(a.mass == b.mass);
    CHECK(std::abs(a.integral_f - b.integral_f) < 1e-9);
}

TEST_CASE("excessive branching per step is refused", "[branching]") {
    const ModelPreset preset = make_preset("CONST");
    const BrownianPath path = sample_path(0.1, 1e-3, 4);
    BranchingParams bp;
    bp.n_particles = 10'000;  // lambda dt = 20
    CHECK_THROWS_AS(run_replica(preset.coeffs, preset.mu, preset.initial.f,
                                path, 0.1, 1, bp),
                    ValidationFailed);
}
