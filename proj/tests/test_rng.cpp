#include <catch2/catch_amalgamated.hpp>

#include <slle/rng.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

using slle::Rng;
using slle::derive_seed;

TEST_CASE("same seed reproduces the stream bit for bit", "[rng]") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    Rng c(12345), d(54321);
    bool all_equal = true;
    for (int i = 0; i < 64; ++i) {
        if (c.next_u64() != d.next_u64()) all_equal = false;
    }
    REQUIRE_FALSE(all_equal);
}

TEST_CASE("derived seeds separate on either word", "[rng]") {
    const std::uint64_t parent = 99;
    REQUIRE(derive_seed(parent, 0, 0) != derive_seed(parent, 1, 0));
    REQUIRE(derive_seed(parent, 0, 0) != derive_seed(parent, 0, 1));
    REQUIRE(derive_seed(parent, 3, 7) != derive_seed(parent, 7, 3));
    REQUIRE(derive_seed(parent, 3, 7) == derive_seed(parent, 3, 7));
    REQUIRE(derive_seed(1, 3, 7) != derive_seed(2, 3, 7));
}

TEST_CASE("uniform draws live strictly inside (0,1) with the right mean", "[rng]") {
    const int n = 1'000'000;
    Rng rng(2024);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        sum += u;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    REQUIRE(lo > 0.0);
    REQUIRE(hi < 1.0);
    // SE of the mean is sqrt(1/12/n) ~ 2.9e-4; allow four of them.
    REQUIRE(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("gaussian moments up to kurtosis", "[rng]") {
    const int n = 1'000'000;
    Rng rng(7);
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        double g = rng.gauss();
        s1 += g;
        s2 += g * g;
        s3 += g * g * g;
        s4 += g * g * g * g;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double skew = (s3 / n - 3 * mean * var - mean * mean * mean) / std::pow(var, 1.5);
    const double kurt = s4 / n / (var * var);

    REQUIRE(std::abs(mean) < 4.0 / std::sqrt(double(n)));        // SE = 1/sqrt(n)
    REQUIRE(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));     // SE = sqrt(2/n)
    REQUIRE(std::abs(skew) < 0.05);
    REQUIRE(std::abs(kurt - 3.0) < 0.1);
}

TEST_CASE("streams from sibling derived seeds decorrelate", "[rng]") {
    const int n = 100'000;
    Rng a(derive_seed(42, 1)), b(derive_seed(42, 2));
    double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
        double x = a.gauss(), y = b.gauss();
        sa += x; sb += y; sab += x * y; saa += x * x; sbb += y * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double rho = cov / std::sqrt((saa / n - sa / n * (sa / n)) * (sbb / n - sb / n * (sb / n)));
    REQUIRE(std::abs(rho) < 4.0 / std::sqrt(double(n)));
}
