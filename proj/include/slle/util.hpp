#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace slle {

inline double mean(std::span<const double> xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

/// Unbiased sample variance (n-1 denominator); 0 for fewer than two samples.
inline double sample_variance(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(n - 1);
}

/// Standard error of the sample mean.
inline double standard_error(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

/// Shortest decimal form that round-trips a double (17 significant digits).
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Runs fn(i) for i in [0, n). With more than one worker the index range is
/// split into contiguous chunks, one thread per chunk. Callers that need
/// deterministic output must write results into per-index slots; reductions
/// over those slots are then independent of the schedule.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::thread::hardware_concurrency();
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace slle
