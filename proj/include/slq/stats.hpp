#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace slq {

/// Pairwise (tree) summation: fixed order, O(log n) rounding growth.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(count)
    std::size_t count = 0;
};

inline SampleStats sample_stats(std::span<const double> x) {
    SampleStats s;
    s.count = x.size();
    if (x.empty()) return s;
    const double n = static_cast<double>(x.size());
    s.mean = pairwise_sum(x) / n;
    if (x.size() < 2) return s;
    // Two-pass variance, compensated summation.
    double sq = 0.0;
    double comp = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        const double y = d * d - comp;
        const double t = sq + y;
        comp = (t - sq) - y;
        sq = t;
    }
    s.std_error = std::sqrt(sq / (n - 1.0) / n);
    return s;
}

}  // namespace slq
