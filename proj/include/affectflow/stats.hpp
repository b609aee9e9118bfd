#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace affectflow {

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
/// `sorted` must be ascending and non-empty, p in [0, 100].
inline double percentile_nearest_rank(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
    auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

inline double percentile_nearest_rank_unsorted(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return percentile_nearest_rank(values, p);
}

/// Standard median: middle element, or mean of the two middles for even n.
inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

/// Sample standard deviation (n-1 denominator).
inline double sample_stdev(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("stdev needs >= 2 values");
    double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

/// Population standard deviation (n denominator).
inline double population_stdev(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("stdev of empty sample");
    double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

/// Round half away from zero to the nearest integer.
inline long round_half_away(double x) { return std::lround(x); }

} // namespace affectflow
