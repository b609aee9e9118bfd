#include "affectflow/changepoint.hpp"

#include "affectflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace affectflow {

const char* to_string(ChangeMethod m) {
    switch (m) {
        case ChangeMethod::cusum: return "cusum";
        case ChangeMethod::ci_divergence: return "ci_divergence";
        default: return "median_excursion";
    }
}

std::optional<Interval> ChangeReport::covering(int k) const {
    for (const auto& iv : intervals)
        if (iv.covers(k)) return iv;
    return std::nullopt;
}

namespace {

struct Trimmed {
    std::size_t first = 0; // index into the original series
    std::vector<double> x;
    std::vector<int> offsets;
    int step = 1;
};

Trimmed trim(const ValueSeries& series) {
    Trimmed t;
    std::size_t n = series.values.size();
    std::size_t a = 0, b = n;
    while (a < b && std::isnan(series.values[a])) ++a;
    while (b > a && std::isnan(series.values[b - 1])) --b;
    for (std::size_t i = a; i < b; ++i)
        if (std::isnan(series.values[i]))
            throw std::invalid_argument("series has interior missing windows");
    t.first = a;
    t.x.assign(series.values.begin() + a, series.values.begin() + b);
    t.offsets.assign(series.offsets.begin() + a, series.offsets.begin() + b);
    if (t.offsets.size() >= 2) t.step = t.offsets[1] - t.offsets[0];
    return t;
}

} // namespace

ChangeReport cusum(const ValueSeries& series, const CusumParams& params, CusumTrace* trace) {
    ChangeReport report;
    report.method = ChangeMethod::cusum;
    Trimmed t = trim(series);
    const std::size_t n = t.x.size();
    if (trace) {
        trace->upper.assign(n, 0.0);
        trace->lower.assign(n, 0.0);
    }
    if (static_cast<int>(n) * t.step <= params.min_run_minutes) return report;

    std::vector<double> up(n), dn(n);
    double su = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        su = std::max(0.0, su + t.x[i] - (params.reference_mean + params.allowance));
        sl = std::min(0.0, sl + t.x[i] - (params.reference_mean - params.allowance));
        up[i] = su;
        dn[i] = sl;
    }
    if (trace) {
        trace->upper = up;
        trace->lower = dn;
    }

    // A run: consecutive violating indices with monotone control values.
    auto collect = [&](auto violates, auto keeps_monotone, const std::vector<double>& s) {
        std::size_t i = 0;
        while (i < n) {
            if (!violates(s[i])) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < n && violates(s[j + 1]) && keeps_monotone(s[j], s[j + 1])) ++j;
            int duration = t.offsets[j] - t.offsets[i] + 1;
            if (duration > params.min_run_minutes)
                report.intervals.push_back(Interval{t.offsets[i], t.offsets[j], duration});
            i = j + 1;
        }
    };
    collect([&](double v) { return v > params.threshold; },
            [](double a, double b) { return b >= a; }, up);
    collect([&](double v) { return v < -params.threshold; },
            [](double a, double b) { return b <= a; }, dn);

    std::sort(report.intervals.begin(), report.intervals.end(),
              [](const Interval& a, const Interval& b) { return a.start_k < b.start_k; });
    return report;
}

std::pair<double, double> baseline_ci(const ValueSeries& series, int baseline_hours) {
    if (series.offsets.empty()) throw std::invalid_argument("empty series");
    const int first = series.offsets.front();
    const int cutoff = first + baseline_hours * 60; // [first, first + 3h)
    std::vector<double> vals;
    for (std::size_t i = 0; i < series.offsets.size(); ++i) {
        if (series.offsets[i] >= cutoff) break;
        if (!std::isnan(series.values[i])) vals.push_back(series.values[i]);
    }
    if (vals.size() < 2)
        throw std::invalid_argument("insufficient data in the baseline window");
    std::sort(vals.begin(), vals.end());
    return {percentile_nearest_rank(vals, 2.5), percentile_nearest_rank(vals, 97.5)};
}

ChangeReport median_excursion(const ValueSeries& series, Polarity polarity) {
    ChangeReport report;
    report.method = ChangeMethod::median_excursion;

    std::vector<double> defined;
    for (double v : series.values)
        if (!std::isnan(v)) defined.push_back(v);
    if (defined.empty()) throw std::invalid_argument("empty series");
    const double q2 = median(defined);

    int step = series.offsets.size() >= 2 ? series.offsets[1] - series.offsets[0] : 1;
    // Window containing k = 0.
    std::size_t zero = series.offsets.size();
    for (std::size_t i = 0; i < series.offsets.size(); ++i) {
        if (series.offsets[i] <= 0 && 0 < series.offsets[i] + step) {
            zero = i;
            break;
        }
    }
    if (zero == series.offsets.size()) throw std::invalid_argument("series does not cover t0");

    auto beyond = [&](std::size_t i) {
        double v = series.values[i];
        if (std::isnan(v)) return false;
        return polarity == Polarity::positive ? v > q2 : v < q2;
    };
    if (!beyond(zero)) {
        report.notes.push_back("value at t0 is not beyond the series median");
        return report;
    }
    std::size_t lo = zero, hi = zero;
    while (lo > 0 && beyond(lo - 1)) --lo;
    while (hi + 1 < series.values.size() && beyond(hi + 1)) ++hi;
    int duration = series.offsets[hi] - series.offsets[lo] + 1;
    report.intervals.push_back(Interval{series.offsets[lo], series.offsets[hi], duration});
    return report;
}

DurationEstimate estimate_duration(const std::vector<ChangeReport>& reports) {
    DurationEstimate est;
    double start_sum = 0.0, end_sum = 0.0;
    int used = 0;
    for (const auto& r : reports) {
        auto iv = r.covering(0);
        if (!iv) {
            est.excluded_methods.push_back(to_string(r.method));
            continue;
        }
        est.per_method[to_string(r.method)] = *iv;
        start_sum += iv->start_k;
        end_sum += iv->end_k;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("no method produced a t0-covering interval");
    est.average_start = static_cast<int>(round_half_away(start_sum / used));
    est.average_end = static_cast<int>(round_half_away(end_sum / used));
    est.average_duration = est.average_end - est.average_start + 1;
    return est;
}

} // namespace affectflow
