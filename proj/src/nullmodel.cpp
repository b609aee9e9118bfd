#include "affectflow/nullmodel.hpp"

#include "affectflow/rng.hpp"
#include "affectflow/stats.hpp"
#include "affectflow/timeutil.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace affectflow {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kNullStream = 0x6e756c6cULL; // "null"
} // namespace

StratumKey StratumKey::of_local_time(std::int64_t local_epoch_seconds) {
    return StratumKey{weekday_of(local_epoch_seconds), hour_of(local_epoch_seconds)};
}

NullSample build_null(const Cohort& cohort, const WindowSeries& observed, std::uint64_t seed,
                      bool include_analysis_window) {
    if (cohort.timelines.empty()) throw std::invalid_argument("cohort is empty");

    // Candidate pools keyed by stratum, plus weekday-level and global fallbacks.
    std::array<std::vector<double>, 168> by_stratum;
    std::array<std::vector<double>, 7> by_weekday;
    std::vector<double> all;
    auto add_candidate = [&](const Message& m) {
        if (!m.valence) throw std::runtime_error("cohort is not scored (message " + m.message_id + ")");
        StratumKey key = StratumKey::of_local_time(m.local_time());
        by_stratum[key.index()].push_back(*m.valence);
        by_weekday[key.weekday].push_back(*m.valence);
        all.push_back(*m.valence);
    };
    for (const auto& tl : cohort.timelines) {
        if (include_analysis_window)
            for (const auto& m : tl.messages) add_candidate(m);
        for (const auto& m : tl.pool_outer) add_candidate(m);
    }
    if (all.empty()) throw std::invalid_argument("null-model candidate pool is empty");

    // Strata of the observed messages, per window, mirroring window_series.
    NullSample ns;
    ns.offsets = observed.offsets;
    const std::size_t n = observed.offsets.size();
    std::vector<std::vector<int>> observed_strata(n);
    const std::int64_t span_s = static_cast<std::int64_t>(observed.span_minutes) * 60;
    for (const auto& tl : cohort.timelines) {
        for (const auto& m : tl.messages) {
            std::int64_t delta = m.utc_time - tl.anchor.t0;
            if (delta < -span_s || delta > span_s) continue;
            int k = window_start(offset_minutes(m.utc_time, tl.anchor.t0), observed.window_minutes);
            int idx = (k + observed.span_minutes) / observed.window_minutes;
            observed_strata[static_cast<std::size_t>(idx)].push_back(
                StratumKey::of_local_time(m.local_time()).index());
        }
    }

    ns.values.resize(n);
    ns.strata.resize(n);
    for (std::size_t w = 0; w < n; ++w) {
        if (observed_strata[w].size() != static_cast<std::size_t>(observed.count[w]))
            throw std::runtime_error("window series does not match the cohort it came from");
        Rng rng = Rng::stream(seed, kNullStream, w);
        ns.values[w].reserve(observed_strata[w].size());
        ns.strata[w].reserve(observed_strata[w].size());
        for (int stratum : observed_strata[w]) {
            const std::vector<double>* pool = &by_stratum[static_cast<std::size_t>(stratum)];
            if (pool->empty()) {
                pool = &by_weekday[static_cast<std::size_t>(stratum / 24)];
                ++ns.fallback_weekday;
                if (pool->empty()) {
                    pool = &all;
                    ++ns.fallback_any;
                }
            }
            ns.values[w].push_back((*pool)[rng.uniform_index(pool->size())]);
            ns.strata[w].push_back(stratum);
        }
    }
    return ns;
}

ValueSeries NullSample::mean_series() const {
    ValueSeries s;
    s.offsets = offsets;
    s.values.assign(offsets.size(), kNaN);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].empty()) continue;
        double sum = 0.0;
        for (double v : values[i]) sum += v;
        s.values[i] = sum / static_cast<double>(values[i].size());
    }
    return s;
}

CusumParams cusum_reference(const NullSample& null_sample, int smooth_minutes, double threshold,
                            int min_run_minutes) {
    ValueSeries means = null_sample.mean_series();
    ValueSeries smoothed = smooth_minutes > 1 ? rolling_mean(means, smooth_minutes) : means;
    std::vector<double> defined;
    for (double v : smoothed.values)
        if (!std::isnan(v)) defined.push_back(v);
    if (defined.size() < 2) throw std::invalid_argument("null series too sparse for CUSUM reference");
    CusumParams p;
    p.reference_mean = mean(defined);
    p.allowance = sample_stdev(defined);
    p.threshold = threshold;
    p.min_run_minutes = min_run_minutes;
    return p;
}

BootstrapCi bootstrap_ci(std::span<const double> values, int replicates, std::uint64_t seed,
                         std::uint64_t stream_tag) {
    if (values.empty()) throw std::invalid_argument("bootstrap of an empty sample");
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    const std::size_t n = values.size();
    std::vector<double> means(static_cast<std::size_t>(replicates));
    for (int r = 0; r < replicates; ++r) {
        Rng rng = Rng::stream(seed, stream_tag, static_cast<std::uint64_t>(r) + 1);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += values[rng.uniform_index(n)];
        means[static_cast<std::size_t>(r)] = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    return BootstrapCi{percentile_nearest_rank(means, 5.0), percentile_nearest_rank(means, 50.0),
                       percentile_nearest_rank(means, 95.0)};
}

BootstrapResult bootstrap_series(const std::vector<int>& offsets,
                                 const std::vector<std::vector<double>>& per_window_values,
                                 int replicates, std::uint64_t seed) {
    BootstrapResult out;
    out.offsets = offsets;
    out.replicate_count = replicates;
    out.seed = seed;
    const std::size_t n = offsets.size();
    out.p5.assign(n, kNaN);
    out.p50.assign(n, kNaN);
    out.p95.assign(n, kNaN);
    for (std::size_t w = 0; w < n; ++w) {
        if (per_window_values[w].empty()) continue;
        BootstrapCi ci = bootstrap_ci(per_window_values[w], replicates, seed, w);
        out.p5[w] = ci.p5;
        out.p50[w] = ci.p50;
        out.p95[w] = ci.p95;
    }
    return out;
}

BootstrapResult bootstrap_series(const WindowSeries& series, int replicates, std::uint64_t seed) {
    return bootstrap_series(series.offsets, series.values, replicates, seed);
}

BootstrapResult bootstrap_series(const NullSample& null_sample, int replicates, std::uint64_t seed) {
    return bootstrap_series(null_sample.offsets, null_sample.values, replicates, seed);
}

ChangeReport ci_divergence(const BootstrapResult& observed, const BootstrapResult& null_model) {
    if (observed.offsets != null_model.offsets)
        throw std::invalid_argument("observed and null results are on different window grids");
    ChangeReport report;
    report.method = ChangeMethod::ci_divergence;
    const std::size_t n = observed.offsets.size();

    auto diverges = [&](std::size_t i) {
        if (std::isnan(observed.p5[i]) || std::isnan(null_model.p5[i])) return false;
        return observed.p5[i] > null_model.p95[i] || observed.p95[i] < null_model.p5[i];
    };
    std::size_t i = 0;
    while (i < n) {
        if (!diverges(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && diverges(j + 1)) ++j;
        int duration = observed.offsets[j] - observed.offsets[i] + 1;
        report.intervals.push_back(Interval{observed.offsets[i], observed.offsets[j], duration});
        i = j + 1;
    }
    return report;
}

} // namespace affectflow
