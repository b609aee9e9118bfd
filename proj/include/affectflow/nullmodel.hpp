#pragma once

#include "affectflow/changepoint.hpp"
#include "affectflow/epoch.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace affectflow {

/// (weekday, local hour) cell used to stratify null draws.
struct StratumKey {
    int weekday = 0;    // 0 = Monday .. 6 = Sunday
    int local_hour = 0; // 0..23

    static StratumKey of_local_time(std::int64_t local_epoch_seconds);
    int index() const { return weekday * 24 + local_hour; }
};

/// Stratified random resample: per window, the same number of scores as
/// observed, drawn with replacement from the cohort's own +-24h pools with
/// matching (weekday, hour) strata.
struct NullSample {
    std::vector<int> offsets;
    std::vector<std::vector<double>> values;        // |values[i]| == observed count
    std::vector<std::vector<int>> strata;           // stratum index per draw (diagnostics)
    std::size_t fallback_weekday = 0;               // empty cell -> same weekday, any hour
    std::size_t fallback_any = 0;                   // -> whole pool

    /// Per-window mean of the null draws (NaN where the window is empty).
    ValueSeries mean_series() const;
};

/// Build the null sample for an observed window series. The candidate pool
/// spans +-null_pool_hours of each anchor; `include_analysis_window` keeps the
/// +-6h window itself in the pool (the default), a sensitivity flag drops it.
NullSample build_null(const Cohort& cohort, const WindowSeries& observed, std::uint64_t seed,
                      bool include_analysis_window = true);

/// CUSUM reference statistics from the null sample: T and K are the mean and
/// standard deviation of the (smoothed) null-model mean series.
CusumParams cusum_reference(const NullSample& null_sample, int smooth_minutes, double threshold,
                            int min_run_minutes);

struct BootstrapCi {
    double p5 = 0.0;
    double p50 = 0.0;
    double p95 = 0.0;
};

/// Percentiles (nearest-rank 5/50/95) of `replicates` resampled means of
/// `values`. Substreams are keyed by (seed, stream_tag, replicate), so
/// replicate r of window w reproduces independently of scheduling.
BootstrapCi bootstrap_ci(std::span<const double> values, int replicates, std::uint64_t seed,
                         std::uint64_t stream_tag = 0);

/// Per-window bootstrap percentiles for a series of value samples.
struct BootstrapResult {
    std::vector<int> offsets;
    std::vector<double> p5, p50, p95; // NaN where the window has no values
    int replicate_count = 0;
    std::uint64_t seed = 0;
};

BootstrapResult bootstrap_series(const std::vector<int>& offsets,
                                 const std::vector<std::vector<double>>& per_window_values,
                                 int replicates, std::uint64_t seed);
BootstrapResult bootstrap_series(const WindowSeries& series, int replicates, std::uint64_t seed);
BootstrapResult bootstrap_series(const NullSample& null_sample, int replicates, std::uint64_t seed);

/// Windows where the observed [p5, p95] band and the null band do not
/// overlap, merged into consecutive runs.
ChangeReport ci_divergence(const BootstrapResult& observed, const BootstrapResult& null_model);

} // namespace affectflow
