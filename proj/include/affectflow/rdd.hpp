#pragma once

#include "affectflow/changepoint.hpp"
#include "affectflow/epoch.hpp"
#include "affectflow/nullmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace affectflow {

/// Ordinary least squares line with homoscedastic-normal standard errors.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0; // value at t = 0
    double slope_se = 0.0;
    double intercept_se = 0.0; // standard error of the prediction at t = 0
    double t_critical = 0.0;   // 95% two-sided quantile, df = n - 2
    int n = 0;

    double predict(double t) const { return intercept + slope * t; }
    double slope_ci_half() const { return t_critical * slope_se; }
    double intercept_ci_half() const { return t_critical * intercept_se; }
};

/// Regression discontinuity at t0: separate lines before/after, and the jump
/// between their predictions at t0.
struct RddResult {
    LineFit pre;  // k < t0
    LineFit post; // k >= t0
    double gap = 0.0;    // post.predict(t0) - pre.predict(t0)
    double gap_se = 0.0;
    double gap_ci_half = 0.0; // 95%, df = n_pre + n_post - 4
    bool ci_overlap = false;  // prediction CIs at t0 overlap
};

/// Male-minus-female mean valence per window; missing propagates.
ValueSeries difference_series(const WindowSeries& male, const WindowSeries& female);

/// Fit the two regression lines to a difference series. Needs >= 3 defined
/// windows per side; throws when a side's offsets are degenerate.
RddResult rdd_fit(const ValueSeries& diff, int t0 = 0);

/// One row of the gender-stratified change table.
struct GenderSpanRow {
    std::string label; // "Female+", "Male+", "Female-", "Male-"
    std::optional<Interval> ci_span;    // 95% CI divergence at 10-minute windows
    std::optional<Interval> cusum_span; // CUSUM at 1-minute windows
    std::size_t timelines = 0;
};

struct GenderSpanParams {
    int smooth_minutes = 10;
    double cusum_threshold = 0.01;
    int cusum_min_run = 40;
    int ci_window_minutes = 10;
    int replicates = 10000;
    std::uint64_t seed = 42;
};

/// CUSUM and CI-divergence spans for each gender x polarity cell. Subjects
/// with an unknown gender label are excluded here (they stay in the pooled
/// analyses).
std::vector<GenderSpanRow> gender_change_spans(const Cohort& positive, const Cohort& negative,
                                               const GenderSpanParams& params);

} // namespace affectflow
