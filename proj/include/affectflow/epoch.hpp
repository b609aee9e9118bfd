#pragma once

#include "affectflow/cohort.hpp"
#include "affectflow/sentiment.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace affectflow {

/// Fill `valence` on every window and pool message. Scoring is pure per
/// message, so order never matters.
void score_cohort(Cohort& cohort, const Lexicon& lexicon);

/// Minute offset of a message from its anchor: floor((t - t0) / 60s).
inline int offset_minutes(std::int64_t utc_time, std::int64_t t0) {
    std::int64_t delta = utc_time - t0;
    std::int64_t q = delta / 60;
    if (delta % 60 != 0 && delta < 0) --q;
    return static_cast<int>(q);
}

/// Start offset of the half-open window [k, k+w) containing a minute offset.
inline int window_start(int offset_min, int window_minutes) {
    int q = offset_min / window_minutes;
    if (offset_min % window_minutes != 0 && offset_min < 0) --q;
    return q * window_minutes;
}

/// Per-offset-window aggregates over k in [-span, +span] minutes. Empty
/// windows carry count 0 and a NaN mean (explicitly missing, never zero).
struct WindowSeries {
    Polarity polarity = Polarity::positive;
    int window_minutes = 1;
    int span_minutes = 360;
    std::vector<int> offsets;                 // window start offsets, ascending
    std::vector<double> mean_valence;         // NaN where count == 0
    std::vector<std::int64_t> count;
    std::vector<std::vector<double>> values;  // raw scores, retained for bootstrap

    std::size_t size() const { return offsets.size(); }
    bool defined(std::size_t i) const { return count[i] > 0; }
    int index_of(int offset) const; // -1 when not on the grid
};

/// Aggregate a scored cohort into contiguous windows. Anchor messages were
/// already excluded when the cohort was built. window_minutes in {1,5,10,15}.
WindowSeries window_series(const Cohort& cohort, int window_minutes, int span_minutes = 360);

/// A derived per-window value series on the same offset grid (NaN = missing).
struct ValueSeries {
    std::vector<int> offsets;
    std::vector<double> values;
};

/// Centered moving average over the defined windows in [k-ceil(s/2), k+s-1-ceil(s/2)];
/// missing windows are skipped (edge-corrected divisor). span >= 1.
ValueSeries rolling_mean(const WindowSeries& series, int span_minutes = 10);
ValueSeries rolling_mean(const ValueSeries& series, int span_minutes = 10);

/// Per-subject standardized series: z over the subject's defined windows.
struct SubjectZSeries {
    std::string subject_id;
    std::vector<int> offsets; // defined windows only
    std::vector<double> z;
};

/// Standardize one subject's 1-minute series by its own mean and sample
/// (n-1) standard deviation. Returns nullopt when fewer than two scored
/// messages or the deviation is zero (degenerate series are excluded, not
/// emitted).
std::optional<SubjectZSeries> subject_z(const AnchoredTimeline& timeline, int window_minutes = 1,
                                        int span_minutes = 360);

struct PeakValue {
    std::string subject_id;
    double peak_z = 0.0;
};

struct PeakExtraction {
    std::vector<PeakValue> peaks;
    std::size_t omitted_no_messages = 0; // nothing inside the span
    std::size_t omitted_degenerate = 0;  // sigma == 0 or < 2 values
};

/// Extreme standardized valence per subject inside [span_start, span_end]
/// (minute offsets, inclusive): the minimum z for a negative cohort, the
/// maximum for a positive one.
PeakExtraction peak_values(const Cohort& cohort, int span_start, int span_end);

} // namespace affectflow
