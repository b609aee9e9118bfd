#pragma once

#include "affectflow/epoch.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace affectflow {

/// Reference statistics for the CUSUM recursions, taken from the null-model
/// mean series, plus the violation threshold and minimum anomaly length.
struct CusumParams {
    double reference_mean = 0.0; // T: null-model series mean
    double allowance = 0.0;      // K: null-model series standard deviation
    double threshold = 0.01;     // H
    int min_run_minutes = 40;    // lambda: anomalies must be longer than this
};

enum class ChangeMethod { cusum, ci_divergence, median_excursion };
const char* to_string(ChangeMethod m);

/// Inclusive window-start offsets; duration counts offsets, end - start + 1.
struct Interval {
    int start_k = 0;
    int end_k = 0;
    int duration_minutes = 0;

    bool covers(int k) const { return start_k <= k && k <= end_k; }
};

struct ChangeReport {
    ChangeMethod method = ChangeMethod::cusum;
    std::vector<Interval> intervals; // sorted, non-overlapping
    std::vector<std::string> notes;

    std::optional<Interval> covering(int k = 0) const;
};

/// Control-limit series, exposed for oracle tests and plots.
struct CusumTrace {
    std::vector<double> upper; // S+
    std::vector<double> lower; // S-
};

/// CUSUM anomaly detection on a contiguous series (leading/trailing missing
/// windows are trimmed; interior gaps are an error). Upper violations are
/// S+ > H, lower violations S- < -H; an anomaly is a maximal run of
/// consecutive violations with monotone control values (ties allowed), kept
/// only when longer than min_run_minutes.
ChangeReport cusum(const ValueSeries& series, const CusumParams& params,
                   CusumTrace* trace = nullptr);

/// 2.5th/97.5th percentiles of the defined values in the first
/// `baseline_hours` of the series.
std::pair<double, double> baseline_ci(const ValueSeries& series, int baseline_hours = 3);

/// Maximal interval around k=0 where the series stays strictly above
/// (positive) or below (negative) its own median.
ChangeReport median_excursion(const ValueSeries& series, Polarity polarity);

struct DurationEstimate {
    std::map<std::string, Interval> per_method; // method name -> t0-covering span
    std::vector<std::string> excluded_methods;  // no t0-covering interval
    int average_start = 0;
    int average_end = 0;
    int average_duration = 0;
};

/// Average the t0-covering spans of the per-method reports: arithmetic mean
/// of starts and of ends, rounded half away from zero; duration counts
/// offsets inclusively. Methods without a covering span are excluded and
/// flagged.
DurationEstimate estimate_duration(const std::vector<ChangeReport>& reports);

} // namespace affectflow
