#pragma once

#include "affectflow/message.hpp"
#include "affectflow/pattern.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace affectflow {

/// Thresholds for the timeline filters. Percentiles use the nearest-rank
/// method; a value is removed only when strictly beyond the cutoff.
struct FilterConfig {
    double outlier_percentile = 95.0;   // subjects above this label-fraction percentile
    double day_low_percentile = 5.0;    // unusual-day bounds on daily label counts
    double day_high_percentile = 95.0;
    int exclusion_window_hours = 24;    // no second anchor within +-24h
    int analysis_window_minutes = 360;  // +-6h epoch window
    int null_pool_hours = 24;           // +-24h null-model candidate pool

    static FilterConfig from_config(const class Config& cfg);
};

struct ScanReport {
    std::size_t messages_seen = 0;
    std::size_t reposts_skipped = 0;
    std::size_t ambiguous_dropped = 0; // matched both polarities; dropped, not guessed
    std::size_t labels_found = 0;
};

/// One subject's +-6h message window around a detected affect statement.
struct AnchoredTimeline {
    std::string subject_id;
    AffectLabel anchor;
    Gender gender_label = Gender::unknown;
    std::optional<int> tz_offset_minutes;
    std::vector<Message> messages;   // within +-analysis_window, anchor excluded
    std::vector<Message> pool_outer; // within +-null_pool_hours but outside +-analysis_window
};

struct Cohort {
    Polarity polarity = Polarity::positive;
    std::vector<AnchoredTimeline> timelines;
};

/// Removal counts per filter, keyed by the filter's position in the
/// documented order. Filters are applied as 1, 2, 5, 3, 4, 6 (day bucketing
/// needs timezone info, so the timezone filter runs before the day filter);
/// counts are reported against that applied order.
struct FilterReport {
    std::size_t input_subjects = 0;
    std::size_t input_messages = 0;
    std::size_t input_labels = 0;

    std::size_t f1_repost_messages = 0;       // (1) repost messages excluded
    std::size_t f2_outlier_subjects = 0;      // (2) subjects above the label-fraction cutoff
    std::size_t f2_anchors_removed = 0;
    std::size_t f5_no_timezone_subjects = 0;  // (5) subjects without tz offset
    std::size_t f5_anchors_removed = 0;
    std::size_t f3_unusual_day_anchors = 0;   // (3) anchors on unusual days
    std::size_t f4_prefix_messages = 0;       // (4) residual-prefix messages stripped
    std::size_t f6_crowded_anchors = 0;       // (6) anchors within +-24h of another

    std::size_t surviving_anchors = 0;
    std::size_t positive_timelines = 0;
    std::size_t negative_timelines = 0;

    std::vector<std::string> applied_order{"1_reposts", "2_outlier_subjects", "5_no_timezone",
                                           "3_unusual_days", "4_residual_prefix", "6_crowded_anchors"};
};

/// Find every affect statement in non-repost messages.
std::vector<std::pair<std::string, AffectLabel>> scan_corpus(const Corpus& corpus,
                                                             const AffectDetector& detector,
                                                             ScanReport& report);

/// Apply the six timeline filters in the documented order and materialize
/// positive/negative cohorts. Running the result through the filters again
/// changes nothing (idempotent).
void build_cohorts(const Corpus& corpus,
                   const std::vector<std::pair<std::string, AffectLabel>>& labels,
                   const AffectDetector& detector, const FilterConfig& fcfg, Cohort& positive,
                   Cohort& negative, FilterReport& report);

/// Post-hoc re-check of the six filter predicates on a built timeline.
/// Returns an empty vector when all pass, else the violated filter names.
std::vector<std::string> check_filter_invariants(const Cohort& cohort,
                                                 const AffectDetector& detector,
                                                 const FilterConfig& fcfg);

void save_cohorts(const Cohort& positive, const Cohort& negative, const FilterReport& report,
                  const std::string& path);
void load_cohorts(const std::string& path, Cohort& positive, Cohort& negative,
                  FilterReport& report);

} // namespace affectflow
