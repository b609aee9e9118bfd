#pragma once

#include "affectflow/changepoint.hpp"
#include "affectflow/cohort.hpp"
#include "affectflow/config.hpp"
#include "affectflow/fitting.hpp"
#include "affectflow/ingest.hpp"
#include "affectflow/json_io.hpp"
#include "affectflow/mixture.hpp"
#include "affectflow/nullmodel.hpp"
#include "affectflow/rdd.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace affectflow {

/// Everything one `affectflow run` needs; loaded from a run.toml file.
struct RunConfig {
    std::vector<std::string> input_paths; // JSONL corpus files (globs expanded)
    std::string lexicon_path;
    std::string output_dir = "out";

    PatternConfig pattern = PatternConfig::defaults();
    FilterConfig filters;

    int window_minutes = 1;
    int ci_window_minutes = 10;
    int smooth_minutes = 10;
    double cusum_threshold = 0.01;
    int cusum_min_run = 40;
    bool cusum_on_raw = false; // run CUSUM on the unsmoothed means instead
    int baseline_hours = 3;
    int replicates = 10000;
    std::uint64_t seed = 42;
    bool keep_values = false;
    bool gender_analysis = true;
    bool null_include_analysis_window = true;
    int gmm_kmax = 5;
    int gmm_restarts = 10;

    std::vector<std::string> stages; // empty = full pipeline

    static RunConfig from_file(const std::string& path);
};

/// All derived results for one polarity.
struct PolarityResults {
    WindowSeries fine;      // window_minutes grid, raw values retained
    ValueSeries smoothed;
    WindowSeries coarse;    // ci_window_minutes grid
    std::pair<double, double> baseline{0.0, 0.0};

    CusumParams cusum_params;
    BootstrapResult observed_ci, null_ci;
    ChangeReport cusum_report, ci_report, median_report;
    std::optional<DurationEstimate> duration;
    bool significant = false; // CUSUM or CI divergence found a t0-covering span

    std::optional<FitResult> fit_up, fit_down; // exponentials on the CUSUM span
    std::vector<RankedModel> ranking;          // all families, ascending SSE
    std::optional<HalfLife> half_life;

    PeakExtraction peaks;
    std::optional<KSelection> gmm;
    std::optional<double> contrary;
};

struct ResultBundle {
    IngestReport ingest;
    ScanReport scan;
    FilterReport filters;
    std::optional<PolarityResults> positive, negative;
    std::vector<GenderSpanRow> gender_spans;
    std::optional<RddResult> rdd_positive, rdd_negative;
    std::vector<std::string> completed_stages;
    std::vector<std::string> skipped; // stage: reason
};

/// Execute the pipeline stages in order, persisting every artifact under
/// config.output_dir. Any stage failure rethrows with the stage name; the
/// manifest still records which stages completed.
ResultBundle run_pipeline(const RunConfig& config);

/// CSV rendition of one result table: "fits", "durations" or "gender_spans".
std::string emit_table(const ResultBundle& bundle, const std::string& which);

// Artifact (de)serialization, shared by the pipeline and the CLI stages.
ordered_json series_to_json(const WindowSeries& s, bool keep_values);
WindowSeries series_from_json(const ordered_json& j);
ordered_json value_series_to_json(const ValueSeries& s);
ValueSeries value_series_from_json(const ordered_json& j);
ordered_json bootstrap_to_json(const BootstrapResult& b);
BootstrapResult bootstrap_from_json(const ordered_json& j);
ordered_json change_report_to_json(const ChangeReport& r);
ChangeReport change_report_from_json(const ordered_json& j);
ordered_json duration_to_json(const DurationEstimate& d);
ordered_json fit_to_json(const FitResult& f);
FitResult fit_from_json(const ordered_json& j);
ordered_json gmm_to_json(const GmmResult& g);
ordered_json rdd_to_json(const RddResult& r);

void write_json_file(const ordered_json& j, const std::string& path);
ordered_json read_json_file(const std::string& path);

/// Expand a shell-style glob (\* in the final path component) into sorted
/// paths; a plain path passes through.
std::vector<std::string> expand_glob(const std::string& pattern);

} // namespace affectflow
