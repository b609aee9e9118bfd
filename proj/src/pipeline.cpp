#include "affectflow/pipeline.hpp"

#include "affectflow/rng.hpp"
#include "affectflow/stats.hpp"
#include "affectflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace affectflow {

namespace fs = std::filesystem;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kSchemaVersion = 1;

double json_num(const ordered_json& j) { return j.is_null() ? kNaN : j.get<double>(); }

ordered_json num_json(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

std::vector<double> num_array(const ordered_json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(json_num(v));
    return out;
}

ordered_json array_json(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(num_json(x));
    return a;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng::stream(seed, a, b).next_u64();
}

} // namespace

std::vector<std::string> expand_glob(const std::string& pattern) {
    fs::path p(pattern);
    if (pattern.find('*') == std::string::npos && pattern.find('?') == std::string::npos)
        return {pattern};
    fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    std::string name = p.filename().string();
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string fname = entry.path().filename().string();
        if (fnmatch(name.c_str(), fname.c_str(), 0) == 0) out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_json_file(const ordered_json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return ordered_json::parse(in);
}

// ---------------------------------------------------------------------------
// Artifact serialization
// ---------------------------------------------------------------------------

ordered_json series_to_json(const WindowSeries& s, bool keep_values) {
    ordered_json j;
    j["polarity"] = to_string(s.polarity);
    j["window_minutes"] = s.window_minutes;
    j["span_minutes"] = s.span_minutes;
    j["offsets"] = s.offsets;
    j["counts"] = s.count;
    j["means"] = array_json(s.mean_valence);
    if (keep_values) {
        ordered_json vals = ordered_json::array();
        for (const auto& w : s.values) vals.push_back(w);
        j["values"] = std::move(vals);
    }
    return j;
}

WindowSeries series_from_json(const ordered_json& j) {
    WindowSeries s;
    s.polarity = j.at("polarity").get<std::string>() == "positive" ? Polarity::positive
                                                                   : Polarity::negative;
    s.window_minutes = j.at("window_minutes").get<int>();
    s.span_minutes = j.at("span_minutes").get<int>();
    s.offsets = j.at("offsets").get<std::vector<int>>();
    s.count = j.at("counts").get<std::vector<std::int64_t>>();
    s.mean_valence = num_array(j.at("means"));
    if (j.contains("values")) {
        for (const auto& w : j["values"]) s.values.push_back(w.get<std::vector<double>>());
    } else {
        s.values.assign(s.offsets.size(), {});
    }
    return s;
}

ordered_json value_series_to_json(const ValueSeries& s) {
    ordered_json j;
    j["offsets"] = s.offsets;
    j["values"] = array_json(s.values);
    return j;
}

ValueSeries value_series_from_json(const ordered_json& j) {
    ValueSeries s;
    s.offsets = j.at("offsets").get<std::vector<int>>();
    s.values = num_array(j.at("values"));
    return s;
}

ordered_json bootstrap_to_json(const BootstrapResult& b) {
    ordered_json j;
    j["offsets"] = b.offsets;
    j["p5"] = array_json(b.p5);
    j["p50"] = array_json(b.p50);
    j["p95"] = array_json(b.p95);
    j["replicate_count"] = b.replicate_count;
    j["seed"] = b.seed;
    return j;
}

BootstrapResult bootstrap_from_json(const ordered_json& j) {
    BootstrapResult b;
    b.offsets = j.at("offsets").get<std::vector<int>>();
    b.p5 = num_array(j.at("p5"));
    b.p50 = num_array(j.at("p50"));
    b.p95 = num_array(j.at("p95"));
    b.replicate_count = j.at("replicate_count").get<int>();
    b.seed = j.at("seed").get<std::uint64_t>();
    return b;
}

ordered_json change_report_to_json(const ChangeReport& r) {
    ordered_json j;
    j["method"] = to_string(r.method);
    ordered_json ivs = ordered_json::array();
    for (const auto& iv : r.intervals) {
        ordered_json o;
        o["start_k"] = iv.start_k;
        o["end_k"] = iv.end_k;
        o["duration_minutes"] = iv.duration_minutes;
        ivs.push_back(std::move(o));
    }
    j["intervals"] = std::move(ivs);
    j["notes"] = r.notes;
    return j;
}

ChangeReport change_report_from_json(const ordered_json& j) {
    ChangeReport r;
    std::string m = j.at("method").get<std::string>();
    r.method = m == "cusum"           ? ChangeMethod::cusum
               : m == "ci_divergence" ? ChangeMethod::ci_divergence
                                      : ChangeMethod::median_excursion;
    for (const auto& o : j.at("intervals"))
        r.intervals.push_back(Interval{o.at("start_k").get<int>(), o.at("end_k").get<int>(),
                                       o.at("duration_minutes").get<int>()});
    if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
    return r;
}

ordered_json duration_to_json(const DurationEstimate& d) {
    ordered_json j;
    ordered_json pm;
    for (const auto& [name, iv] : d.per_method) {
        pm[name]["start_k"] = iv.start_k;
        pm[name]["end_k"] = iv.end_k;
        pm[name]["duration_minutes"] = iv.duration_minutes;
    }
    j["per_method"] = std::move(pm);
    j["excluded_methods"] = d.excluded_methods;
    j["average_start"] = d.average_start;
    j["average_end"] = d.average_end;
    j["average_duration"] = d.average_duration;
    return j;
}

ordered_json fit_to_json(const FitResult& f) {
    ordered_json j;
    j["family"] = to_string(f.family);
    ordered_json params;
    for (const auto& [k, v] : f.params) params[k] = v;
    j["params"] = std::move(params);
    j["segment_start"] = f.segment_start;
    j["segment_end"] = f.segment_end;
    j["sse"] = f.sse;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    return j;
}

FitResult fit_from_json(const ordered_json& j) {
    FitResult f;
    std::string fam = j.at("family").get<std::string>();
    f.family = fam == "exponential"  ? FitFamily::exponential
               : fam == "lorentzian" ? FitFamily::lorentzian
               : fam == "gaussian"   ? FitFamily::gaussian
                                     : FitFamily::quadratic;
    for (const auto& [k, v] : j.at("params").items()) f.params[k] = v.get<double>();
    f.segment_start = j.at("segment_start").get<int>();
    f.segment_end = j.at("segment_end").get<int>();
    f.sse = j.at("sse").get<double>();
    f.converged = j.at("converged").get<bool>();
    f.iterations = j.at("iterations").get<int>();
    return f;
}

ordered_json gmm_to_json(const GmmResult& g) {
    ordered_json j;
    j["k"] = g.k;
    j["weights"] = g.weights;
    j["means"] = g.means;
    j["sigmas"] = g.sigmas;
    j["log_likelihood"] = g.log_likelihood;
    j["aic"] = g.aic;
    j["bic"] = g.bic;
    j["iterations"] = g.iterations;
    j["collapsed_restarts"] = g.collapsed_restarts;
    j["monotone"] = g.monotone;
    return j;
}

ordered_json rdd_to_json(const RddResult& r) {
    auto line = [](const LineFit& f) {
        ordered_json j;
        j["slope"] = f.slope;
        j["intercept"] = f.intercept;
        j["slope_se"] = f.slope_se;
        j["slope_ci_half"] = f.slope_ci_half();
        j["intercept_se"] = f.intercept_se;
        j["intercept_ci_half"] = f.intercept_ci_half();
        j["n"] = f.n;
        return j;
    };
    ordered_json j;
    j["pre"] = line(r.pre);
    j["post"] = line(r.post);
    j["gap"] = r.gap;
    j["gap_se"] = r.gap_se;
    j["gap_ci_half"] = r.gap_ci_half;
    j["ci_overlap"] = r.ci_overlap;
    return j;
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

RunConfig RunConfig::from_file(const std::string& path) {
    Config c = Config::parse_file(path);
    RunConfig rc;

    std::vector<std::string> inputs;
    if (c.has("paths.input")) {
        const auto& cv = c.values().at("paths.input");
        if (cv.is_array())
            inputs = c.get_string_array("paths.input");
        else
            inputs = {c.get_string("paths.input")};
    } else {
        throw std::runtime_error(path + ": paths.input is required");
    }
    for (const auto& pat : inputs) {
        auto expanded = expand_glob(pat);
        if (expanded.empty()) throw std::runtime_error("no corpus files match " + pat);
        rc.input_paths.insert(rc.input_paths.end(), expanded.begin(), expanded.end());
    }
    rc.lexicon_path = c.get_string("paths.lexicon");
    rc.output_dir = c.get_string_or("paths.output_dir", rc.output_dir);

    if (c.has("paths.patterns")) {
        Config pc = Config::parse_file(c.get_string("paths.patterns"));
        rc.pattern = PatternConfig::from_config(pc);
        rc.filters = FilterConfig::from_config(pc);
    } else {
        rc.pattern = PatternConfig::from_config(c);
        rc.filters = FilterConfig::from_config(c);
    }

    rc.window_minutes = static_cast<int>(c.get_int_or("analysis.window_minutes", rc.window_minutes));
    rc.ci_window_minutes =
        static_cast<int>(c.get_int_or("analysis.ci_window_minutes", rc.ci_window_minutes));
    rc.smooth_minutes = static_cast<int>(c.get_int_or("analysis.smooth_minutes", rc.smooth_minutes));
    rc.cusum_threshold = c.get_double_or("analysis.cusum_threshold", rc.cusum_threshold);
    rc.cusum_min_run = static_cast<int>(c.get_int_or("analysis.cusum_lambda", rc.cusum_min_run));
    rc.cusum_on_raw = c.get_bool_or("analysis.cusum_on_raw", rc.cusum_on_raw);
    rc.baseline_hours = static_cast<int>(c.get_int_or("analysis.baseline_hours", rc.baseline_hours));
    rc.replicates = static_cast<int>(c.get_int_or("analysis.replicates", rc.replicates));
    rc.seed = static_cast<std::uint64_t>(c.get_int_or("analysis.seed", static_cast<std::int64_t>(rc.seed)));
    rc.keep_values = c.get_bool_or("analysis.keep_values", rc.keep_values);
    rc.gender_analysis = c.get_bool_or("analysis.gender", rc.gender_analysis);
    rc.null_include_analysis_window =
        c.get_bool_or("analysis.null_include_analysis_window", rc.null_include_analysis_window);
    rc.gmm_kmax = static_cast<int>(c.get_int_or("analysis.gmm_kmax", rc.gmm_kmax));
    rc.gmm_restarts = static_cast<int>(c.get_int_or("analysis.gmm_restarts", rc.gmm_restarts));
    return rc;
}

// ---------------------------------------------------------------------------
// Pipeline driver
// ---------------------------------------------------------------------------

namespace {

struct StageContext {
    const RunConfig& cfg;
    fs::path out;
    ResultBundle bundle;

    std::optional<Corpus> corpus;
    std::optional<Lexicon> lexicon;
    Cohort positive, negative;
    bool cohorts_ready = false;
    bool scored = false;

    PolarityResults* results(Polarity p) {
        auto& slot = p == Polarity::positive ? bundle.positive : bundle.negative;
        if (!slot) slot.emplace();
        return &*slot;
    }
    Cohort& cohort(Polarity p) { return p == Polarity::positive ? positive : negative; }
};

void require_corpus(StageContext& ctx) {
    if (ctx.corpus) return;
    fs::path path = ctx.out / "corpus.jsonl";
    if (!fs::exists(path))
        throw std::runtime_error("needs corpus.jsonl from the ingest stage (run it first)");
    IngestReport rep;
    ctx.corpus = load_corpus(path.string(), rep);
}

void require_scored(StageContext& ctx) {
    if (ctx.scored) return;
    fs::path path = ctx.out / "scored.bin";
    if (!fs::exists(path))
        throw std::runtime_error("needs scored.bin from the score stage (run it first)");
    load_cohorts(path.string(), ctx.positive, ctx.negative, ctx.bundle.filters);
    ctx.cohorts_ready = true;
    ctx.scored = true;
}

void require_lexicon(StageContext& ctx) {
    if (!ctx.lexicon) ctx.lexicon = load_lexicon(ctx.cfg.lexicon_path);
}

void require_series(StageContext& ctx) {
    if (ctx.bundle.positive && !ctx.bundle.positive->fine.offsets.empty()) return;
    fs::path path = ctx.out / "series.json";
    if (!fs::exists(path))
        throw std::runtime_error("needs series.json from the epoch stage (run it first)");
    ordered_json j = read_json_file(path.string());
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        const char* key = to_string(p);
        if (!j.contains(key)) continue;
        auto* res = ctx.results(p);
        res->fine = series_from_json(j[key]["fine"]);
        res->smoothed = value_series_from_json(j[key]["smoothed"]);
        res->coarse = series_from_json(j[key]["coarse"]);
    }
}

bool has_polarity(StageContext& ctx, Polarity p) {
    auto& slot = p == Polarity::positive ? ctx.bundle.positive : ctx.bundle.negative;
    return slot.has_value();
}

void stage_ingest(StageContext& ctx) {
    IngestReport report;
    ctx.corpus = parse_corpus_files(ctx.cfg.input_paths, report);
    ctx.bundle.ingest = report;
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["lines_total"] = report.lines_total;
    j["lines_parsed"] = report.lines_parsed;
    j["lines_malformed"] = report.lines_malformed;
    j["duplicates_dropped"] = report.duplicates_dropped;
    j["sample_errors"] = report.sample_errors;
    write_json_file(j, (ctx.out / "errors.json").string());
    save_corpus(*ctx.corpus, (ctx.out / "corpus.jsonl").string());
}

void stage_detect(StageContext& ctx) {
    require_corpus(ctx);
    AffectDetector detector(ctx.cfg.pattern);
    ScanReport scan;
    auto labels = scan_corpus(*ctx.corpus, detector, scan);
    ctx.bundle.scan = scan;
    build_cohorts(*ctx.corpus, labels, detector, ctx.cfg.filters, ctx.positive, ctx.negative,
                  ctx.bundle.filters);
    ctx.cohorts_ready = true;

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["scan"]["messages_seen"] = scan.messages_seen;
    j["scan"]["reposts_skipped"] = scan.reposts_skipped;
    j["scan"]["ambiguous_dropped"] = scan.ambiguous_dropped;
    j["scan"]["labels_found"] = scan.labels_found;
    save_cohorts(ctx.positive, ctx.negative, ctx.bundle.filters, (ctx.out / "cohorts.bin").string());
    // filters.json carries the scan header plus the cohort file's filter report.
    ordered_json fr = read_json_file((ctx.out / "cohorts.bin").string())["filter_report"];
    j["filters"] = fr;
    write_json_file(j, (ctx.out / "filters.json").string());
}

void stage_score(StageContext& ctx) {
    if (!ctx.cohorts_ready) {
        fs::path path = ctx.out / "cohorts.bin";
        if (!fs::exists(path))
            throw std::runtime_error("needs cohorts.bin from the detect stage (run it first)");
        load_cohorts(path.string(), ctx.positive, ctx.negative, ctx.bundle.filters);
        ctx.cohorts_ready = true;
    }
    require_lexicon(ctx);
    score_cohort(ctx.positive, *ctx.lexicon);
    score_cohort(ctx.negative, *ctx.lexicon);
    ctx.scored = true;
    save_cohorts(ctx.positive, ctx.negative, ctx.bundle.filters, (ctx.out / "scored.bin").string());
}

void stage_epoch(StageContext& ctx) {
    require_scored(ctx);
    ordered_json series;
    series["schema_version"] = kSchemaVersion;
    ordered_json volumes;
    volumes["schema_version"] = kSchemaVersion;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        Cohort& cohort = ctx.cohort(p);
        if (cohort.timelines.empty()) continue;
        auto* res = ctx.results(p);
        res->fine = window_series(cohort, ctx.cfg.window_minutes);
        res->smoothed = rolling_mean(res->fine, ctx.cfg.smooth_minutes);
        res->coarse = window_series(cohort, ctx.cfg.ci_window_minutes);
        const char* key = to_string(p);
        series[key]["fine"] = series_to_json(res->fine, ctx.cfg.keep_values);
        series[key]["smoothed"] = value_series_to_json(res->smoothed);
        series[key]["coarse"] = series_to_json(res->coarse, ctx.cfg.keep_values);
        volumes[key]["offsets"] = res->fine.offsets;
        volumes[key]["counts"] = res->fine.count;
        volumes[key]["timelines"] = cohort.timelines.size();
    }
    write_json_file(series, (ctx.out / "series.json").string());
    write_json_file(volumes, (ctx.out / "volumes.json").string());
}

void stage_null(StageContext& ctx) {
    require_scored(ctx);
    require_series(ctx);
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        if (!has_polarity(ctx, p)) continue;
        Cohort& cohort = ctx.cohort(p);
        if (cohort.timelines.empty()) continue;
        auto* res = ctx.results(p);
        const std::uint64_t tag = p == Polarity::positive ? 1 : 2;

        NullSample null_fine = build_null(cohort, res->fine, derive_seed(ctx.cfg.seed, 10, tag),
                                          ctx.cfg.null_include_analysis_window);
        res->cusum_params =
            cusum_reference(null_fine, ctx.cfg.cusum_on_raw ? 1 : ctx.cfg.smooth_minutes,
                            ctx.cfg.cusum_threshold, ctx.cfg.cusum_min_run);

        NullSample null_coarse = build_null(cohort, res->coarse, derive_seed(ctx.cfg.seed, 11, tag),
                                            ctx.cfg.null_include_analysis_window);
        res->observed_ci =
            bootstrap_series(res->coarse, ctx.cfg.replicates, derive_seed(ctx.cfg.seed, 12, tag));
        res->null_ci =
            bootstrap_series(null_coarse, ctx.cfg.replicates, derive_seed(ctx.cfg.seed, 13, tag));

        const char* key = to_string(p);
        j[key]["cusum_t"] = res->cusum_params.reference_mean;
        j[key]["cusum_k"] = res->cusum_params.allowance;
        j[key]["fallback_weekday"] = null_fine.fallback_weekday + null_coarse.fallback_weekday;
        j[key]["fallback_any"] = null_fine.fallback_any + null_coarse.fallback_any;
        j[key]["observed"] = bootstrap_to_json(res->observed_ci);
        j[key]["null"] = bootstrap_to_json(res->null_ci);
    }
    write_json_file(j, (ctx.out / "null.json").string());
}

void require_null(StageContext& ctx) {
    bool loaded = ctx.bundle.positive && ctx.bundle.positive->observed_ci.replicate_count > 0;
    bool loaded_neg = ctx.bundle.negative && ctx.bundle.negative->observed_ci.replicate_count > 0;
    if (loaded || loaded_neg) return;
    fs::path path = ctx.out / "null.json";
    if (!fs::exists(path))
        throw std::runtime_error("needs null.json from the null stage (run it first)");
    ordered_json j = read_json_file(path.string());
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        const char* key = to_string(p);
        if (!j.contains(key)) continue;
        auto* res = ctx.results(p);
        res->cusum_params.reference_mean = j[key]["cusum_t"].get<double>();
        res->cusum_params.allowance = j[key]["cusum_k"].get<double>();
        res->cusum_params.threshold = ctx.cfg.cusum_threshold;
        res->cusum_params.min_run_minutes = ctx.cfg.cusum_min_run;
        res->observed_ci = bootstrap_from_json(j[key]["observed"]);
        res->null_ci = bootstrap_from_json(j[key]["null"]);
    }
}

void stage_changepoint(StageContext& ctx) {
    require_series(ctx);
    require_null(ctx);
    ordered_json change;
    change["schema_version"] = kSchemaVersion;
    ordered_json durations;
    durations["schema_version"] = kSchemaVersion;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        if (!has_polarity(ctx, p)) continue;
        auto* res = ctx.results(p);
        if (res->fine.offsets.empty()) continue;
        res->cusum_params.threshold = ctx.cfg.cusum_threshold;
        res->cusum_params.min_run_minutes = ctx.cfg.cusum_min_run;

        ValueSeries cusum_input = res->smoothed;
        if (ctx.cfg.cusum_on_raw) {
            cusum_input.offsets = res->fine.offsets;
            cusum_input.values = res->fine.mean_valence;
        }
        res->cusum_report = cusum(cusum_input, res->cusum_params);
        res->ci_report = ci_divergence(res->observed_ci, res->null_ci);
        res->median_report = median_excursion(res->smoothed, p);
        res->baseline = baseline_ci(res->smoothed, ctx.cfg.baseline_hours);
        try {
            res->duration =
                estimate_duration({res->cusum_report, res->ci_report, res->median_report});
        } catch (const std::exception&) {
            res->duration.reset();
        }
        res->significant =
            res->cusum_report.covering(0).has_value() || res->ci_report.covering(0).has_value();

        const char* key = to_string(p);
        change[key]["cusum_params"]["t"] = res->cusum_params.reference_mean;
        change[key]["cusum_params"]["k"] = res->cusum_params.allowance;
        change[key]["cusum_params"]["h"] = res->cusum_params.threshold;
        change[key]["cusum_params"]["lambda"] = res->cusum_params.min_run_minutes;
        change[key]["cusum"] = change_report_to_json(res->cusum_report);
        change[key]["ci_divergence"] = change_report_to_json(res->ci_report);
        change[key]["median_excursion"] = change_report_to_json(res->median_report);
        change[key]["baseline_ci"] = {res->baseline.first, res->baseline.second};

        durations[key]["significant"] = res->significant;
        if (res->duration)
            durations[key]["estimate"] = duration_to_json(*res->duration);
        else
            durations[key]["estimate"] = nullptr;
    }
    write_json_file(change, (ctx.out / "change.json").string());
    write_json_file(durations, (ctx.out / "durations.json").string());
}

void require_change(StageContext& ctx) {
    bool have = false;
    for (Polarity p : {Polarity::positive, Polarity::negative})
        if (has_polarity(ctx, p) && !ctx.results(p)->cusum_report.intervals.empty()) have = true;
    if (have) return;
    fs::path path = ctx.out / "change.json";
    if (!fs::exists(path)) return; // fit/gmm will skip without a span
    ordered_json j = read_json_file(path.string());
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        const char* key = to_string(p);
        if (!j.contains(key)) continue;
        auto* res = ctx.results(p);
        res->cusum_report = change_report_from_json(j[key]["cusum"]);
        res->ci_report = change_report_from_json(j[key]["ci_divergence"]);
        res->median_report = change_report_from_json(j[key]["median_excursion"]);
    }
}

std::pair<std::vector<double>, std::vector<double>> segment_points(const ValueSeries& s, int lo,
                                                                   int hi) {
    std::vector<double> t, y;
    for (std::size_t i = 0; i < s.offsets.size(); ++i) {
        if (s.offsets[i] < lo || s.offsets[i] > hi) continue;
        if (std::isnan(s.values[i])) continue;
        t.push_back(s.offsets[i]);
        y.push_back(s.values[i]);
    }
    return {std::move(t), std::move(y)};
}

void stage_fit(StageContext& ctx) {
    require_series(ctx);
    require_change(ctx);
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        if (!has_polarity(ctx, p)) continue;
        auto* res = ctx.results(p);
        const char* key = to_string(p);
        auto span = res->cusum_report.covering(0);
        if (!span) {
            j[key]["skipped"] = "no t0-covering CUSUM span";
            ctx.bundle.skipped.push_back(std::string("fit/") + key + ": no CUSUM span");
            continue;
        }
        auto [t_up, y_up] = segment_points(res->smoothed, span->start_k, -1);
        auto [t_dn, y_dn] = segment_points(res->smoothed, 0, span->end_k);
        auto [t_all, y_all] = segment_points(res->smoothed, span->start_k, span->end_k);
        res->fit_up = fit_exponential(t_up, y_up);
        res->fit_down = fit_exponential(t_dn, y_dn);
        FitResult lor = fit_lorentzian(t_all, y_all);
        FitResult gau = fit_gaussian(t_all, y_all);
        FitResult qua = fit_quadratic(t_all, y_all);
        res->ranking = rank_models({
            RankedModel{"two_exponentials", res->fit_up->sse + res->fit_down->sse,
                        {*res->fit_up, *res->fit_down}},
            RankedModel{"lorentzian", lor.sse, {lor}},
            RankedModel{"gaussian", gau.sse, {gau}},
            RankedModel{"quadratic", qua.sse, {qua}},
        });
        if (res->fit_down->params.at("lambda") < 0.0 && res->fit_down->params.at("A") != 0.0) {
            res->half_life = half_life(*res->fit_down, span->end_k);
        } else {
            ctx.bundle.skipped.push_back(std::string("half_life/") + key +
                                         ": ramp-down is not a decay");
        }

        j[key]["segment"] = {span->start_k, span->end_k};
        j[key]["ramp_up"] = fit_to_json(*res->fit_up);
        j[key]["ramp_down"] = fit_to_json(*res->fit_down);
        ordered_json ranking = ordered_json::array();
        for (const auto& rm : res->ranking) {
            ordered_json o;
            o["model"] = rm.name;
            o["sse"] = rm.sse;
            ordered_json fits = ordered_json::array();
            for (const auto& f : rm.fits) fits.push_back(fit_to_json(f));
            o["fits"] = std::move(fits);
            ranking.push_back(std::move(o));
        }
        j[key]["ranking"] = std::move(ranking);
        if (res->half_life) {
            j[key]["half_life"]["minutes"] = res->half_life->minutes;
            j[key]["half_life"]["peak_value"] = res->half_life->peak_value;
            j[key]["half_life"]["end_value"] = res->half_life->end_value;
        } else {
            j[key]["half_life"] = nullptr;
        }
    }
    write_json_file(j, (ctx.out / "fits.json").string());
}

void stage_gmm(StageContext& ctx) {
    require_scored(ctx);
    require_series(ctx);
    require_change(ctx);
    ordered_json peaks_json;
    peaks_json["schema_version"] = kSchemaVersion;
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        if (!has_polarity(ctx, p)) continue;
        auto* res = ctx.results(p);
        const char* key = to_string(p);
        auto span = res->cusum_report.covering(0);
        if (!span) {
            j[key]["skipped"] = "no t0-covering CUSUM span";
            ctx.bundle.skipped.push_back(std::string("gmm/") + key + ": no CUSUM span");
            continue;
        }
        res->peaks = peak_values(ctx.cohort(p), span->start_k, span->end_k);
        ordered_json plist = ordered_json::array();
        std::vector<double> z;
        for (const auto& pk : res->peaks.peaks) {
            ordered_json o;
            o["subject_id"] = pk.subject_id;
            o["peak_z"] = pk.peak_z;
            plist.push_back(std::move(o));
            z.push_back(pk.peak_z);
        }
        peaks_json[key]["polarity"] = key;
        peaks_json[key]["span"] = {span->start_k, span->end_k};
        peaks_json[key]["peaks"] = std::move(plist);
        peaks_json[key]["omitted_no_messages"] = res->peaks.omitted_no_messages;
        peaks_json[key]["omitted_degenerate"] = res->peaks.omitted_degenerate;

        if (z.size() < static_cast<std::size_t>(3 * ctx.cfg.gmm_kmax + 1)) {
            j[key]["skipped"] = "too few peak values";
            ctx.bundle.skipped.push_back(std::string("gmm/") + key + ": too few peaks");
            continue;
        }
        res->gmm = select_k(z, ctx.cfg.gmm_kmax, derive_seed(ctx.cfg.seed, 20, p == Polarity::positive ? 1 : 2));
        res->contrary = contrary_fraction(res->peaks.peaks, p);

        std::sort(z.begin(), z.end());
        j[key]["peak_count"] = z.size();
        j[key]["peak_median"] = percentile_nearest_rank(z, 50.0);
        j[key]["peak_ci95"] = {percentile_nearest_rank(z, 2.5), percentile_nearest_rank(z, 97.5)};
        j[key]["contrary_fraction"] = *res->contrary;
        j[key]["selected_k"] = res->gmm->k;
        j[key]["k_aic"] = res->gmm->k_aic;
        j[key]["k_bic"] = res->gmm->k_bic;
        ordered_json fits = ordered_json::array();
        for (const auto& g : res->gmm->fits) fits.push_back(gmm_to_json(g));
        j[key]["fits"] = std::move(fits);
        j[key]["selected"] = gmm_to_json(res->gmm->fits[static_cast<std::size_t>(res->gmm->k - 1)]);
    }
    write_json_file(peaks_json, (ctx.out / "peaks.json").string());
    write_json_file(j, (ctx.out / "gmm.json").string());
}

void stage_rdd(StageContext& ctx) {
    require_scored(ctx);
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    bool any_gender = false;
    for (const Cohort* c : {&ctx.positive, &ctx.negative})
        for (const auto& tl : c->timelines)
            if (tl.gender_label != Gender::unknown) any_gender = true;
    if (!any_gender) {
        j["skipped"] = "no gender labels in the cohorts";
        ctx.bundle.skipped.push_back("rdd: no gender labels");
        write_json_file(j, (ctx.out / "rdd.json").string());
        return;
    }

    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        Cohort& cohort = ctx.cohort(p);
        Cohort male{p, {}}, female{p, {}};
        for (const auto& tl : cohort.timelines) {
            if (tl.gender_label == Gender::male) male.timelines.push_back(tl);
            if (tl.gender_label == Gender::female) female.timelines.push_back(tl);
        }
        const char* key = to_string(p);
        if (male.timelines.empty() || female.timelines.empty()) {
            j[key]["skipped"] = "one gender has no timelines";
            continue;
        }
        WindowSeries m = window_series(male, ctx.cfg.ci_window_minutes);
        WindowSeries f = window_series(female, ctx.cfg.ci_window_minutes);
        ValueSeries diff = difference_series(m, f);
        RddResult rr = rdd_fit(diff);
        if (p == Polarity::positive)
            ctx.bundle.rdd_positive = rr;
        else
            ctx.bundle.rdd_negative = rr;
        j[key]["male_timelines"] = male.timelines.size();
        j[key]["female_timelines"] = female.timelines.size();
        j[key]["difference"] = value_series_to_json(diff);
        j[key]["rdd"] = rdd_to_json(rr);
    }

    GenderSpanParams gsp;
    gsp.smooth_minutes = ctx.cfg.smooth_minutes;
    gsp.cusum_threshold = ctx.cfg.cusum_threshold;
    gsp.cusum_min_run = ctx.cfg.cusum_min_run;
    gsp.ci_window_minutes = ctx.cfg.ci_window_minutes;
    gsp.replicates = ctx.cfg.replicates;
    gsp.seed = derive_seed(ctx.cfg.seed, 30);
    ctx.bundle.gender_spans = gender_change_spans(ctx.positive, ctx.negative, gsp);
    ordered_json rows = ordered_json::array();
    for (const auto& row : ctx.bundle.gender_spans) {
        ordered_json o;
        o["group"] = row.label;
        o["timelines"] = row.timelines;
        auto iv_json = [](const std::optional<Interval>& iv) -> ordered_json {
            if (!iv) return nullptr;
            ordered_json x;
            x["start_k"] = iv->start_k;
            x["end_k"] = iv->end_k;
            x["duration_minutes"] = iv->duration_minutes;
            return x;
        };
        o["ci_divergence"] = iv_json(row.ci_span);
        o["cusum"] = iv_json(row.cusum_span);
        rows.push_back(std::move(o));
    }
    j["gender_spans"] = std::move(rows);
    write_json_file(j, (ctx.out / "rdd.json").string());
}

// Figure analogs. Ranges are padded so flat series still render.
void yrange(const std::vector<double>& v, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (double x : v) {
        if (std::isnan(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    double pad = std::max(0.05 * (hi - lo), 1e-3);
    lo -= pad;
    hi += pad;
}

void plot_fig2(const PolarityResults& res, const std::string& name, const fs::path& out) {
    double lo, hi;
    yrange(res.smoothed.values, lo, hi);
    SvgChart chart(-360, 360, lo, hi, "Smoothed mean valence (" + name + ")",
                   "minutes from expression", "mean valence");
    if (auto iv = res.cusum_report.covering(0)) chart.vband(iv->start_k, iv->end_k, "#999999", 0.35);
    chart.hband(res.baseline.first, res.baseline.second, "#888888", 0.25);
    std::vector<double> x(res.smoothed.offsets.begin(), res.smoothed.offsets.end());
    chart.polyline(x, res.smoothed.values, name == "positive" ? "#1f6fc4" : "#c43f3f");
    chart.vline(0, "#222222");
    chart.legend({{"smoothed mean", name == "positive" ? "#1f6fc4" : "#c43f3f"},
                  {"baseline 95% CI", "#888888"},
                  {"CUSUM span", "#999999"}});
    chart.save((out / ("fig2_" + name + ".svg")).string());
}

void plot_fig4(const PolarityResults& res, const std::string& name, const fs::path& out) {
    std::vector<double> all;
    all.insert(all.end(), res.observed_ci.p5.begin(), res.observed_ci.p5.end());
    all.insert(all.end(), res.observed_ci.p95.begin(), res.observed_ci.p95.end());
    all.insert(all.end(), res.null_ci.p5.begin(), res.null_ci.p5.end());
    all.insert(all.end(), res.null_ci.p95.begin(), res.null_ci.p95.end());
    double lo, hi;
    yrange(all, lo, hi);
    SvgChart chart(-360, 360, lo, hi, "Bootstrapped mean valence vs null model (" + name + ")",
                   "minutes from expression", "mean valence");
    std::vector<double> x(res.observed_ci.offsets.begin(), res.observed_ci.offsets.end());
    chart.band(x, res.null_ci.p5, res.null_ci.p95, "#999999", 0.4);
    chart.polyline(x, res.null_ci.p50, "#777777");
    const std::string color = name == "positive" ? "#1f6fc4" : "#c43f3f";
    chart.band(x, res.observed_ci.p5, res.observed_ci.p95, color, 0.35);
    chart.polyline(x, res.observed_ci.p50, color);
    chart.vline(0, "#222222");
    chart.legend({{"observed 95% CI", color}, {"null model 95% CI", "#999999"}});
    chart.save((out / ("fig4_" + name + ".svg")).string());
}

void plot_fig5(const PolarityResults& res, const std::string& name, const fs::path& out) {
    if (!res.gmm || res.peaks.peaks.empty()) return;
    const double bin = 0.25;
    std::map<int, double> hist;
    for (const auto& p : res.peaks.peaks) hist[static_cast<int>(std::floor(p.peak_z / bin))] += 1.0;
    std::vector<double> bx, bh;
    double total = static_cast<double>(res.peaks.peaks.size());
    for (const auto& [b, c] : hist) {
        bx.push_back(b * bin);
        bh.push_back(c / (total * bin)); // density scale
    }
    double hi = 0.0;
    for (double h : bh) hi = std::max(hi, h);
    SvgChart chart(-4, 4, 0, std::max(hi * 1.15, 0.1), "Peak z-score mixture (" + name + ")",
                   "peak z-score", "density");
    chart.bars(bx, bh, bin, name == "positive" ? "#1f6fc4" : "#c43f3f", 0.45);
    const auto& g = res.gmm->fits[static_cast<std::size_t>(res.gmm->k - 1)];
    std::vector<double> gx, gy;
    for (double v = -4.0; v <= 4.0; v += 0.05) {
        gx.push_back(v);
        gy.push_back(g.density(v));
    }
    chart.polyline(gx, gy, "#222222", 2.0);
    chart.legend({{"peak histogram", name == "positive" ? "#1f6fc4" : "#c43f3f"},
                  {"GMM density", "#222222"}});
    chart.save((out / ("fig5_" + name + ".svg")).string());
}

void plot_fig6(const ResultBundle& bundle, const StageContext& ctx, const fs::path& out) {
    (void)ctx;
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        const auto& rr = p == Polarity::positive ? bundle.rdd_positive : bundle.rdd_negative;
        if (!rr) continue;
        const std::string name = to_string(p);
        // Rebuild the fitted lines over the window range.
        std::vector<double> xs_pre, ys_pre, xs_post, ys_post;
        for (int k = -360; k < 0; k += 10) {
            xs_pre.push_back(k);
            ys_pre.push_back(rr->pre.predict(k));
        }
        for (int k = 0; k <= 360; k += 10) {
            xs_post.push_back(k);
            ys_post.push_back(rr->post.predict(k));
        }
        std::vector<double> all = ys_pre;
        all.insert(all.end(), ys_post.begin(), ys_post.end());
        double lo, hi;
        yrange(all, lo, hi);
        SvgChart chart(-360, 360, lo - 0.02, hi + 0.02,
                       "Male minus female valence, regression discontinuity (" + name + ")",
                       "minutes from expression", "valence difference");
        chart.polyline(xs_pre, ys_pre, "#1f6fc4", 2.0);
        chart.polyline(xs_post, ys_post, "#c43f3f", 2.0);
        chart.vline(0, "#222222");
        chart.legend({{"pre-t0 fit", "#1f6fc4"}, {"post-t0 fit", "#c43f3f"}});
        chart.save((out / ("fig6_" + name + ".svg")).string());
    }
}

void write_plots(StageContext& ctx) {
    for (Polarity p : {Polarity::positive, Polarity::negative}) {
        if (!has_polarity(ctx, p)) continue;
        auto* res = ctx.results(p);
        if (res->smoothed.offsets.empty()) continue;
        const std::string name = to_string(p);
        plot_fig2(*res, name, ctx.out);
        if (res->observed_ci.replicate_count > 0) plot_fig4(*res, name, ctx.out);
        plot_fig5(*res, name, ctx.out);
    }
    plot_fig6(ctx.bundle, ctx, ctx.out);
}

} // namespace

ResultBundle run_pipeline(const RunConfig& config) {
    fs::create_directories(config.output_dir);
    StageContext ctx{config, fs::path(config.output_dir), {}, {}, {}, {}, {}, false, false};

    using StageFn = void (*)(StageContext&);
    const std::vector<std::pair<std::string, StageFn>> all_stages = {
        {"ingest", stage_ingest},     {"detect", stage_detect}, {"score", stage_score},
        {"epoch", stage_epoch},       {"null", stage_null},     {"changepoint", stage_changepoint},
        {"fit", stage_fit},           {"gmm", stage_gmm},       {"rdd", stage_rdd},
    };
    std::set<std::string> wanted(config.stages.begin(), config.stages.end());
    for (const auto& name : config.stages) {
        bool known = false;
        for (const auto& [n, fn] : all_stages) known |= (n == name);
        if (!known) throw std::runtime_error("unknown stage: " + name);
    }

    auto write_manifest = [&](const std::string& failed, const std::string& why) {
        ordered_json m;
        m["schema_version"] = kSchemaVersion;
        m["completed_stages"] = ctx.bundle.completed_stages;
        m["skipped"] = ctx.bundle.skipped;
        m["complete"] = failed.empty();
        if (!failed.empty()) {
            m["failed_stage"] = failed;
            m["error"] = why;
        }
        write_json_file(m, (ctx.out / "manifest.json").string());
    };

    for (const auto& [name, fn] : all_stages) {
        if (!wanted.empty() && !wanted.count(name)) continue;
        if (name == "rdd" && !config.gender_analysis) {
            ctx.bundle.skipped.push_back("rdd: gender analysis disabled");
            continue;
        }
        try {
            fn(ctx);
            ctx.bundle.completed_stages.push_back(name);
        } catch (const std::exception& e) {
            write_manifest(name, e.what());
            throw std::runtime_error("stage " + name + ": " + e.what());
        }
    }

    try {
        write_plots(ctx);
        for (const char* which : {"fits", "durations", "gender_spans"}) {
            try {
                std::string csv = emit_table(ctx.bundle, which);
                fs::create_directories(ctx.out / "tables");
                std::ofstream out(ctx.out / "tables" / (std::string(which) + ".csv"),
                                  std::ios::binary);
                out << csv;
            } catch (const std::exception&) {
                // Table inputs missing (partial run): fine, the JSON artifacts carry it.
            }
        }
    } catch (const std::exception& e) {
        write_manifest("plots", e.what());
        throw std::runtime_error(std::string("stage plots: ") + e.what());
    }
    write_manifest("", "");
    return ctx.bundle;
}

namespace {

std::string span_str(const Interval& iv) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "[%d,%+d]", iv.start_k, iv.end_k);
    return buf;
}

std::string param_str(const FitResult& f) {
    std::string out;
    for (const auto& [k, v] : f.params) {
        if (!out.empty()) out += " ";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s=%.6g", k.c_str(), v);
        out += buf;
    }
    return out;
}

} // namespace

std::string emit_table(const ResultBundle& bundle, const std::string& which) {
    std::ostringstream csv;
    if (which == "fits") {
        csv << "polarity,rank,model,sse,parameters\n";
        bool any = false;
        for (const auto* res : {bundle.positive ? &*bundle.positive : nullptr,
                                bundle.negative ? &*bundle.negative : nullptr}) {
            if (!res || res->ranking.empty()) continue;
            any = true;
            int rank = 1;
            for (const auto& rm : res->ranking) {
                csv << to_string(res->fine.polarity) << ',' << rank++ << ',' << rm.name << ','
                    << rm.sse << ",\"";
                for (std::size_t i = 0; i < rm.fits.size(); ++i) {
                    if (i) csv << " | ";
                    csv << param_str(rm.fits[i]);
                }
                csv << "\"\n";
            }
        }
        if (!any) throw std::runtime_error("bundle has no fits");
        return csv.str();
    }
    if (which == "durations") {
        if (!bundle.positive && !bundle.negative)
            throw std::runtime_error("bundle has no duration estimates");
        csv << "method,positive_length,positive_span,negative_length,negative_span\n";
        auto row = [&](const std::string& label, const char* key) {
            csv << label;
            for (const auto* res : {bundle.positive ? &*bundle.positive : nullptr,
                                    bundle.negative ? &*bundle.negative : nullptr}) {
                if (res && res->duration && res->duration->per_method.count(key)) {
                    const auto& iv = res->duration->per_method.at(key);
                    csv << ',' << iv.duration_minutes << ',' << span_str(iv);
                } else {
                    csv << ",,";
                }
            }
            csv << '\n';
        };
        row("cusum", "cusum");
        row("ci_95", "ci_divergence");
        row("median_q2", "median_excursion");
        csv << "average";
        for (const auto* res : {bundle.positive ? &*bundle.positive : nullptr,
                                bundle.negative ? &*bundle.negative : nullptr}) {
            if (res && res->duration) {
                Interval avg{res->duration->average_start, res->duration->average_end,
                             res->duration->average_duration};
                csv << ',' << avg.duration_minutes << ',' << span_str(avg);
            } else {
                csv << ",,";
            }
        }
        csv << '\n';
        return csv.str();
    }
    if (which == "gender_spans") {
        if (bundle.gender_spans.empty())
            throw std::runtime_error("bundle has no gender span table");
        csv << "group,timelines,ci_length,ci_span,cusum_length,cusum_span\n";
        for (const auto& row : bundle.gender_spans) {
            csv << row.label << ',' << row.timelines;
            if (row.ci_span)
                csv << ',' << row.ci_span->duration_minutes << ',' << span_str(*row.ci_span);
            else
                csv << ",,";
            if (row.cusum_span)
                csv << ',' << row.cusum_span->duration_minutes << ',' << span_str(*row.cusum_span);
            else
                csv << ",,";
            csv << '\n';
        }
        return csv.str();
    }
    throw std::invalid_argument("unknown table: " + which);
}

} // namespace affectflow
