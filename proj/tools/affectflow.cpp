#include "affectflow/pipeline.hpp"
#include "affectflow/rng.hpp"
#include "affectflow/stats.hpp"
#include "affectflow/synthgen.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

using namespace affectflow;

namespace {

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out_path,
               const std::string& report_path) {
    std::vector<std::string> paths;
    for (const auto& pat : inputs) {
        auto expanded = expand_glob(pat);
        if (expanded.empty()) throw std::runtime_error("no files match " + pat);
        paths.insert(paths.end(), expanded.begin(), expanded.end());
    }
    IngestReport report;
    Corpus corpus = parse_corpus_files(paths, report);
    save_corpus(corpus, out_path);
    if (!report_path.empty()) {
        ordered_json j;
        j["schema_version"] = 1;
        j["lines_total"] = report.lines_total;
        j["lines_parsed"] = report.lines_parsed;
        j["lines_malformed"] = report.lines_malformed;
        j["duplicates_dropped"] = report.duplicates_dropped;
        j["sample_errors"] = report.sample_errors;
        write_json_file(j, report_path);
    }
    std::fprintf(stderr, "ingest: %zu lines, %zu parsed, %zu malformed, %zu duplicate ids\n",
                 report.lines_total, report.lines_parsed, report.lines_malformed,
                 report.duplicates_dropped);
    return 0;
}

int cmd_detect(const std::string& corpus_path, const std::string& config_path,
               const std::string& out_path, const std::string& report_path) {
    IngestReport irep;
    Corpus corpus = load_corpus(corpus_path, irep);
    PatternConfig pattern = PatternConfig::defaults();
    FilterConfig filters;
    if (!config_path.empty()) {
        Config c = Config::parse_file(config_path);
        pattern = PatternConfig::from_config(c);
        filters = FilterConfig::from_config(c);
    }
    AffectDetector detector(pattern);
    ScanReport scan;
    auto labels = scan_corpus(corpus, detector, scan);
    Cohort pos, neg;
    FilterReport freport;
    build_cohorts(corpus, labels, detector, filters, pos, neg, freport);
    save_cohorts(pos, neg, freport, out_path);
    if (!report_path.empty()) {
        ordered_json j = read_json_file(out_path)["filter_report"];
        ordered_json wrap;
        wrap["schema_version"] = 1;
        wrap["scan"]["messages_seen"] = scan.messages_seen;
        wrap["scan"]["reposts_skipped"] = scan.reposts_skipped;
        wrap["scan"]["ambiguous_dropped"] = scan.ambiguous_dropped;
        wrap["scan"]["labels_found"] = scan.labels_found;
        wrap["filters"] = j;
        write_json_file(wrap, report_path);
    }
    std::fprintf(stderr, "detect: %zu labels -> %zu positive, %zu negative timelines\n",
                 scan.labels_found, pos.timelines.size(), neg.timelines.size());
    return 0;
}

int cmd_score(const std::string& cohorts_path, const std::string& lexicon_path,
              const std::string& out_path) {
    Cohort pos, neg;
    FilterReport freport;
    load_cohorts(cohorts_path, pos, neg, freport);
    Lexicon lex = load_lexicon(lexicon_path);
    for (const auto& w : lex.warnings) std::fprintf(stderr, "lexicon: %s\n", w.c_str());
    score_cohort(pos, lex);
    score_cohort(neg, lex);
    save_cohorts(pos, neg, freport, out_path);
    return 0;
}

int cmd_epoch(const std::string& in_path, int window, int smooth, bool keep_values,
              const std::string& out_path) {
    Cohort pos, neg;
    FilterReport freport;
    load_cohorts(in_path, pos, neg, freport);
    ordered_json j;
    j["schema_version"] = 1;
    for (const Cohort* c : {&pos, &neg}) {
        if (c->timelines.empty()) continue;
        WindowSeries fine = window_series(*c, window);
        const char* key = to_string(c->polarity);
        j[key]["fine"] = series_to_json(fine, keep_values);
        j[key]["smoothed"] = value_series_to_json(rolling_mean(fine, smooth));
        j[key]["coarse"] = series_to_json(window_series(*c, 10), keep_values);
    }
    write_json_file(j, out_path);
    return 0;
}

int cmd_null(const std::string& cohorts_path, const std::string& series_path, int replicates,
             std::uint64_t seed, bool exclude_window, int smooth, const std::string& out_path) {
    Cohort pos, neg;
    FilterReport freport;
    load_cohorts(cohorts_path, pos, neg, freport);
    ordered_json series = read_json_file(series_path);
    ordered_json j;
    j["schema_version"] = 1;
    for (Cohort* c : {&pos, &neg}) {
        const char* key = to_string(c->polarity);
        if (c->timelines.empty() || !series.contains(key)) continue;
        WindowSeries fine = series_from_json(series[key]["fine"]);
        WindowSeries coarse = series_from_json(series[key]["coarse"]);
        if (fine.values.empty() || coarse.values.empty())
            throw std::runtime_error("series.json lacks per-window values; rerun epoch with --keep-values");
        NullSample null_fine = build_null(*c, fine, seed + 1, !exclude_window);
        CusumParams cp = cusum_reference(null_fine, smooth, 0.01, 40);
        NullSample null_coarse = build_null(*c, coarse, seed + 2, !exclude_window);
        j[key]["cusum_t"] = cp.reference_mean;
        j[key]["cusum_k"] = cp.allowance;
        j[key]["fallback_weekday"] = null_fine.fallback_weekday + null_coarse.fallback_weekday;
        j[key]["fallback_any"] = null_fine.fallback_any + null_coarse.fallback_any;
        j[key]["observed"] = bootstrap_to_json(bootstrap_series(coarse, replicates, seed + 3));
        j[key]["null"] = bootstrap_to_json(bootstrap_series(null_coarse, replicates, seed + 4));
    }
    write_json_file(j, out_path);
    return 0;
}

int cmd_detect_change(const std::string& series_path, const std::string& null_path, double h,
                      int lambda, bool on_raw, const std::string& out_path) {
    ordered_json series = read_json_file(series_path);
    ordered_json nulls = read_json_file(null_path);
    ordered_json j;
    j["schema_version"] = 1;
    for (const char* key : {"positive", "negative"}) {
        if (!series.contains(key) || !nulls.contains(key)) continue;
        Polarity p = std::string(key) == "positive" ? Polarity::positive : Polarity::negative;
        ValueSeries smoothed = value_series_from_json(series[key]["smoothed"]);
        WindowSeries fine = series_from_json(series[key]["fine"]);
        CusumParams cp{nulls[key]["cusum_t"].get<double>(), nulls[key]["cusum_k"].get<double>(), h,
                       lambda};
        ValueSeries input = smoothed;
        if (on_raw) {
            input.offsets = fine.offsets;
            input.values = fine.mean_valence;
        }
        ChangeReport cus = cusum(input, cp);
        ChangeReport ci = ci_divergence(bootstrap_from_json(nulls[key]["observed"]),
                                        bootstrap_from_json(nulls[key]["null"]));
        ChangeReport med = median_excursion(smoothed, p);
        auto baseline = baseline_ci(smoothed);
        j[key]["cusum_params"]["t"] = cp.reference_mean;
        j[key]["cusum_params"]["k"] = cp.allowance;
        j[key]["cusum_params"]["h"] = cp.threshold;
        j[key]["cusum_params"]["lambda"] = cp.min_run_minutes;
        j[key]["cusum"] = change_report_to_json(cus);
        j[key]["ci_divergence"] = change_report_to_json(ci);
        j[key]["median_excursion"] = change_report_to_json(med);
        j[key]["baseline_ci"] = {baseline.first, baseline.second};
        try {
            j[key]["estimate"] = duration_to_json(estimate_duration({cus, ci, med}));
        } catch (const std::exception&) {
            j[key]["estimate"] = nullptr;
        }
        j[key]["significant"] = cus.covering(0).has_value() || ci.covering(0).has_value();
    }
    write_json_file(j, out_path);
    return 0;
}

int cmd_fit(const std::string& series_path, const std::string& spans_path,
            const std::string& out_path) {
    ordered_json series = read_json_file(series_path);
    ordered_json spans = read_json_file(spans_path);
    ordered_json j;
    j["schema_version"] = 1;
    for (const char* key : {"positive", "negative"}) {
        if (!series.contains(key) || !spans.contains(key)) continue;
        ValueSeries smoothed = value_series_from_json(series[key]["smoothed"]);
        ChangeReport cus = change_report_from_json(spans[key]["cusum"]);
        auto span = cus.covering(0);
        if (!span) {
            j[key]["skipped"] = "no t0-covering CUSUM span";
            continue;
        }
        auto points = [&](int lo, int hi) {
            std::pair<std::vector<double>, std::vector<double>> out;
            for (std::size_t i = 0; i < smoothed.offsets.size(); ++i) {
                int k = smoothed.offsets[i];
                if (k < lo || k > hi || std::isnan(smoothed.values[i])) continue;
                out.first.push_back(k);
                out.second.push_back(smoothed.values[i]);
            }
            return out;
        };
        auto [tu, yu] = points(span->start_k, -1);
        auto [td, yd] = points(0, span->end_k);
        auto [ta, ya] = points(span->start_k, span->end_k);
        FitResult up = fit_exponential(tu, yu);
        FitResult dn = fit_exponential(td, yd);
        FitResult lor = fit_lorentzian(ta, ya);
        FitResult gau = fit_gaussian(ta, ya);
        FitResult qua = fit_quadratic(ta, ya);
        auto ranked = rank_models({RankedModel{"two_exponentials", up.sse + dn.sse, {up, dn}},
                                   RankedModel{"lorentzian", lor.sse, {lor}},
                                   RankedModel{"gaussian", gau.sse, {gau}},
                                   RankedModel{"quadratic", qua.sse, {qua}}});
        j[key]["segment"] = {span->start_k, span->end_k};
        j[key]["ramp_up"] = fit_to_json(up);
        j[key]["ramp_down"] = fit_to_json(dn);
        ordered_json ranking = ordered_json::array();
        for (const auto& rm : ranked) {
            ordered_json o;
            o["model"] = rm.name;
            o["sse"] = rm.sse;
            ordered_json fits = ordered_json::array();
            for (const auto& f : rm.fits) fits.push_back(fit_to_json(f));
            o["fits"] = std::move(fits);
            ranking.push_back(std::move(o));
        }
        j[key]["ranking"] = std::move(ranking);
        if (dn.params.at("lambda") < 0 && dn.params.at("A") != 0) {
            HalfLife hl = half_life(dn, span->end_k);
            j[key]["half_life"]["minutes"] = hl.minutes;
            j[key]["half_life"]["peak_value"] = hl.peak_value;
            j[key]["half_life"]["end_value"] = hl.end_value;
        } else {
            j[key]["half_life"] = nullptr;
        }
    }
    write_json_file(j, out_path);
    return 0;
}

int cmd_peaks(const std::string& cohorts_path, const std::string& change_path,
              const std::string& out_path) {
    Cohort pos, neg;
    FilterReport freport;
    load_cohorts(cohorts_path, pos, neg, freport);
    ordered_json change = read_json_file(change_path);
    ordered_json j;
    j["schema_version"] = 1;
    for (Cohort* c : {&pos, &neg}) {
        const char* key = to_string(c->polarity);
        if (c->timelines.empty() || !change.contains(key)) continue;
        auto span = change_report_from_json(change[key]["cusum"]).covering(0);
        if (!span) {
            j[key]["skipped"] = "no t0-covering CUSUM span";
            continue;
        }
        PeakExtraction pe = peak_values(*c, span->start_k, span->end_k);
        ordered_json plist = ordered_json::array();
        for (const auto& pk : pe.peaks) {
            ordered_json o;
            o["subject_id"] = pk.subject_id;
            o["peak_z"] = pk.peak_z;
            plist.push_back(std::move(o));
        }
        j[key]["polarity"] = key;
        j[key]["span"] = {span->start_k, span->end_k};
        j[key]["peaks"] = std::move(plist);
        j[key]["omitted_no_messages"] = pe.omitted_no_messages;
        j[key]["omitted_degenerate"] = pe.omitted_degenerate;
    }
    write_json_file(j, out_path);
    return 0;
}

int cmd_gmm(const std::string& peaks_path, int kmax, std::uint64_t seed,
            const std::string& out_path) {
    ordered_json peaks = read_json_file(peaks_path);
    ordered_json j;
    j["schema_version"] = 1;
    for (const char* key : {"positive", "negative"}) {
        if (!peaks.contains(key) || !peaks[key].contains("peaks")) continue;
        Polarity p = std::string(key) == "positive" ? Polarity::positive : Polarity::negative;
        std::vector<PeakValue> pv;
        std::vector<double> z;
        for (const auto& o : peaks[key]["peaks"]) {
            pv.push_back(PeakValue{o.at("subject_id").get<std::string>(), o.at("peak_z").get<double>()});
            z.push_back(pv.back().peak_z);
        }
        if (z.size() < static_cast<std::size_t>(3 * kmax + 1)) {
            j[key]["skipped"] = "too few peak values";
            continue;
        }
        KSelection sel = select_k(z, kmax, seed);
        std::sort(z.begin(), z.end());
        j[key]["peak_count"] = z.size();
        j[key]["peak_median"] = percentile_nearest_rank(z, 50.0);
        j[key]["peak_ci95"] = {percentile_nearest_rank(z, 2.5), percentile_nearest_rank(z, 97.5)};
        j[key]["contrary_fraction"] = contrary_fraction(pv, p);
        j[key]["selected_k"] = sel.k;
        j[key]["k_aic"] = sel.k_aic;
        j[key]["k_bic"] = sel.k_bic;
        ordered_json fits = ordered_json::array();
        for (const auto& g : sel.fits) fits.push_back(gmm_to_json(g));
        j[key]["fits"] = std::move(fits);
        j[key]["selected"] = gmm_to_json(sel.fits[static_cast<std::size_t>(sel.k - 1)]);
    }
    write_json_file(j, out_path);
    return 0;
}

int cmd_rdd(const std::string& male_path, const std::string& female_path,
            const std::string& out_path) {
    ordered_json mj = read_json_file(male_path);
    ordered_json fj = read_json_file(female_path);
    ordered_json j;
    j["schema_version"] = 1;
    for (const char* key : {"positive", "negative"}) {
        if (!mj.contains(key) || !fj.contains(key)) continue;
        WindowSeries m = series_from_json(mj[key]["coarse"]);
        WindowSeries f = series_from_json(fj[key]["coarse"]);
        ValueSeries diff = difference_series(m, f);
        RddResult rr = rdd_fit(diff);
        j[key]["difference"] = value_series_to_json(diff);
        j[key]["rdd"] = rdd_to_json(rr);
    }
    if (!j.contains("positive") && !j.contains("negative"))
        throw std::runtime_error("no common polarity between the two series files");
    write_json_file(j, out_path);
    return 0;
}

int cmd_synth(const std::string& spec_path, int subjects, std::uint64_t seed,
              const std::string& lexicon_path, const std::string& out_path) {
    SynthConfig cfg;
    if (!spec_path.empty()) cfg = SynthConfig::from_config(Config::parse_file(spec_path));
    Lexicon lex = load_lexicon(lexicon_path);
    GenerationStats stats = generate_cohort_file(cfg, lex, subjects, seed, out_path);
    std::fprintf(stderr, "synth: %zu subjects, %zu messages, max text quantization error %.4f\n",
                 stats.subjects, stats.messages, stats.max_quantization_error);
    return 0;
}

int cmd_table(const std::string& dir, const std::string& which, const std::string& out_path) {
    // Rebuild just enough of the bundle from the persisted artifacts.
    ResultBundle bundle;
    ordered_json fits, durations, rdd;
    auto try_read = [&](const char* name, ordered_json& into) {
        std::string p = dir + "/" + name;
        std::ifstream probe(p);
        if (probe) into = read_json_file(p);
    };
    try_read("fits.json", fits);
    try_read("durations.json", durations);
    try_read("rdd.json", rdd);
    for (const char* key : {"positive", "negative"}) {
        Polarity p = std::string(key) == "positive" ? Polarity::positive : Polarity::negative;
        auto& slot = p == Polarity::positive ? bundle.positive : bundle.negative;
        if (!fits.is_null() && fits.contains(key) && fits[key].contains("ranking")) {
            if (!slot) slot.emplace();
            slot->fine.polarity = p;
            for (const auto& o : fits[key]["ranking"]) {
                RankedModel rm;
                rm.name = o.at("model").get<std::string>();
                rm.sse = o.at("sse").get<double>();
                for (const auto& f : o.at("fits")) rm.fits.push_back(fit_from_json(f));
                slot->ranking.push_back(std::move(rm));
            }
        }
        if (!durations.is_null() && durations.contains(key) &&
            !durations[key]["estimate"].is_null()) {
            if (!slot) slot.emplace();
            slot->fine.polarity = p;
            DurationEstimate d;
            const auto& e = durations[key]["estimate"];
            for (const auto& [name, iv] : e.at("per_method").items())
                d.per_method[name] = Interval{iv.at("start_k").get<int>(), iv.at("end_k").get<int>(),
                                              iv.at("duration_minutes").get<int>()};
            d.excluded_methods = e.at("excluded_methods").get<std::vector<std::string>>();
            d.average_start = e.at("average_start").get<int>();
            d.average_end = e.at("average_end").get<int>();
            d.average_duration = e.at("average_duration").get<int>();
            slot->duration = d;
        }
    }
    if (!rdd.is_null() && rdd.contains("gender_spans")) {
        for (const auto& o : rdd["gender_spans"]) {
            GenderSpanRow row;
            row.label = o.at("group").get<std::string>();
            row.timelines = o.at("timelines").get<std::size_t>();
            auto iv_of = [](const ordered_json& x) -> std::optional<Interval> {
                if (x.is_null()) return std::nullopt;
                return Interval{x.at("start_k").get<int>(), x.at("end_k").get<int>(),
                                x.at("duration_minutes").get<int>()};
            };
            row.ci_span = iv_of(o.at("ci_divergence"));
            row.cusum_span = iv_of(o.at("cusum"));
            bundle.gender_spans.push_back(std::move(row));
        }
    }
    std::string csv = emit_table(bundle, which);
    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << csv;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"affectflow: event-aligned emotion dynamics analysis"};
    app.require_subcommand(1);

    // ingest
    std::vector<std::string> in_inputs;
    std::string in_out, in_report;
    auto* ingest = app.add_subcommand("ingest", "Parse and normalize JSONL message files");
    ingest->add_option("--input", in_inputs, "Input JSONL file(s) or glob")->required();
    ingest->add_option("--out", in_out, "Normalized corpus output")->required();
    ingest->add_option("--report", in_report, "Error report JSON");

    // detect
    std::string de_corpus, de_config, de_out, de_report;
    auto* detect = app.add_subcommand("detect", "Detect affect statements and build cohorts");
    detect->add_option("--corpus", de_corpus, "Corpus file from ingest")->required();
    detect->add_option("--config", de_config, "Pattern/filter config (TOML)");
    detect->add_option("--out", de_out, "Cohorts output")->required();
    detect->add_option("--report", de_report, "Filter report JSON");

    // score
    std::string sc_corpus, sc_lex, sc_out;
    auto* score_cmd = app.add_subcommand("score", "Score cohort messages with the valence lexicon");
    score_cmd->add_option("--corpus", sc_corpus, "Cohorts file from detect")->required();
    score_cmd->add_option("--lexicon", sc_lex, "Lexicon TSV")->required();
    score_cmd->add_option("--out", sc_out, "Scored cohorts output")->required();

    // epoch
    std::string ep_in, ep_out;
    int ep_window = 1, ep_smooth = 10;
    bool ep_keep = false;
    auto* epoch_cmd = app.add_subcommand("epoch", "Align on t0 and aggregate into windows");
    epoch_cmd->add_option("--in", ep_in, "Scored cohorts file")->required();
    epoch_cmd->add_option("--window", ep_window, "Window size in minutes");
    epoch_cmd->add_option("--smooth", ep_smooth, "Rolling mean span in minutes");
    epoch_cmd->add_flag("--keep-values", ep_keep, "Retain raw per-window score arrays");
    epoch_cmd->add_option("--out", ep_out, "Series JSON output")->required();

    // null
    std::string nu_cohorts, nu_series, nu_out;
    int nu_reps = 10000, nu_smooth = 10;
    std::uint64_t nu_seed = 42;
    bool nu_exclude = false;
    auto* null_cmd = app.add_subcommand("null", "Stratified null model and bootstrap CIs");
    null_cmd->add_option("--cohorts", nu_cohorts, "Scored cohorts file")->required();
    null_cmd->add_option("--series", nu_series, "Series JSON (needs --keep-values)")->required();
    null_cmd->add_option("--replicates", nu_reps, "Bootstrap replicates");
    null_cmd->add_option("--seed", nu_seed, "RNG seed");
    null_cmd->add_option("--smooth", nu_smooth, "Smoothing span for the CUSUM reference");
    null_cmd->add_flag("--exclude-window", nu_exclude, "Drop the +-6h window from the null pool");
    null_cmd->add_option("--out", nu_out, "Null JSON output")->required();

    // detect-change
    std::string ch_series, ch_null, ch_out;
    double ch_h = 0.01;
    int ch_lambda = 40;
    bool ch_raw = false;
    auto* change_cmd = app.add_subcommand("detect-change", "CUSUM, CI divergence and median spans");
    change_cmd->add_option("--series", ch_series, "Series JSON")->required();
    change_cmd->add_option("--null", ch_null, "Null JSON")->required();
    change_cmd->add_option("--H", ch_h, "CUSUM violation threshold");
    change_cmd->add_option("--lambda", ch_lambda, "Minimum anomaly length (minutes)");
    change_cmd->add_flag("--raw", ch_raw, "Run CUSUM on unsmoothed window means");
    change_cmd->add_option("--out", ch_out, "Change JSON output")->required();

    // fit
    std::string fi_series, fi_spans, fi_out;
    auto* fit_cmd = app.add_subcommand("fit", "Curve fits over the detected spans");
    fit_cmd->add_option("--series", fi_series, "Series JSON")->required();
    fit_cmd->add_option("--spans", fi_spans, "Change JSON with CUSUM spans")->required();
    fit_cmd->add_option("--out", fi_out, "Fits JSON output")->required();

    // peaks
    std::string pk_cohorts, pk_change, pk_out;
    auto* peaks_cmd = app.add_subcommand("peaks", "Per-subject peak z-scores inside the CUSUM span");
    peaks_cmd->add_option("--cohorts", pk_cohorts, "Scored cohorts file")->required();
    peaks_cmd->add_option("--change", pk_change, "Change JSON")->required();
    peaks_cmd->add_option("--out", pk_out, "Peaks JSON output")->required();

    // gmm
    std::string gm_peaks, gm_out;
    int gm_kmax = 5;
    std::uint64_t gm_seed = 42;
    auto* gmm_cmd = app.add_subcommand("gmm", "Gaussian mixture over peak z-scores");
    gmm_cmd->add_option("--peaks", gm_peaks, "Peaks JSON")->required();
    gmm_cmd->add_option("--kmax", gm_kmax, "Maximum component count");
    gmm_cmd->add_option("--seed", gm_seed, "RNG seed");
    gmm_cmd->add_option("--out", gm_out, "GMM JSON output")->required();

    // rdd
    std::string rd_male, rd_female, rd_out;
    auto* rdd_cmd = app.add_subcommand("rdd", "Regression discontinuity on male - female series");
    rdd_cmd->add_option("--male", rd_male, "Series JSON for male subjects")->required();
    rdd_cmd->add_option("--female", rd_female, "Series JSON for female subjects")->required();
    rdd_cmd->add_option("--out", rd_out, "RDD JSON output")->required();

    // synth
    std::string sy_spec, sy_lex = "data/affect_lexicon.txt", sy_out;
    int sy_subjects = 1000;
    std::uint64_t sy_seed = 7;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cohort with ground truth");
    synth_cmd->add_option("--spec", sy_spec, "Episode spec (TOML)");
    synth_cmd->add_option("--subjects", sy_subjects, "Subject count");
    synth_cmd->add_option("--seed", sy_seed, "RNG seed");
    synth_cmd->add_option("--lexicon", sy_lex, "Lexicon TSV used to compose texts");
    synth_cmd->add_option("--out", sy_out, "Output JSONL")->required();

    // run
    std::string ru_config;
    std::vector<std::string> ru_stages;
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a config file");
    run_cmd->add_option("--config", ru_config, "run.toml")->required();
    run_cmd->add_option("--stages", ru_stages, "Subset of stages to run")->delimiter(',');

    // table
    std::string tb_dir, tb_which, tb_out;
    auto* table_cmd = app.add_subcommand("table", "Emit a CSV table from a results directory");
    table_cmd->add_option("--dir", tb_dir, "Pipeline output directory")->required();
    table_cmd->add_option("--which", tb_which, "fits | durations | gender_spans")->required();
    table_cmd->add_option("--out", tb_out, "CSV path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(in_inputs, in_out, in_report);
        if (app.got_subcommand(detect)) return cmd_detect(de_corpus, de_config, de_out, de_report);
        if (app.got_subcommand(score_cmd)) return cmd_score(sc_corpus, sc_lex, sc_out);
        if (app.got_subcommand(epoch_cmd))
            return cmd_epoch(ep_in, ep_window, ep_smooth, ep_keep, ep_out);
        if (app.got_subcommand(null_cmd))
            return cmd_null(nu_cohorts, nu_series, nu_reps, nu_seed, nu_exclude, nu_smooth, nu_out);
        if (app.got_subcommand(change_cmd))
            return cmd_detect_change(ch_series, ch_null, ch_h, ch_lambda, ch_raw, ch_out);
        if (app.got_subcommand(fit_cmd)) return cmd_fit(fi_series, fi_spans, fi_out);
        if (app.got_subcommand(peaks_cmd)) return cmd_peaks(pk_cohorts, pk_change, pk_out);
        if (app.got_subcommand(gmm_cmd)) return cmd_gmm(gm_peaks, gm_kmax, gm_seed, gm_out);
        if (app.got_subcommand(rdd_cmd)) return cmd_rdd(rd_male, rd_female, rd_out);
        if (app.got_subcommand(synth_cmd))
            return cmd_synth(sy_spec, sy_subjects, sy_seed, sy_lex, sy_out);
        if (app.got_subcommand(run_cmd)) {
            RunConfig rc = RunConfig::from_file(ru_config);
            rc.stages = ru_stages;
            run_pipeline(rc);
            return 0;
        }
        if (app.got_subcommand(table_cmd)) return cmd_table(tb_dir, tb_which, tb_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "affectflow: %s\n", e.what());
        return 1;
    }
    return 0;
}
