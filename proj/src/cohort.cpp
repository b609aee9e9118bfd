#include "affectflow/cohort.hpp"

#include "affectflow/config.hpp"
#include "affectflow/json_io.hpp"
#include "affectflow/stats.hpp"
#include "affectflow/timeutil.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace affectflow {

FilterConfig FilterConfig::from_config(const Config& cfg) {
    FilterConfig f;
    f.outlier_percentile = cfg.get_double_or("filters.outlier_percentile", f.outlier_percentile);
    f.day_low_percentile = cfg.get_double_or("filters.day_low_percentile", f.day_low_percentile);
    f.day_high_percentile = cfg.get_double_or("filters.day_high_percentile", f.day_high_percentile);
    f.exclusion_window_hours =
        static_cast<int>(cfg.get_int_or("filters.exclusion_window_hours", f.exclusion_window_hours));
    f.analysis_window_minutes =
        static_cast<int>(cfg.get_int_or("filters.analysis_window_minutes", f.analysis_window_minutes));
    f.null_pool_hours = static_cast<int>(cfg.get_int_or("filters.null_pool_hours", f.null_pool_hours));
    return f;
}

std::vector<std::pair<std::string, AffectLabel>> scan_corpus(const Corpus& corpus,
                                                             const AffectDetector& detector,
                                                             ScanReport& report) {
    std::vector<std::pair<std::string, AffectLabel>> labels;
    for (const auto& tl : corpus) {
        for (const auto& m : tl.messages) {
            ++report.messages_seen;
            if (m.is_repost) {
                ++report.reposts_skipped;
                continue;
            }
            DetectedPattern hit;
            switch (detector.detect_ex(m.text, hit)) {
                case DetectOutcome::none:
                    break;
                case DetectOutcome::ambiguous:
                    ++report.ambiguous_dropped;
                    break;
                case DetectOutcome::match:
                    ++report.labels_found;
                    labels.emplace_back(
                        tl.subject_id,
                        AffectLabel{hit.polarity, hit.adjective, hit.booster, m.message_id, m.utc_time});
                    break;
            }
        }
    }
    return labels;
}

namespace {

struct SubjectState {
    const RawTimeline* timeline = nullptr;
    std::vector<AffectLabel> anchors; // time-ascending, shrinks as filters run
    std::optional<int> tz;            // first non-null message offset
    std::size_t nonrepost_messages = 0;
};

std::optional<int> message_tz(const Message& m, const SubjectState& st) {
    if (m.tz_offset_minutes) return m.tz_offset_minutes;
    return st.tz;
}

} // namespace

void build_cohorts(const Corpus& corpus,
                   const std::vector<std::pair<std::string, AffectLabel>>& labels,
                   const AffectDetector& detector, const FilterConfig& fcfg, Cohort& positive,
                   Cohort& negative, FilterReport& report) {
    positive = Cohort{Polarity::positive, {}};
    negative = Cohort{Polarity::negative, {}};
    report = FilterReport{};
    report.input_subjects = corpus.size();
    report.input_labels = labels.size();

    std::map<std::string, SubjectState> subjects;
    for (const auto& tl : corpus) {
        auto& st = subjects[tl.subject_id];
        st.timeline = &tl;
        for (const auto& m : tl.messages) {
            ++report.input_messages;
            if (m.is_repost) {
                ++report.f1_repost_messages; // (1) reposts never reach any later stage
                continue;
            }
            ++st.nonrepost_messages;
            if (!st.tz && m.tz_offset_minutes) st.tz = m.tz_offset_minutes;
        }
    }
    for (const auto& [subject_id, label] : labels) {
        auto it = subjects.find(subject_id);
        if (it == subjects.end()) throw std::runtime_error("label for unknown subject " + subject_id);
        it->second.anchors.push_back(label);
    }
    for (auto& [id, st] : subjects)
        std::sort(st.anchors.begin(), st.anchors.end(),
                  [](const AffectLabel& a, const AffectLabel& b) { return a.t0 < b.t0; });

    // (2) subjects posting a larger share of affect statements than the
    // outlier percentile across expressing subjects.
    {
        std::vector<double> fractions;
        for (const auto& [id, st] : subjects)
            if (!st.anchors.empty() && st.nonrepost_messages > 0)
                fractions.push_back(static_cast<double>(st.anchors.size()) /
                                    static_cast<double>(st.nonrepost_messages));
        if (!fractions.empty()) {
            double cutoff = percentile_nearest_rank_unsorted(fractions, fcfg.outlier_percentile);
            for (auto& [id, st] : subjects) {
                if (st.anchors.empty() || st.nonrepost_messages == 0) continue;
                double f = static_cast<double>(st.anchors.size()) /
                           static_cast<double>(st.nonrepost_messages);
                if (f > cutoff) {
                    ++report.f2_outlier_subjects;
                    report.f2_anchors_removed += st.anchors.size();
                    st.anchors.clear();
                }
            }
        }
    }

    // (5) subjects without timezone information. Applied before the day
    // filter, which buckets anchors by subject-local calendar day.
    for (auto& [id, st] : subjects) {
        if (st.anchors.empty()) continue;
        if (!st.tz) {
            ++report.f5_no_timezone_subjects;
            report.f5_anchors_removed += st.anchors.size();
            st.anchors.clear();
        }
    }

    // (3) anchors on days with unusually few or many affect statements.
    {
        std::map<std::int64_t, std::size_t> day_counts;
        for (const auto& [id, st] : subjects)
            for (const auto& a : st.anchors)
                day_counts[day_of(a.t0 + static_cast<std::int64_t>(*st.tz) * 60)]++;
        if (!day_counts.empty()) {
            std::vector<double> counts;
            counts.reserve(day_counts.size());
            for (const auto& [day, n] : day_counts) counts.push_back(static_cast<double>(n));
            std::sort(counts.begin(), counts.end());
            double lo = percentile_nearest_rank(counts, fcfg.day_low_percentile);
            double hi = percentile_nearest_rank(counts, fcfg.day_high_percentile);
            for (auto& [id, st] : subjects) {
                if (st.anchors.empty()) continue;
                std::vector<AffectLabel> kept;
                for (auto& a : st.anchors) {
                    auto n = static_cast<double>(
                        day_counts[day_of(a.t0 + static_cast<std::int64_t>(*st.tz) * 60)]);
                    if (n < lo || n > hi)
                        ++report.f3_unusual_day_anchors;
                    else
                        kept.push_back(std::move(a));
                }
                st.anchors = std::move(kept);
            }
        }
    }

    // (4) residual self-report phrasing: non-anchor messages still containing
    // a prefix are stripped from every window and pool. Counted over subjects
    // that still carry at least one anchor.
    std::unordered_set<std::string> stripped_ids; // message_ids, unique per corpus
    for (auto& [id, st] : subjects) {
        if (st.anchors.empty()) continue;
        std::unordered_set<std::string> anchor_ids;
        for (const auto& a : st.anchors) anchor_ids.insert(a.message_id);
        for (const auto& m : st.timeline->messages) {
            if (m.is_repost || anchor_ids.count(m.message_id)) continue;
            if (detector.contains_prefix(m.text)) {
                if (stripped_ids.insert(m.message_id).second) ++report.f4_prefix_messages;
            }
        }
    }

    // (6) anchors with another surviving anchor of the same subject within
    // the exclusion window; both sides of a crowded pair are dropped.
    {
        const std::int64_t window = static_cast<std::int64_t>(fcfg.exclusion_window_hours) * 3600;
        for (auto& [id, st] : subjects) {
            if (st.anchors.size() < 2) continue;
            std::vector<bool> crowded(st.anchors.size(), false);
            for (std::size_t i = 0; i + 1 < st.anchors.size(); ++i) {
                if (st.anchors[i + 1].t0 - st.anchors[i].t0 <= window) {
                    crowded[i] = true;
                    crowded[i + 1] = true;
                }
            }
            std::vector<AffectLabel> kept;
            for (std::size_t i = 0; i < st.anchors.size(); ++i) {
                if (crowded[i])
                    ++report.f6_crowded_anchors;
                else
                    kept.push_back(std::move(st.anchors[i]));
            }
            st.anchors = std::move(kept);
        }
    }

    // Materialize the surviving anchors.
    const std::int64_t window_s = static_cast<std::int64_t>(fcfg.analysis_window_minutes) * 60;
    const std::int64_t pool_s = static_cast<std::int64_t>(fcfg.null_pool_hours) * 3600;
    for (auto& [id, st] : subjects) {
        if (st.anchors.empty()) continue;
        std::unordered_set<std::string> anchor_ids;
        for (const auto& a : st.anchors) anchor_ids.insert(a.message_id);
        for (const auto& anchor : st.anchors) {
            AnchoredTimeline atl;
            atl.subject_id = id;
            atl.anchor = anchor;
            atl.tz_offset_minutes = st.tz;
            for (const auto& m : st.timeline->messages) {
                if (m.message_id == anchor.message_id) atl.gender_label = m.gender_label;
                if (m.is_repost || anchor_ids.count(m.message_id) || stripped_ids.count(m.message_id))
                    continue;
                std::int64_t delta = m.utc_time - anchor.t0;
                if (delta < -pool_s || delta > pool_s) continue;
                Message copy = m;
                if (!copy.tz_offset_minutes) copy.tz_offset_minutes = message_tz(m, st);
                if (delta >= -window_s && delta <= window_s)
                    atl.messages.push_back(std::move(copy));
                else
                    atl.pool_outer.push_back(std::move(copy));
            }
            ++report.surviving_anchors;
            if (anchor.polarity == Polarity::positive)
                positive.timelines.push_back(std::move(atl));
            else
                negative.timelines.push_back(std::move(atl));
        }
    }
    report.positive_timelines = positive.timelines.size();
    report.negative_timelines = negative.timelines.size();
}

std::vector<std::string> check_filter_invariants(const Cohort& cohort,
                                                 const AffectDetector& detector,
                                                 const FilterConfig& fcfg) {
    std::set<std::string> violated;
    std::map<std::string, std::vector<std::int64_t>> anchors_by_subject;
    const std::int64_t window_s = static_cast<std::int64_t>(fcfg.analysis_window_minutes) * 60;
    const std::int64_t excl_s = static_cast<std::int64_t>(fcfg.exclusion_window_hours) * 3600;
    for (const auto& tl : cohort.timelines) {
        anchors_by_subject[tl.subject_id].push_back(tl.anchor.t0);
        if (tl.anchor.polarity != cohort.polarity) violated.insert("polarity_mismatch");
        if (!tl.tz_offset_minutes) violated.insert("5_no_timezone");
        for (const auto& m : tl.messages) {
            if (m.is_repost) violated.insert("1_reposts");
            if (m.message_id == tl.anchor.message_id) violated.insert("anchor_in_window");
            if (detector.contains_prefix(m.text)) violated.insert("4_residual_prefix");
            std::int64_t delta = m.utc_time - tl.anchor.t0;
            if (delta < -window_s || delta > window_s) violated.insert("window_bounds");
        }
    }
    for (auto& [id, t0s] : anchors_by_subject) {
        std::sort(t0s.begin(), t0s.end());
        for (std::size_t i = 0; i + 1 < t0s.size(); ++i)
            if (t0s[i + 1] - t0s[i] <= excl_s) violated.insert("6_crowded_anchors");
    }
    return {violated.begin(), violated.end()};
}

namespace {

ordered_json label_to_json(const AffectLabel& a) {
    ordered_json j;
    j["polarity"] = to_string(a.polarity);
    j["adjective"] = a.adjective;
    if (a.booster)
        j["booster"] = *a.booster;
    else
        j["booster"] = nullptr;
    j["message_id"] = a.message_id;
    j["t0"] = format_rfc3339(a.t0);
    return j;
}

AffectLabel label_from_json(const ordered_json& j) {
    AffectLabel a;
    a.polarity = j.at("polarity").get<std::string>() == "positive" ? Polarity::positive
                                                                   : Polarity::negative;
    a.adjective = j.at("adjective").get<std::string>();
    if (!j.at("booster").is_null()) a.booster = j["booster"].get<std::string>();
    a.message_id = j.at("message_id").get<std::string>();
    auto t = parse_rfc3339(j.at("t0").get<std::string>());
    if (!t) throw std::runtime_error("bad t0 in cohort file");
    a.t0 = *t;
    return a;
}

ordered_json cohort_to_json(const Cohort& c) {
    ordered_json j;
    j["polarity"] = to_string(c.polarity);
    ordered_json tls = ordered_json::array();
    for (const auto& tl : c.timelines) {
        ordered_json t;
        t["subject_id"] = tl.subject_id;
        t["anchor"] = label_to_json(tl.anchor);
        t["gender_label"] = to_string(tl.gender_label);
        if (tl.tz_offset_minutes)
            t["tz_offset_minutes"] = *tl.tz_offset_minutes;
        else
            t["tz_offset_minutes"] = nullptr;
        ordered_json msgs = ordered_json::array();
        for (const auto& m : tl.messages) msgs.push_back(message_to_json(m));
        t["messages"] = std::move(msgs);
        ordered_json pool = ordered_json::array();
        for (const auto& m : tl.pool_outer) pool.push_back(message_to_json(m));
        t["pool_outer"] = std::move(pool);
        tls.push_back(std::move(t));
    }
    j["timelines"] = std::move(tls);
    return j;
}

Cohort cohort_from_json(const ordered_json& j) {
    Cohort c;
    c.polarity = j.at("polarity").get<std::string>() == "positive" ? Polarity::positive
                                                                   : Polarity::negative;
    for (const auto& t : j.at("timelines")) {
        AnchoredTimeline tl;
        tl.subject_id = t.at("subject_id").get<std::string>();
        tl.anchor = label_from_json(t.at("anchor"));
        auto g = gender_from_string(t.at("gender_label").get<std::string>());
        tl.gender_label = g.value_or(Gender::unknown);
        if (!t.at("tz_offset_minutes").is_null())
            tl.tz_offset_minutes = t["tz_offset_minutes"].get<int>();
        for (const auto& m : t.at("messages")) tl.messages.push_back(message_from_json(m));
        for (const auto& m : t.at("pool_outer")) tl.pool_outer.push_back(message_from_json(m));
        c.timelines.push_back(std::move(tl));
    }
    return c;
}

ordered_json report_to_json(const FilterReport& r) {
    ordered_json j;
    j["input_subjects"] = r.input_subjects;
    j["input_messages"] = r.input_messages;
    j["input_labels"] = r.input_labels;
    j["applied_order"] = r.applied_order;
    j["filters"]["1_reposts"]["messages_removed"] = r.f1_repost_messages;
    j["filters"]["2_outlier_subjects"]["subjects_removed"] = r.f2_outlier_subjects;
    j["filters"]["2_outlier_subjects"]["anchors_removed"] = r.f2_anchors_removed;
    j["filters"]["5_no_timezone"]["subjects_removed"] = r.f5_no_timezone_subjects;
    j["filters"]["5_no_timezone"]["anchors_removed"] = r.f5_anchors_removed;
    j["filters"]["3_unusual_days"]["anchors_removed"] = r.f3_unusual_day_anchors;
    j["filters"]["4_residual_prefix"]["messages_removed"] = r.f4_prefix_messages;
    j["filters"]["6_crowded_anchors"]["anchors_removed"] = r.f6_crowded_anchors;
    j["surviving_anchors"] = r.surviving_anchors;
    j["positive_timelines"] = r.positive_timelines;
    j["negative_timelines"] = r.negative_timelines;
    return j;
}

FilterReport report_from_json(const ordered_json& j) {
    FilterReport r;
    r.input_subjects = j.at("input_subjects").get<std::size_t>();
    r.input_messages = j.at("input_messages").get<std::size_t>();
    r.input_labels = j.at("input_labels").get<std::size_t>();
    r.applied_order = j.at("applied_order").get<std::vector<std::string>>();
    const auto& f = j.at("filters");
    r.f1_repost_messages = f.at("1_reposts").at("messages_removed").get<std::size_t>();
    r.f2_outlier_subjects = f.at("2_outlier_subjects").at("subjects_removed").get<std::size_t>();
    r.f2_anchors_removed = f.at("2_outlier_subjects").at("anchors_removed").get<std::size_t>();
    r.f5_no_timezone_subjects = f.at("5_no_timezone").at("subjects_removed").get<std::size_t>();
    r.f5_anchors_removed = f.at("5_no_timezone").at("anchors_removed").get<std::size_t>();
    r.f3_unusual_day_anchors = f.at("3_unusual_days").at("anchors_removed").get<std::size_t>();
    r.f4_prefix_messages = f.at("4_residual_prefix").at("messages_removed").get<std::size_t>();
    r.f6_crowded_anchors = f.at("6_crowded_anchors").at("anchors_removed").get<std::size_t>();
    r.surviving_anchors = j.at("surviving_anchors").get<std::size_t>();
    r.positive_timelines = j.at("positive_timelines").get<std::size_t>();
    r.negative_timelines = j.at("negative_timelines").get<std::size_t>();
    return r;
}

} // namespace

void save_cohorts(const Cohort& positive, const Cohort& negative, const FilterReport& report,
                  const std::string& path) {
    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "cohorts";
    j["filter_report"] = report_to_json(report);
    j["positive"] = cohort_to_json(positive);
    j["negative"] = cohort_to_json(negative);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cohorts file: " + path);
    out << j.dump(2) << '\n';
}

void load_cohorts(const std::string& path, Cohort& positive, Cohort& negative,
                  FilterReport& report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cohorts file: " + path);
    ordered_json j = ordered_json::parse(in);
    if (j.value("kind", "") != "cohorts")
        throw std::runtime_error(path + " is not a cohorts file");
    positive = cohort_from_json(j.at("positive"));
    negative = cohort_from_json(j.at("negative"));
    report = report_from_json(j.at("filter_report"));
}

} // namespace affectflow
