#include "affectflow/epoch.hpp"

#include "affectflow/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace affectflow {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void score_cohort(Cohort& cohort, const Lexicon& lexicon) {
    for (auto& tl : cohort.timelines) {
        for (auto& m : tl.messages) m.valence = score(m.text, lexicon);
        for (auto& m : tl.pool_outer) m.valence = score(m.text, lexicon);
    }
}

int WindowSeries::index_of(int offset) const {
    if (offsets.empty()) return -1;
    int first = offsets.front();
    if (offset < first || offset > offsets.back()) return -1;
    int d = offset - first;
    if (d % window_minutes != 0) return -1;
    return d / window_minutes;
}

WindowSeries window_series(const Cohort& cohort, int window_minutes, int span_minutes) {
    if (window_minutes < 1) throw std::invalid_argument("window_minutes must be >= 1");
    if (span_minutes % window_minutes != 0)
        throw std::invalid_argument("span must be a multiple of the window size");

    WindowSeries s;
    s.polarity = cohort.polarity;
    s.window_minutes = window_minutes;
    s.span_minutes = span_minutes;
    const int n = 2 * (span_minutes / window_minutes) + 1;
    s.offsets.resize(n);
    for (int i = 0; i < n; ++i) s.offsets[i] = -span_minutes + i * window_minutes;
    s.count.assign(n, 0);
    s.values.assign(n, {});

    const std::int64_t span_s = static_cast<std::int64_t>(span_minutes) * 60;
    for (const auto& tl : cohort.timelines) {
        for (const auto& m : tl.messages) {
            std::int64_t delta = m.utc_time - tl.anchor.t0;
            if (delta < -span_s || delta > span_s) continue;
            if (!m.valence) throw std::runtime_error("cohort is not scored (message " + m.message_id + ")");
            int k = window_start(offset_minutes(m.utc_time, tl.anchor.t0), window_minutes);
            int idx = (k + span_minutes) / window_minutes;
            s.values[idx].push_back(*m.valence);
        }
    }
    s.mean_valence.assign(n, kNaN);
    for (int i = 0; i < n; ++i) {
        s.count[i] = static_cast<std::int64_t>(s.values[i].size());
        if (s.count[i] > 0) {
            double sum = 0.0;
            for (double v : s.values[i]) sum += v;
            s.mean_valence[i] = sum / static_cast<double>(s.count[i]);
        }
    }
    return s;
}

namespace {

ValueSeries rolling_mean_impl(const std::vector<int>& offsets, const std::vector<double>& values,
                              int span) {
    if (span < 1) throw std::invalid_argument("rolling mean span must be >= 1");
    const int n = static_cast<int>(values.size());
    ValueSeries out;
    out.offsets = offsets;
    out.values.assign(n, kNaN);
    const int before = span / 2; // window [i - before, i + span - 1 - before]
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int cnt = 0;
        for (int j = i - before; j < i - before + span; ++j) {
            if (j < 0 || j >= n) continue;
            if (std::isnan(values[j])) continue;
            sum += values[j];
            ++cnt;
        }
        if (cnt > 0) out.values[i] = sum / cnt;
    }
    return out;
}

} // namespace

ValueSeries rolling_mean(const WindowSeries& series, int span_minutes) {
    if (span_minutes % series.window_minutes != 0)
        throw std::invalid_argument("smoothing span must be a multiple of the window size");
    return rolling_mean_impl(series.offsets, series.mean_valence,
                             span_minutes / series.window_minutes);
}

ValueSeries rolling_mean(const ValueSeries& series, int span_minutes) {
    return rolling_mean_impl(series.offsets, series.values, span_minutes);
}

std::optional<SubjectZSeries> subject_z(const AnchoredTimeline& timeline, int window_minutes,
                                        int span_minutes) {
    Cohort one{timeline.anchor.polarity, {timeline}};
    WindowSeries ws = window_series(one, window_minutes, span_minutes);

    std::vector<int> offsets;
    std::vector<double> vals;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (!ws.defined(i)) continue;
        offsets.push_back(ws.offsets[i]);
        vals.push_back(ws.mean_valence[i]);
        scored += static_cast<std::size_t>(ws.count[i]);
    }
    if (scored < 2 || vals.size() < 2) return std::nullopt;
    double m = mean(vals);
    double sd = sample_stdev(vals);
    if (sd == 0.0) return std::nullopt; // degenerate: constant series
    SubjectZSeries z;
    z.subject_id = timeline.subject_id;
    z.offsets = std::move(offsets);
    z.z.resize(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) z.z[i] = (vals[i] - m) / sd;
    return z;
}

PeakExtraction peak_values(const Cohort& cohort, int span_start, int span_end) {
    if (span_start > span_end) throw std::invalid_argument("empty peak span");
    PeakExtraction out;
    const bool take_max = cohort.polarity == Polarity::positive;
    for (const auto& tl : cohort.timelines) {
        auto zs = subject_z(tl);
        if (!zs) {
            ++out.omitted_degenerate;
            continue;
        }
        bool seen = false;
        double peak = 0.0;
        for (std::size_t i = 0; i < zs->offsets.size(); ++i) {
            int k = zs->offsets[i];
            if (k < span_start || k > span_end) continue;
            double v = zs->z[i];
            if (!seen || (take_max ? v > peak : v < peak)) {
                peak = v;
                seen = true;
            }
        }
        if (!seen) {
            ++out.omitted_no_messages;
            continue;
        }
        out.peaks.push_back(PeakValue{tl.subject_id, peak});
    }
    return out;
}

} // namespace affectflow
