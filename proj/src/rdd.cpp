#include "affectflow/rdd.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace affectflow {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

LineFit ols_line(const std::vector<double>& t, const std::vector<double>& y) {
    const int n = static_cast<int>(t.size());
    if (n < 3) throw std::invalid_argument("need at least 3 windows per side");
    double st = 0, sy = 0;
    for (int i = 0; i < n; ++i) {
        st += t[i];
        sy += y[i];
    }
    const double tbar = st / n, ybar = sy / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (t[i] - tbar) * (t[i] - tbar);
        sxy += (t[i] - tbar) * (y[i] - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("degenerate side: constant offsets");

    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * tbar;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = y[i] - (f.intercept + f.slope * t[i]);
        sse += r * r;
    }
    const double sigma2 = sse / (n - 2);
    f.slope_se = std::sqrt(sigma2 / sxx);
    f.intercept_se = std::sqrt(sigma2 * (1.0 / n + tbar * tbar / sxx)); // prediction SE at t = 0
    boost::math::students_t dist(n - 2);
    f.t_critical = boost::math::quantile(dist, 0.975);
    return f;
}

} // namespace

ValueSeries difference_series(const WindowSeries& male, const WindowSeries& female) {
    if (male.offsets != female.offsets)
        throw std::invalid_argument("male and female series are on different window grids");
    ValueSeries out;
    out.offsets = male.offsets;
    out.values.assign(male.offsets.size(), kNaN);
    for (std::size_t i = 0; i < male.offsets.size(); ++i) {
        if (!male.defined(i) || !female.defined(i)) continue;
        out.values[i] = male.mean_valence[i] - female.mean_valence[i];
    }
    return out;
}

RddResult rdd_fit(const ValueSeries& diff, int t0) {
    std::vector<double> t_pre, y_pre, t_post, y_post;
    for (std::size_t i = 0; i < diff.offsets.size(); ++i) {
        if (std::isnan(diff.values[i])) continue;
        if (diff.offsets[i] < t0) {
            t_pre.push_back(diff.offsets[i]);
            y_pre.push_back(diff.values[i]);
        } else {
            t_post.push_back(diff.offsets[i]);
            y_post.push_back(diff.values[i]);
        }
    }
    RddResult r;
    r.pre = ols_line(t_pre, y_pre);
    r.post = ols_line(t_post, y_post);
    r.gap = r.post.predict(t0) - r.pre.predict(t0);

    // Prediction SEs at t0 (the intercept SEs are taken at t = 0; shift when
    // t0 differs).
    auto se_at = [](const LineFit& f, const std::vector<double>& t, const std::vector<double>& y,
                    double at) {
        const int n = f.n;
        double tbar = 0;
        for (double v : t) tbar += v;
        tbar /= n;
        double sxx = 0;
        for (double v : t) sxx += (v - tbar) * (v - tbar);
        double sse = 0;
        for (int i = 0; i < n; ++i) {
            double e = y[i] - f.predict(t[i]);
            sse += e * e;
        }
        double sigma2 = sse / (n - 2);
        return std::sqrt(sigma2 * (1.0 / n + (at - tbar) * (at - tbar) / sxx));
    };
    const double se_pre = se_at(r.pre, t_pre, y_pre, t0);
    const double se_post = se_at(r.post, t_post, y_post, t0);
    r.gap_se = std::sqrt(se_pre * se_pre + se_post * se_post);
    boost::math::students_t dist(r.pre.n + r.post.n - 4);
    r.gap_ci_half = boost::math::quantile(dist, 0.975) * r.gap_se;

    const double pre_lo = r.pre.predict(t0) - r.pre.t_critical * se_pre;
    const double pre_hi = r.pre.predict(t0) + r.pre.t_critical * se_pre;
    const double post_lo = r.post.predict(t0) - r.post.t_critical * se_post;
    const double post_hi = r.post.predict(t0) + r.post.t_critical * se_post;
    r.ci_overlap = pre_lo <= post_hi && post_lo <= pre_hi;
    return r;
}

namespace {

Cohort gender_subset(const Cohort& cohort, Gender g) {
    Cohort out;
    out.polarity = cohort.polarity;
    for (const auto& tl : cohort.timelines)
        if (tl.gender_label == g) out.timelines.push_back(tl);
    return out;
}

GenderSpanRow analyze_cell(const Cohort& cell, const std::string& label,
                           const GenderSpanParams& p) {
    GenderSpanRow row;
    row.label = label;
    row.timelines = cell.timelines.size();
    if (cell.timelines.empty()) return row;

    // CUSUM on the smoothed 1-minute series, referenced to the null model.
    WindowSeries fine = window_series(cell, 1);
    ValueSeries smoothed = rolling_mean(fine, p.smooth_minutes);
    NullSample null1 = build_null(cell, fine, p.seed);
    CusumParams cp = cusum_reference(null1, p.smooth_minutes, p.cusum_threshold, p.cusum_min_run);
    if (auto iv = cusum(smoothed, cp).covering(0)) row.cusum_span = *iv;

    // CI divergence at the coarser window size.
    WindowSeries coarse = window_series(cell, p.ci_window_minutes);
    NullSample nullc = build_null(cell, coarse, p.seed + 1);
    BootstrapResult obs = bootstrap_series(coarse, p.replicates, p.seed + 2);
    BootstrapResult nul = bootstrap_series(nullc, p.replicates, p.seed + 3);
    if (auto iv = ci_divergence(obs, nul).covering(0)) row.ci_span = *iv;
    return row;
}

} // namespace

std::vector<GenderSpanRow> gender_change_spans(const Cohort& positive, const Cohort& negative,
                                               const GenderSpanParams& params) {
    std::vector<GenderSpanRow> rows;
    rows.push_back(analyze_cell(gender_subset(positive, Gender::female), "Female+", params));
    rows.push_back(analyze_cell(gender_subset(positive, Gender::male), "Male+", params));
    rows.push_back(analyze_cell(gender_subset(negative, Gender::female), "Female-", params));
    rows.push_back(analyze_cell(gender_subset(negative, Gender::male), "Male-", params));
    return rows;
}

} // namespace affectflow
