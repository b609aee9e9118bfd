#include "affectflow/changepoint.hpp"

#include "affectflow/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace affectflow;

namespace {

ValueSeries series_of(const std::vector<double>& values, int first_offset = -360) {
    ValueSeries s;
    for (std::size_t i = 0; i < values.size(); ++i)
        s.offsets.push_back(first_offset + static_cast<int>(i));
    s.values = values;
    return s;
}

// Direct transliteration of the control-limit recursions, kept deliberately
// independent of the production code path.
void cusum_oracle(const std::vector<double>& x, double t, double k, std::vector<double>& up,
                  std::vector<double>& dn) {
    up.resize(x.size());
    dn.resize(x.size());
    double su = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        su = std::max(0.0, su + x[i] - (t + k));
        sl = std::min(0.0, sl + x[i] - (t - k));
        up[i] = su;
        dn[i] = sl;
    }
}

} // namespace

TEST_CASE("constant series at the reference mean produces no anomalies") {
    std::vector<double> x(721, 0.14);
    CusumParams p{0.14, 0.01, 0.01, 40};
    CusumTrace trace;
    ChangeReport r = cusum(series_of(x), p, &trace);
    CHECK(r.intervals.empty());
    for (double v : trace.upper) CHECK(v == 0.0);
    for (double v : trace.lower) CHECK(v == 0.0);
}

TEST_CASE("step series: upper anomaly starts within 3 minutes of the step") {
    // x = T for 100', then T + 10K for 60'
    const double T = 0.1, K = 0.005;
    std::vector<double> x(100, T);
    x.insert(x.end(), 60, T + 10 * K);
    ChangeReport r = cusum(series_of(x, -100), CusumParams{T, K, 0.01, 40});
    REQUIRE(r.intervals.size() == 1);
    CHECK(r.intervals[0].start_k >= 0);
    CHECK(r.intervals[0].start_k <= 3);
    CHECK(r.intervals[0].end_k == 59);
}

TEST_CASE("downward step produces a lower anomaly") {
    const double T = 0.1, K = 0.005;
    std::vector<double> x(100, T);
    x.insert(x.end(), 60, T - 10 * K);
    ChangeReport r = cusum(series_of(x, -100), CusumParams{T, K, 0.01, 40});
    REQUIRE(r.intervals.size() == 1);
    CHECK(r.intervals[0].start_k >= 0);
    CHECK(r.intervals[0].start_k <= 3);
}

TEST_CASE("recursions match the oracle bitwise on random series") {
    Rng rng = Rng::stream(7, 7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(721);
        for (auto& v : x) v = 0.12 + 0.01 * rng.gaussian();
        double t = 0.12, k = 0.004;
        CusumTrace trace;
        cusum(series_of(x), CusumParams{t, k, 0.01, 40}, &trace);
        std::vector<double> up, dn;
        cusum_oracle(x, t, k, up, dn);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(trace.upper[i] == up[i]); // bitwise
            CHECK(trace.lower[i] == dn[i]);
        }
    }
}

TEST_CASE("control limit signs: S+ >= 0 and S- <= 0 everywhere") {
    Rng rng = Rng::stream(8, 8);
    std::vector<double> x(500);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    CusumTrace trace;
    cusum(series_of(x, 0), CusumParams{0.0, 0.1, 0.01, 40}, &trace);
    for (double v : trace.upper) CHECK(v >= 0.0);
    for (double v : trace.lower) CHECK(v <= 0.0);
}

TEST_CASE("translation invariance: shifting the series and T together") {
    Rng rng = Rng::stream(9, 9);
    std::vector<double> x(300);
    for (auto& v : x) v = 0.1 + 0.02 * rng.gaussian();
    for (std::size_t i = 100; i < 160; ++i) x[i] += 0.05;
    ChangeReport a = cusum(series_of(x, -150), CusumParams{0.1, 0.01, 0.01, 40});
    std::vector<double> shifted = x;
    for (auto& v : shifted) v += 2.5;
    ChangeReport b = cusum(series_of(shifted, -150), CusumParams{2.6, 0.01, 0.01, 40});
    REQUIRE(a.intervals.size() == b.intervals.size());
    for (std::size_t i = 0; i < a.intervals.size(); ++i) {
        CHECK(a.intervals[i].start_k == b.intervals[i].start_k);
        CHECK(a.intervals[i].end_k == b.intervals[i].end_k);
    }
}

TEST_CASE("series shorter than the minimum run yields an empty report") {
    std::vector<double> x(30, 5.0);
    ChangeReport r = cusum(series_of(x, 0), CusumParams{0.0, 0.0, 0.01, 40});
    CHECK(r.intervals.empty());
}

TEST_CASE("baseline_ci") {
    SUBCASE("constant series gives a degenerate band") {
        std::vector<double> x(721, 0.42);
        auto [lo, hi] = baseline_ci(series_of(x));
        CHECK(lo == 0.42);
        CHECK(hi == 0.42);
    }
    SUBCASE("only the first three hours feed the estimate") {
        std::vector<double> x(721, 0.1);
        for (std::size_t i = 180; i < 721; ++i) x[i] = 0.9; // after -180'
        auto [lo, hi] = baseline_ci(series_of(x));
        CHECK(lo == 0.1);
        CHECK(hi == 0.1);
    }
    SUBCASE("percentiles are the 2.5th and 97.5th nearest-rank values") {
        std::vector<double> x;
        for (int i = 0; i < 180; ++i) x.push_back(i / 180.0);
        x.resize(721, 0.0);
        auto [lo, hi] = baseline_ci(series_of(x));
        // nearest-rank over 180 sorted values: ranks ceil(4.5)=5 and ceil(175.5)=176
        CHECK(lo == doctest::Approx(4.0 / 180.0));
        CHECK(hi == doctest::Approx(175.0 / 180.0));
    }
    SUBCASE("insufficient data is an error") {
        ValueSeries s = series_of({0.1}, -360);
        CHECK_THROWS(baseline_ci(s));
    }
}

TEST_CASE("median_excursion") {
    SUBCASE("triangular bump above the median over [-10, +10]") {
        std::vector<double> x(721, 0.0);
        // alternate tiny values so the median is well defined at 0
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 == 0) ? -0.001 : 0.0;
        for (int k = -10; k <= 10; ++k) {
            x[static_cast<std::size_t>(k + 360)] = 0.05 * (11.0 - std::abs(k)) / 11.0 + 0.001;
        }
        ChangeReport r = median_excursion(series_of(x), Polarity::positive);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0].start_k == -10);
        CHECK(r.intervals[0].end_k == 10);
        CHECK(r.intervals[0].duration_minutes == 21);
        // brute-force oracle: the run through 0 is tight on both sides
        std::vector<double> sorted = x;
        std::sort(sorted.begin(), sorted.end());
        double q2 = sorted[360];
        CHECK(x[static_cast<std::size_t>(r.intervals[0].start_k + 360)] > q2);
        CHECK(!(x[static_cast<std::size_t>(r.intervals[0].start_k - 1 + 360)] > q2));
        CHECK(!(x[static_cast<std::size_t>(r.intervals[0].end_k + 1 + 360)] > q2));
    }
    SUBCASE("value at t0 not beyond the median: empty report with a note") {
        std::vector<double> x(721, 0.0);
        for (int i = 0; i < 100; ++i) x[static_cast<std::size_t>(i)] = 1.0;
        ChangeReport r = median_excursion(series_of(x), Polarity::positive);
        CHECK(r.intervals.empty());
        CHECK(!r.notes.empty());
    }
    SUBCASE("interval always contains zero") {
        Rng rng = Rng::stream(10, 1);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x(721);
            for (auto& v : x) v = rng.gaussian();
            ChangeReport r = median_excursion(series_of(x), Polarity::positive);
            if (r.intervals.empty()) continue;
            REQUIRE(r.intervals.size() == 1);
            CHECK(r.intervals[0].covers(0));
        }
    }
    SUBCASE("negative polarity looks below the median") {
        std::vector<double> x(721);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 == 0) ? 0.001 : 0.0;
        for (int k = -5; k <= 3; ++k) x[static_cast<std::size_t>(k + 360)] = -0.05;
        ChangeReport r = median_excursion(series_of(x), Polarity::negative);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0].start_k == -5);
        CHECK(r.intervals[0].end_k == 3);
    }
}

TEST_CASE("estimate_duration reproduces the published average rows") {
    auto report = [](ChangeMethod m, int a, int b) {
        ChangeReport r;
        r.method = m;
        r.intervals.push_back(Interval{a, b, b - a + 1});
        return r;
    };
    SUBCASE("positive: average 94 minutes spanning [-32, +61]") {
        DurationEstimate est = estimate_duration({
            report(ChangeMethod::cusum, -38, 53),
            report(ChangeMethod::ci_divergence, -10, 20),
            report(ChangeMethod::median_excursion, -48, 109),
        });
        CHECK(est.average_start == -32);
        CHECK(est.average_end == 61);
        CHECK(est.average_duration == 94);
        CHECK(est.excluded_methods.empty());
    }
    SUBCASE("negative: average 85 minutes spanning [-76, +8]") {
        DurationEstimate est = estimate_duration({
            report(ChangeMethod::cusum, -63, 9),
            report(ChangeMethod::ci_divergence, -40, 0),
            report(ChangeMethod::median_excursion, -124, 14),
        });
        CHECK(est.average_start == -76);
        CHECK(est.average_end == 8);
        CHECK(est.average_duration == 85);
    }
    SUBCASE("three identical spans average to themselves") {
        DurationEstimate est = estimate_duration({
            report(ChangeMethod::cusum, -20, 30),
            report(ChangeMethod::ci_divergence, -20, 30),
            report(ChangeMethod::median_excursion, -20, 30),
        });
        CHECK(est.average_start == -20);
        CHECK(est.average_end == 30);
        CHECK(est.average_duration == 51);
    }
    SUBCASE("methods without a t0-covering interval are excluded and flagged") {
        ChangeReport empty;
        empty.method = ChangeMethod::ci_divergence;
        ChangeReport off;
        off.method = ChangeMethod::median_excursion;
        off.intervals.push_back(Interval{100, 150, 51});
        DurationEstimate est =
            estimate_duration({report(ChangeMethod::cusum, -10, 10), empty, off});
        CHECK(est.average_start == -10);
        CHECK(est.average_end == 10);
        CHECK(est.excluded_methods.size() == 2);
    }
    SUBCASE("no covering interval anywhere is an error") {
        ChangeReport empty;
        CHECK_THROWS(estimate_duration({empty}));
    }
}
