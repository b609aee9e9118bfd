#include "affectflow/epoch.hpp"

#include "affectflow/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace affectflow;
using testutil::make_timeline;

namespace {
const std::int64_t kT0 = 1336000000;
} // namespace

TEST_CASE("window assignment basics") {
    SUBCASE("one message at +3 minutes, 1-minute windows") {
        Cohort c{Polarity::positive, {make_timeline("s", kT0, {{3, 0.5}})}};
        WindowSeries ws = window_series(c, 1);
        int idx = ws.index_of(3);
        REQUIRE(idx >= 0);
        CHECK(ws.count[idx] == 1);
        CHECK(ws.mean_valence[idx] == doctest::Approx(0.5));
        CHECK(ws.offsets.size() == 721);
    }
    SUBCASE("non-anchor message exactly at t0 lands in window [0,1)") {
        Cohort c{Polarity::positive, {make_timeline("s", kT0, {{0, 0.25}})}};
        WindowSeries ws = window_series(c, 1);
        int idx = ws.index_of(0);
        CHECK(ws.count[idx] == 1);
    }
    SUBCASE("negative offsets floor toward minus infinity") {
        AnchoredTimeline tl = make_timeline("s", kT0, {});
        Message m = testutil::make_message("s", "m", kT0 - 90, "x"); // -1.5 minutes
        m.valence = 0.1;
        tl.messages.push_back(m);
        Cohort c{Polarity::positive, {tl}};
        WindowSeries ws = window_series(c, 1);
        CHECK(ws.count[ws.index_of(-2)] == 1);
        CHECK(ws.count[ws.index_of(-1)] == 0);
    }
}

TEST_CASE("brute-force binning oracle on random messages") {
    Rng rng = Rng::stream(41, 3);
    for (int window : {1, 5, 10, 15}) {
        AnchoredTimeline tl = make_timeline("s", kT0, {});
        std::map<int, std::pair<std::int64_t, double>> oracle; // start -> (count, sum)
        for (int i = 0; i < 1000; ++i) {
            std::int64_t delta =
                static_cast<std::int64_t>(rng.uniform_index(2 * 360 * 60 + 1)) - 360 * 60;
            double v = rng.uniform(-1.0, 1.0);
            Message m = testutil::make_message("s", "m" + std::to_string(i), kT0 + delta, "x");
            m.valence = v;
            tl.messages.push_back(m);
            // independent re-derivation: floor of minutes, then floor to the grid
            double minutes = std::floor(static_cast<double>(delta) / 60.0);
            int start = static_cast<int>(std::floor(minutes / window)) * window;
            auto& cell = oracle[start];
            cell.first += 1;
            cell.second += v;
        }
        Cohort c{Polarity::positive, {tl}};
        WindowSeries ws = window_series(c, window);
        std::int64_t total = 0;
        for (std::size_t i = 0; i < ws.size(); ++i) {
            total += ws.count[i];
            auto it = oracle.find(ws.offsets[i]);
            std::int64_t expect_n = it == oracle.end() ? 0 : it->second.first;
            CHECK(ws.count[i] == expect_n);
            if (expect_n > 0)
                CHECK(ws.mean_valence[i] ==
                      doctest::Approx(it->second.second / static_cast<double>(expect_n))
                          .epsilon(1e-12));
        }
        CHECK(total == 1000); // conservation
    }
}

TEST_CASE("mean equals arithmetic mean of retained values") {
    Cohort c{Polarity::positive,
             {make_timeline("s", kT0, {{2, 0.1}, {2, 0.2}, {2, 0.6}, {5, -0.4}})}};
    WindowSeries ws = window_series(c, 1);
    int idx = ws.index_of(2);
    REQUIRE(ws.count[idx] == 3);
    double manual = (0.1 + 0.2 + 0.6) / 3.0;
    CHECK(ws.mean_valence[idx] == doctest::Approx(manual).epsilon(1e-12));
    CHECK(ws.values[idx].size() == 3);
}

TEST_CASE("rolling_mean") {
    SUBCASE("constant series stays constant") {
        std::vector<std::pair<int, double>> pts;
        for (int k = -20; k <= 20; ++k) pts.push_back({k, 0.3});
        Cohort c{Polarity::positive, {make_timeline("s", kT0, pts)}};
        WindowSeries ws = window_series(c, 1);
        ValueSeries sm = rolling_mean(ws, 10);
        for (std::size_t i = 0; i < sm.values.size(); ++i) {
            if (std::isnan(sm.values[i])) continue;
            CHECK(sm.values[i] == doctest::Approx(0.3).epsilon(1e-12));
        }
    }
    SUBCASE("impulse spreads into a plateau of height 1/span") {
        // dense zero series with a unit impulse at k=0
        std::vector<std::pair<int, double>> pts;
        for (int k = -60; k <= 60; ++k) pts.push_back({k, k == 0 ? 1.0 : 0.0});
        Cohort c{Polarity::positive, {make_timeline("s", kT0, pts)}};
        WindowSeries ws = window_series(c, 1);
        ValueSeries sm = rolling_mean(ws, 10);
        // direct convolution oracle: with the [-5,+4] stencil, windows -4..+5
        // see the impulse
        int plateau = 0;
        for (std::size_t i = 0; i < sm.offsets.size(); ++i) {
            int k = sm.offsets[i];
            if (k < -30 || k > 30) continue;
            double expect = (k >= -4 && k <= 5) ? 0.1 : 0.0;
            if (expect > 0) ++plateau;
            CHECK(sm.values[i] == doctest::Approx(expect).epsilon(1e-12));
        }
        CHECK(plateau == 10);
    }
    SUBCASE("smoothing preserves a peak located at t0") {
        std::vector<std::pair<int, double>> pts;
        for (int k = -120; k <= 120; ++k)
            pts.push_back({k, 0.1 + 0.05 * std::exp(-std::abs(k) / 20.0)});
        Cohort c{Polarity::positive, {make_timeline("s", kT0, pts)}};
        WindowSeries ws = window_series(c, 1);
        ValueSeries sm = rolling_mean(ws, 10);
        double best = -1e9;
        int best_k = -999;
        for (std::size_t i = 0; i < sm.offsets.size(); ++i) {
            if (std::isnan(sm.values[i])) continue;
            if (sm.values[i] > best) {
                best = sm.values[i];
                best_k = sm.offsets[i];
            }
        }
        CHECK(std::abs(best_k) <= 1); // centered stencil keeps the peak at t0
    }
    SUBCASE("missing windows are skipped, not zero-filled") {
        Cohort c{Polarity::positive, {make_timeline("s", kT0, {{0, 0.5}, {1, 0.5}})}};
        WindowSeries ws = window_series(c, 1);
        ValueSeries sm = rolling_mean(ws, 10);
        CHECK(sm.values[ws.index_of(0)] == doctest::Approx(0.5));
        CHECK(std::isnan(sm.values[ws.index_of(200)]));
    }
    SUBCASE("span below one window is an error") {
        Cohort c{Polarity::positive, {make_timeline("s", kT0, {{0, 0.5}})}};
        WindowSeries ws = window_series(c, 1);
        CHECK_THROWS(rolling_mean(ws, 0));
    }
}

TEST_CASE("subject_z") {
    SUBCASE("two-point series standardizes to +-0.7071 with the sample deviation") {
        auto z = subject_z(make_timeline("s", kT0, {{-5, 0.0}, {5, 1.0}}));
        REQUIRE(z);
        REQUIRE(z->z.size() == 2);
        CHECK(z->z[0] == doctest::Approx(-0.70710678).epsilon(1e-6));
        CHECK(z->z[1] == doctest::Approx(0.70710678).epsilon(1e-6));
    }
    SUBCASE("constant series is degenerate") {
        CHECK(!subject_z(make_timeline("s", kT0, {{-5, 0.4}, {5, 0.4}, {9, 0.4}})));
    }
    SUBCASE("single message is degenerate") {
        CHECK(!subject_z(make_timeline("s", kT0, {{1, 0.4}})));
    }
    SUBCASE("random series standardizes to mean 0, sd 1") {
        Rng rng = Rng::stream(5, 5);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::pair<int, double>> pts;
            int n = 5 + static_cast<int>(rng.uniform_index(40));
            for (int i = 0; i < n; ++i)
                pts.push_back({-300 + static_cast<int>(rng.uniform_index(600)), rng.uniform(-1, 1)});
            auto z = subject_z(make_timeline("s", kT0, pts));
            if (!z) continue;
            double sum = 0, ss = 0;
            for (double v : z->z) sum += v;
            double m = sum / static_cast<double>(z->z.size());
            for (double v : z->z) ss += (v - m) * (v - m);
            double sd = std::sqrt(ss / static_cast<double>(z->z.size() - 1));
            CHECK(std::abs(m) < 1e-9);
            CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("peak_values") {
    SUBCASE("an impulse inside the span is the peak, at its closed-form z") {
        // n-1 equal points plus one outlier: the outlier's z is (n-1)/sqrt(n).
        std::vector<std::pair<int, double>> pts;
        for (int i = 1; i <= 9; ++i) pts.push_back({-300 + i * 10, 0.1});
        pts.push_back({5, 1.0});
        Cohort c{Polarity::positive, {make_timeline("s", kT0, pts)}};
        PeakExtraction pe = peak_values(c, -38, 53);
        REQUIRE(pe.peaks.size() == 1);
        CHECK(pe.peaks[0].peak_z == doctest::Approx(9.0 / std::sqrt(10.0)).epsilon(1e-9));
    }
    SUBCASE("negative cohort takes the minimum z") {
        std::vector<std::pair<int, double>> pts;
        for (int i = 1; i <= 9; ++i) pts.push_back({-300 + i * 10, 0.1});
        pts.push_back({5, -1.0});
        AnchoredTimeline tl = make_timeline("s", kT0, pts);
        tl.anchor.polarity = Polarity::negative;
        Cohort c{Polarity::negative, {tl}};
        PeakExtraction pe = peak_values(c, -38, 53);
        REQUIRE(pe.peaks.size() == 1);
        CHECK(pe.peaks[0].peak_z < -2.0);
    }
    SUBCASE("subjects with nothing inside the span are omitted and counted") {
        Cohort c{Polarity::positive,
                 {make_timeline("s1", kT0, {{-300, 0.1}, {-200, 0.9}, {-100, 0.4}}),
                  make_timeline("s2", kT0, {{-10, 0.1}, {0, 0.9}, {10, 0.4}})}};
        PeakExtraction pe = peak_values(c, -38, 53);
        CHECK(pe.peaks.size() == 1);
        CHECK(pe.omitted_no_messages == 1);
    }
    SUBCASE("degenerate subjects are omitted and counted") {
        Cohort c{Polarity::positive, {make_timeline("s1", kT0, {{0, 0.5}, {1, 0.5}})}};
        PeakExtraction pe = peak_values(c, -38, 53);
        CHECK(pe.peaks.empty());
        CHECK(pe.omitted_degenerate == 1);
    }
}
