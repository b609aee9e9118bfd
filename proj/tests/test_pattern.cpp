#include "affectflow/pattern.hpp"

#include "affectflow/cohort.hpp"
#include "affectflow/json_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

using namespace affectflow;

namespace {
const AffectDetector& detector() {
    static const AffectDetector d(PatternConfig::defaults());
    return d;
}
} // namespace

TEST_CASE("core pattern examples") {
    auto hit = detector().detect("I feel so happy today");
    REQUIRE(hit);
    CHECK(hit->polarity == Polarity::positive);
    CHECK(hit->adjective == "happy");
    REQUIRE(hit->booster);
    CHECK(*hit->booster == "so");

    CHECK(!detector().detect("I feel like a train hit me"));
    CHECK(!detector().detect("the weather is great"));

    auto neg = detector().detect("I'm feeling terrible");
    REQUIRE(neg);
    CHECK(neg->polarity == Polarity::negative);
    CHECK(neg->adjective == "terrible");
    CHECK(!neg->booster);
}

TEST_CASE("detect_affect_label is pure and deterministic") {
    const std::string text = "I am feeling really awesome tonight";
    auto a = detect_affect_label(text, PatternConfig::defaults());
    auto b = detect_affect_label(text, PatternConfig::defaults());
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->adjective == b->adjective);
    CHECK(a->booster == b->booster);
    CHECK(a->polarity == b->polarity);
}

TEST_CASE("config validation rejects overlapping or uppercase lists") {
    PatternConfig cfg = PatternConfig::defaults();
    cfg.positive_adjectives.push_back("sad");
    CHECK_THROWS(cfg.validate());
    cfg = PatternConfig::defaults();
    cfg.boosters.push_back("So");
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("default booster list has 46 entries") {
    CHECK(PatternConfig::defaults().boosters.size() == 46);
}

TEST_CASE("200-message hand-labeled fixture: exact agreement") {
    std::ifstream in(testutil::fixture_path("pattern_fixture.jsonl"));
    REQUIRE(in);
    std::string line;
    int n = 0, mismatches = 0;
    std::int64_t t = 1336000000;
    Corpus corpus;
    std::vector<bool> expected_scan;
    while (std::getline(in, line)) {
        ordered_json j = ordered_json::parse(line);
        const std::string text = j.at("text").get<std::string>();
        const bool repost = j.at("is_repost").get<bool>();
        ++n;

        DetectedPattern got;
        DetectOutcome outcome = detector().detect_ex(text, got);
        bool ok;
        if (j.at("expect").is_null()) {
            ok = outcome != DetectOutcome::match;
        } else {
            const auto& e = j["expect"];
            ok = outcome == DetectOutcome::match &&
                 std::string(to_string(got.polarity)) == e.at("polarity").get<std::string>() &&
                 got.adjective == e.at("adjective").get<std::string>() &&
                 (e.at("booster").is_null() ? !got.booster
                                            : got.booster == e["booster"].get<std::string>());
        }
        if (!ok) {
            ++mismatches;
            MESSAGE("pattern mismatch on: ", text);
        }

        RawTimeline tl;
        tl.subject_id = "fx" + std::to_string(n);
        Message m = testutil::make_message(tl.subject_id, "m", t + n * 60, text);
        m.is_repost = repost;
        tl.messages.push_back(std::move(m));
        corpus.push_back(std::move(tl));
        expected_scan.push_back(j.at("expect_scan").get<bool>());
    }
    CHECK(n == 200);
    CHECK(mismatches == 0);

    // Scan-level agreement: reposts and ambiguous texts yield no labels.
    ScanReport rep;
    auto labels = scan_corpus(corpus, detector(), rep);
    std::set<std::string> labeled;
    for (const auto& [sid, label] : labels) labeled.insert(sid);
    int scan_mismatch = 0;
    for (int i = 0; i < n; ++i) {
        bool got = labeled.count("fx" + std::to_string(i + 1)) > 0;
        if (got != expected_scan[static_cast<std::size_t>(i)]) {
            ++scan_mismatch;
            MESSAGE("scan mismatch on fixture line ", i + 1);
        }
    }
    CHECK(scan_mismatch == 0);
    CHECK(rep.reposts_skipped == 12);
}

TEST_CASE("scan_corpus basics") {
    std::int64_t t = 1336000000;
    SUBCASE("one subject, one match") {
        Corpus corpus{{"s1", {testutil::make_message("s1", "m1", t, "i feel great")}}};
        ScanReport rep;
        auto labels = scan_corpus(corpus, detector(), rep);
        REQUIRE(labels.size() == 1);
        CHECK(labels[0].first == "s1");
        CHECK(labels[0].second.adjective == "great");
        CHECK(labels[0].second.t0 == t);
    }
    SUBCASE("repost match yields no label") {
        Message m = testutil::make_message("s1", "m1", t, "i feel great");
        m.is_repost = true;
        Corpus corpus{{"s1", {m}}};
        ScanReport rep;
        CHECK(scan_corpus(corpus, detector(), rep).empty());
        CHECK(rep.reposts_skipped == 1);
    }
    SUBCASE("seven planted matches across five subjects") {
        Corpus corpus;
        const char* texts[7] = {"i feel good",     "i feel bad",      "i'm feeling happy",
                                "i am feeling sad", "i feel so great", "i feel awful",
                                "i feel very awesome"};
        const char* subjects[7] = {"a", "a", "b", "c", "d", "e", "e"};
        std::map<std::string, RawTimeline> by;
        for (int i = 0; i < 7; ++i) {
            auto& tl = by[subjects[i]];
            tl.subject_id = subjects[i];
            // keep anchors >24h apart so later filtering would not collapse them
            tl.messages.push_back(testutil::make_message(subjects[i], "m" + std::to_string(i),
                                                         t + i * 100000, texts[i]));
        }
        for (auto& [id, tl] : by) corpus.push_back(tl);
        ScanReport rep;
        CHECK(scan_corpus(corpus, detector(), rep).size() == 7);
    }
}

TEST_CASE("build_cohorts: 48-hour exclusion examples") {
    std::int64_t t = parse_rfc3339("2012-05-10T12:00:00Z").value();
    FilterConfig fcfg;
    SUBCASE("two anchors exactly 24h apart are both dropped") {
        Corpus corpus{{"s1",
                       {testutil::make_message("s1", "a1", t, "i feel happy"),
                        testutil::make_message("s1", "a2", t + 24 * 3600, "i feel great")}}};
        ScanReport srep;
        auto labels = scan_corpus(corpus, detector(), srep);
        REQUIRE(labels.size() == 2);
        Cohort pos, neg;
        FilterReport frep;
        build_cohorts(corpus, labels, detector(), fcfg, pos, neg, frep);
        CHECK(frep.f6_crowded_anchors == 2);
        CHECK(pos.timelines.empty());
        CHECK(neg.timelines.empty());
    }
    SUBCASE("two anchors 50h apart are kept as separate timelines") {
        Corpus corpus{{"s1",
                       {testutil::make_message("s1", "a1", t, "i feel happy"),
                        testutil::make_message("s1", "a2", t + 50 * 3600, "i feel great")}}};
        ScanReport srep;
        auto labels = scan_corpus(corpus, detector(), srep);
        Cohort pos, neg;
        FilterReport frep;
        build_cohorts(corpus, labels, detector(), fcfg, pos, neg, frep);
        CHECK(frep.f6_crowded_anchors == 0);
        CHECK(pos.timelines.size() == 2);
    }
}

TEST_CASE("filter fixture: per-filter counts match the hand tally") {
    IngestReport irep;
    Corpus corpus = load_corpus(testutil::fixture_path("filter_fixture.jsonl"), irep);
    REQUIRE(irep.lines_malformed == 0);
    REQUIRE(corpus.size() == 53);

    ScanReport srep;
    auto labels = scan_corpus(corpus, detector(), srep);
    CHECK(srep.labels_found == 60);
    CHECK(srep.reposts_skipped == 3);

    Cohort pos, neg;
    FilterReport rep;
    build_cohorts(corpus, labels, detector(), FilterConfig{}, pos, neg, rep);

    CHECK(rep.input_subjects == 53);
    CHECK(rep.input_messages == 559);
    CHECK(rep.input_labels == 60);
    CHECK(rep.f1_repost_messages == 3);
    CHECK(rep.f2_outlier_subjects == 1);
    CHECK(rep.f2_anchors_removed == 5);
    CHECK(rep.f5_no_timezone_subjects == 1);
    CHECK(rep.f5_anchors_removed == 1);
    CHECK(rep.f3_unusual_day_anchors == 10);
    CHECK(rep.f4_prefix_messages == 4);
    CHECK(rep.f6_crowded_anchors == 4);
    CHECK(rep.surviving_anchors == 40);
    CHECK(rep.positive_timelines == 21);
    CHECK(rep.negative_timelines == 19);

    // Every surviving timeline re-passes the six filter predicates.
    CHECK(check_filter_invariants(pos, detector(), FilterConfig{}).empty());
    CHECK(check_filter_invariants(neg, detector(), FilterConfig{}).empty());

    // Idempotence: re-running the filters over the filtered corpus changes
    // nothing (survivor fractions and day counts are uniform by design).
    Corpus again;
    std::map<std::string, RawTimeline> by;
    for (const Cohort* c : {&pos, &neg}) {
        for (const auto& tl : c->timelines) {
            auto& r = by[tl.subject_id];
            r.subject_id = tl.subject_id;
            for (const auto& orig : corpus)
                if (orig.subject_id == tl.subject_id)
                    for (const auto& m : orig.messages)
                        if (m.message_id == tl.anchor.message_id) r.messages.push_back(m);
            for (const auto& m : tl.messages) r.messages.push_back(m);
            for (const auto& m : tl.pool_outer) r.messages.push_back(m);
        }
    }
    for (auto& [id, tl] : by) {
        sort_and_dedupe(tl);
        again.push_back(tl);
    }
    ScanReport srep2;
    auto labels2 = scan_corpus(again, detector(), srep2);
    Cohort pos2, neg2;
    FilterReport rep2;
    build_cohorts(again, labels2, detector(), FilterConfig{}, pos2, neg2, rep2);
    CHECK(rep2.surviving_anchors == rep.surviving_anchors);
    CHECK(rep2.positive_timelines == rep.positive_timelines);
    CHECK(rep2.negative_timelines == rep.negative_timelines);
    CHECK(rep2.f2_outlier_subjects == 0);
    CHECK(rep2.f3_unusual_day_anchors == 0);
    CHECK(rep2.f6_crowded_anchors == 0);
}

TEST_CASE("empty corpus yields empty cohorts and a valid report") {
    Corpus corpus;
    Cohort pos, neg;
    FilterReport rep;
    build_cohorts(corpus, {}, detector(), FilterConfig{}, pos, neg, rep);
    CHECK(pos.timelines.empty());
    CHECK(neg.timelines.empty());
    CHECK(rep.input_subjects == 0);
    CHECK(rep.surviving_anchors == 0);
}
