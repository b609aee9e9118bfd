#include "affectflow/ingest.hpp"

#include "affectflow/rng.hpp"
#include "affectflow/timeutil.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace affectflow;

namespace {

std::string record(const std::string& subject, const std::string& id, const std::string& ts,
                   const std::string& text) {
    return "{\"subject_id\":\"" + subject + "\",\"message_id\":\"" + id + "\",\"utc_time\":\"" +
           ts + "\",\"tz_offset_minutes\":-300,\"text\":\"" + text + "\",\"is_repost\":false}";
}

} // namespace

TEST_CASE("three valid lines group into two timelines") {
    std::stringstream in;
    in << record("alice", "a1", "2012-03-05T14:00:00Z", "hello") << "\n";
    in << record("bob", "b1", "2012-03-05T15:00:00Z", "hi") << "\n";
    in << record("alice", "a2", "2012-03-05T13:00:00Z", "earlier") << "\n";
    IngestReport rep;
    Corpus corpus = parse_corpus(in, rep);
    REQUIRE(corpus.size() == 2);
    CHECK(rep.lines_parsed == 3);
    CHECK(rep.lines_malformed == 0);
    CHECK(corpus[0].subject_id == "alice");
    CHECK(corpus[0].messages.size() == 2);
    CHECK(corpus[0].messages[0].message_id == "a2"); // sorted by time
    CHECK(corpus[1].subject_id == "bob");
}

TEST_CASE("empty stream yields empty corpus and no errors") {
    std::stringstream in;
    IngestReport rep;
    Corpus corpus = parse_corpus(in, rep);
    CHECK(corpus.empty());
    CHECK(rep.lines_malformed == 0);
    CHECK(rep.lines_total == 0);
}

TEST_CASE("unparseable timestamp is skipped and counted, rest parses") {
    std::stringstream in;
    in << record("alice", "a1", "2012-03-05T14:00:00Z", "fine") << "\n";
    in << record("alice", "a2", "2012-13-45T99:00:00Z", "bad ts") << "\n";
    in << "this is not json\n";
    in << record("alice", "a3", "2012-03-05T16:00:00Z", "also fine") << "\n";
    IngestReport rep;
    Corpus corpus = parse_corpus(in, rep);
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].messages.size() == 2);
    CHECK(rep.lines_malformed == 2);
    CHECK(rep.lines_parsed == 2);
    REQUIRE(!rep.sample_errors.empty());
}

TEST_CASE("sort_and_dedupe") {
    std::int64_t t0 = 1336000000;
    SUBCASE("already sorted input is unchanged") {
        RawTimeline tl{"s", {testutil::make_message("s", "m1", t0, "a"),
                             testutil::make_message("s", "m2", t0 + 60, "b")}};
        RawTimeline before = tl;
        CHECK(sort_and_dedupe(tl) == 0);
        CHECK(tl == before);
    }
    SUBCASE("reversed five-message timeline sorts ascending") {
        RawTimeline tl{"s", {}};
        for (int i = 4; i >= 0; --i)
            tl.messages.push_back(testutil::make_message("s", "m" + std::to_string(i),
                                                         t0 + i * 60, "x"));
        CHECK(sort_and_dedupe(tl) == 0);
        for (int i = 0; i < 5; ++i) CHECK(tl.messages[i].utc_time == t0 + i * 60);
    }
    SUBCASE("duplicate message ids keep the earliest by time") {
        RawTimeline tl{"s", {testutil::make_message("s", "dup", t0 + 600, "later"),
                             testutil::make_message("s", "dup", t0, "earlier"),
                             testutil::make_message("s", "other", t0 + 60, "x")}};
        CHECK(sort_and_dedupe(tl) == 1);
        REQUIRE(tl.messages.size() == 2);
        CHECK(tl.messages[0].message_id == "dup");
        CHECK(tl.messages[0].text == "earlier");
    }
}

TEST_CASE("round-trip: parse(serialize(corpus)) == corpus") {
    Rng rng = Rng::stream(2024, 1);
    Corpus corpus;
    for (int s = 0; s < 5; ++s) {
        RawTimeline tl;
        tl.subject_id = "subj" + std::to_string(s);
        std::int64_t t = 1336000000 + static_cast<std::int64_t>(rng.uniform_index(100000));
        int n = 1 + static_cast<int>(rng.uniform_index(20));
        for (int i = 0; i < n; ++i) {
            Message m = testutil::make_message(tl.subject_id, "m" + std::to_string(i),
                                               t + i * 61, "text " + std::to_string(i));
            if (rng.uniform() < 0.3) m.tz_offset_minutes.reset();
            if (rng.uniform() < 0.2) m.is_repost = true;
            if (rng.uniform() < 0.3) m.gender_label = rng.uniform() < 0.5 ? Gender::male : Gender::female;
            if (rng.uniform() < 0.5) m.valence = rng.uniform(-1.0, 1.0);
            tl.messages.push_back(std::move(m));
        }
        corpus.push_back(std::move(tl));
    }
    std::stringstream buf;
    serialize_corpus(corpus, buf);
    IngestReport rep;
    Corpus back = parse_corpus(buf, rep);
    CHECK(rep.lines_malformed == 0);
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(back[i] == corpus[i]);
}

TEST_CASE("output message count equals valid lines minus duplicates") {
    std::stringstream in;
    in << record("a", "m1", "2012-03-05T14:00:00Z", "x") << "\n";
    in << record("a", "m1", "2012-03-05T15:00:00Z", "dup id") << "\n";
    in << record("a", "m2", "2012-03-05T16:00:00Z", "y") << "\n";
    in << "garbage\n";
    IngestReport rep;
    Corpus corpus = parse_corpus(in, rep);
    CHECK(rep.lines_parsed == 3);
    CHECK(rep.duplicates_dropped == 1);
    CHECK(corpus_message_count(corpus) == rep.lines_parsed - rep.duplicates_dropped);
}

TEST_CASE("rfc3339 parsing handles offsets and rejects nonsense") {
    CHECK(parse_rfc3339("2012-03-05T14:23:07Z").value() ==
          parse_rfc3339("2012-03-05T09:23:07-05:00").value());
    CHECK(parse_rfc3339("2012-03-05T14:23:07.250Z").value() ==
          parse_rfc3339("2012-03-05T14:23:07Z").value());
    CHECK(!parse_rfc3339("2012-02-30T00:00:00Z"));
    CHECK(!parse_rfc3339("not a time"));
    CHECK(!parse_rfc3339("2012-03-05T14:23:07"));
    std::int64_t t = parse_rfc3339("2016-02-29T23:59:59Z").value();
    CHECK(format_rfc3339(t) == "2016-02-29T23:59:59Z");
}
