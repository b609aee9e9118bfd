#include "affectflow/sentiment.hpp"

#include "affectflow/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace affectflow;

TEST_CASE("load_lexicon") {
    SUBCASE("three-row file loads three entries") {
        std::string path = "/tmp/affectflow_lex3.txt";
        std::ofstream(path) << "alpha\t1.0\nbeta\t-2.0\ngamma\t0.5\n";
        Lexicon lex = load_lexicon(path);
        CHECK(lex.entries.size() == 3);
        CHECK(lex.warnings.empty());
        std::remove(path.c_str());
    }
    SUBCASE("duplicate token: last wins with a warning") {
        std::string path = "/tmp/affectflow_lexdup.txt";
        std::ofstream(path) << "alpha\t1.0\nbeta\t2.0\nalpha\t-1.0\n";
        Lexicon lex = load_lexicon(path);
        CHECK(lex.entries.size() == 2);
        CHECK(lex.entries.at("alpha") == -1.0);
        CHECK(lex.warnings.size() == 1);
        std::remove(path.c_str());
    }
    SUBCASE("missing file and malformed rows are fatal") {
        CHECK_THROWS(load_lexicon("/tmp/no_such_lexicon_file.txt"));
        std::string path = "/tmp/affectflow_lexbad.txt";
        std::ofstream(path) << "alpha\t1.0\nno_tab_here\n";
        CHECK_THROWS_WITH_AS(load_lexicon(path), doctest::Contains(":2:"), std::runtime_error);
        std::remove(path.c_str());
    }
    SUBCASE("shipped lexicon: entry count equals file row count") {
        const auto& lex = testutil::shared_lexicon();
        std::ifstream in(testutil::data_path("affect_lexicon.txt"));
        std::size_t rows = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') ++rows;
        CHECK(lex.entries.size() == rows);
        CHECK(lex.warnings.empty()); // no duplicates shipped
    }
}

TEST_CASE("score: spec examples") {
    const auto& lex = testutil::shared_lexicon();
    CHECK(score("good", lex) > 0.0);
    CHECK(score("not good", lex) < 0.0);
    CHECK(score("", lex) == 0.0);
    CHECK(std::abs(score("GREAT!!!", lex)) > std::abs(score("great", lex)));
}

TEST_CASE("score: modifier mechanics") {
    const auto& lex = testutil::shared_lexicon();
    // booster amplifies toward the token sign
    CHECK(score("very good", lex) > score("good", lex));
    CHECK(score("very bad", lex) < score("bad", lex));
    // dampener shrinks magnitude
    CHECK(score("slightly good", lex) < score("good", lex));
    CHECK(score("slightly good", lex) > 0.0);
    // negation flips within a three-token lookback
    CHECK(score("not really that good", lex) < 0.0);
    // but not beyond it
    CHECK(score("not a b c good", lex) > 0.0);
    // all-caps token gains emphasis
    CHECK(score("BAD", lex) < score("bad", lex));
    // trailing exclamation emphasis caps at four
    CHECK(score("good!!!!", lex) == score("good!!!!!!!", lex));
    // exclamations alone never create sentiment
    CHECK(score("!!!!", lex) == 0.0);
}

TEST_CASE("score range property on random token soup") {
    const auto& lex = testutil::shared_lexicon();
    std::vector<std::string> vocab;
    for (const auto& [token, rating] : lex.entries) vocab.push_back(token);
    for (const auto& [token, inc] : lex.boosters) vocab.push_back(token);
    vocab.insert(vocab.end(), {"not", "never", "today", "x", "!"});
    Rng rng = Rng::stream(99, 7);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        int len = 1 + static_cast<int>(rng.uniform_index(12));
        for (int i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += vocab[rng.uniform_index(vocab.size())];
        }
        double v = score(text, lex);
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
        CHECK(v == score(text, lex)); // determinism
    }
}

TEST_CASE("monotonicity: appending a positive token never lowers the score") {
    const auto& lex = testutil::shared_lexicon();
    const std::string texts[] = {"", "good", "bad day", "calm calm", "terrible news today"};
    for (const auto& base : texts) {
        double before = score(base, lex);
        double after = score(base.empty() ? "nice" : base + " nice", lex);
        CHECK(after >= before);
    }
}

TEST_CASE("the ten anchor adjectives have the right polarity") {
    const auto& lex = testutil::shared_lexicon();
    for (const char* w : {"good", "happy", "great", "awesome"}) CHECK(score(w, lex) > 0.0);
    for (const char* w : {"bad", "unhappy", "sad", "terrible", "horrible", "awful"})
        CHECK(score(w, lex) < 0.0);
}

TEST_CASE("raw_sum_for_score inverts the normalization") {
    for (double v : {-0.9, -0.5, -0.1, 0.0, 0.1, 0.44, 0.8}) {
        double s = raw_sum_for_score(v);
        CHECK(s / std::sqrt(s * s + vader::kNormalizationAlpha) == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK_THROWS(raw_sum_for_score(1.0));
}
