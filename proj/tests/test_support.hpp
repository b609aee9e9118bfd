#pragma once

#include "affectflow/cohort.hpp"
#include "affectflow/ingest.hpp"
#include "affectflow/sentiment.hpp"
#include "affectflow/timeutil.hpp"

#include <string>
#include <vector>

#ifndef AFFECTFLOW_SOURCE_DIR
#define AFFECTFLOW_SOURCE_DIR "."
#endif

namespace testutil {

inline std::string fixture_path(const std::string& name) {
    return std::string(AFFECTFLOW_SOURCE_DIR) + "/tests/fixtures/" + name;
}

inline std::string data_path(const std::string& name) {
    return std::string(AFFECTFLOW_SOURCE_DIR) + "/data/" + name;
}

inline const affectflow::Lexicon& shared_lexicon() {
    static const affectflow::Lexicon lex =
        affectflow::load_lexicon(data_path("affect_lexicon.txt"));
    return lex;
}

inline affectflow::Message make_message(const std::string& subject, const std::string& id,
                                        std::int64_t utc, const std::string& text,
                                        int tz = -300) {
    affectflow::Message m;
    m.subject_id = subject;
    m.message_id = id;
    m.utc_time = utc;
    m.tz_offset_minutes = tz;
    m.text = text;
    return m;
}

/// A single-subject scored timeline with messages at fixed minute offsets.
inline affectflow::AnchoredTimeline make_timeline(const std::string& subject, std::int64_t t0,
                                                  const std::vector<std::pair<int, double>>& at) {
    affectflow::AnchoredTimeline tl;
    tl.subject_id = subject;
    tl.anchor = affectflow::AffectLabel{affectflow::Polarity::positive, "happy", std::nullopt,
                                        subject + "-a", t0};
    tl.tz_offset_minutes = -300;
    int seq = 0;
    for (auto [offset_min, score] : at) {
        affectflow::Message m =
            make_message(subject, subject + "-m" + std::to_string(seq++), t0 + offset_min * 60,
                         "synthetic");
        m.valence = score;
        tl.messages.push_back(std::move(m));
    }
    return tl;
}

} // namespace testutil
