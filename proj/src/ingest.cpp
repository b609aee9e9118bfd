#include "affectflow/ingest.hpp"

#include "affectflow/json_io.hpp"
#include "affectflow/timeutil.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace affectflow {

const char* to_string(Gender g) {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        default: return "unknown";
    }
}

std::optional<Gender> gender_from_string(const std::string& s) {
    if (s == "male") return Gender::male;
    if (s == "female") return Gender::female;
    if (s == "unknown" || s.empty()) return Gender::unknown;
    return std::nullopt;
}

namespace {

constexpr std::size_t kMaxTextChars = 2000;

std::optional<Message> parse_record(const std::string& line, std::string& error) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const std::exception& e) {
        error = std::string("invalid json: ") + e.what();
        return std::nullopt;
    }
    if (!j.is_object()) {
        error = "record is not an object";
        return std::nullopt;
    }
    Message m;
    try {
        m = message_from_json(j);
    } catch (const std::exception& e) {
        error = e.what();
        return std::nullopt;
    }
    if (m.subject_id.empty() || m.message_id.empty()) {
        error = "empty subject_id or message_id";
        return std::nullopt;
    }
    if (m.text.size() > kMaxTextChars) {
        error = "text exceeds 2000 chars";
        return std::nullopt;
    }
    return m;
}

void parse_stream_into(std::istream& in, std::map<std::string, RawTimeline>& by_subject,
                       IngestReport& report) {
    std::string line;
    while (std::getline(in, line)) {
        ++report.lines_total;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            --report.lines_total; // blank separators are not records
            continue;
        }
        std::string error;
        auto m = parse_record(line, error);
        if (!m) {
            ++report.lines_malformed;
            if (report.sample_errors.size() < 20)
                report.sample_errors.push_back("line " + std::to_string(report.lines_total) + ": " + error);
            continue;
        }
        ++report.lines_parsed;
        auto& tl = by_subject[m->subject_id];
        tl.subject_id = m->subject_id;
        tl.messages.push_back(std::move(*m));
    }
    if (in.bad()) throw std::runtime_error("corpus stream read failure");
}

} // namespace

Corpus parse_corpus(std::istream& in, IngestReport& report) {
    std::map<std::string, RawTimeline> by_subject;
    parse_stream_into(in, by_subject, report);
    Corpus corpus;
    corpus.reserve(by_subject.size());
    for (auto& [id, tl] : by_subject) {
        report.duplicates_dropped += sort_and_dedupe(tl);
        corpus.push_back(std::move(tl));
    }
    return corpus;
}

Corpus parse_corpus_files(const std::vector<std::string>& paths, IngestReport& report) {
    std::map<std::string, RawTimeline> by_subject;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open corpus file: " + path);
        parse_stream_into(in, by_subject, report);
    }
    Corpus corpus;
    corpus.reserve(by_subject.size());
    for (auto& [id, tl] : by_subject) {
        report.duplicates_dropped += sort_and_dedupe(tl);
        corpus.push_back(std::move(tl));
    }
    return corpus;
}

std::size_t sort_and_dedupe(RawTimeline& timeline) {
    std::stable_sort(timeline.messages.begin(), timeline.messages.end(),
                     [](const Message& a, const Message& b) { return a.utc_time < b.utc_time; });
    std::unordered_set<std::string> seen;
    seen.reserve(timeline.messages.size());
    std::size_t dropped = 0;
    std::vector<Message> kept;
    kept.reserve(timeline.messages.size());
    for (auto& m : timeline.messages) {
        if (seen.insert(m.message_id).second)
            kept.push_back(std::move(m));
        else
            ++dropped;
    }
    timeline.messages = std::move(kept);
    return dropped;
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& tl : corpus)
        for (const auto& m : tl.messages) out << message_to_json(m).dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    serialize_corpus(corpus, out);
}

Corpus load_corpus(const std::string& path, IngestReport& report) {
    return parse_corpus_files({path}, report);
}

std::size_t corpus_message_count(const Corpus& corpus) {
    std::size_t n = 0;
    for (const auto& tl : corpus) n += tl.messages.size();
    return n;
}

bool operator==(const Message& a, const Message& b) {
    return a.subject_id == b.subject_id && a.message_id == b.message_id &&
           a.utc_time == b.utc_time && a.tz_offset_minutes == b.tz_offset_minutes &&
           a.text == b.text && a.is_repost == b.is_repost && a.gender_label == b.gender_label &&
           a.valence == b.valence;
}

bool operator==(const RawTimeline& a, const RawTimeline& b) {
    return a.subject_id == b.subject_id && a.messages == b.messages;
}

} // namespace affectflow
