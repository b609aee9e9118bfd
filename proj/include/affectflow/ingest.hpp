#pragma once

#include "affectflow/message.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace affectflow {

/// Non-fatal problems seen while parsing a corpus stream.
struct IngestReport {
    std::size_t lines_total = 0;
    std::size_t lines_parsed = 0;
    std::size_t lines_malformed = 0;
    std::size_t duplicates_dropped = 0;
    std::vector<std::string> sample_errors; // first few, for the error report
};

/// Parse line-delimited JSON message records, grouping by subject and sorting
/// by time. Malformed lines are counted and skipped, never fatal; an unreadable
/// stream throws.
Corpus parse_corpus(std::istream& in, IngestReport& report);

/// Convenience: parse one or more JSONL files (later files append).
Corpus parse_corpus_files(const std::vector<std::string>& paths, IngestReport& report);

/// Sort ascending by utc_time and drop later duplicates of a message_id
/// (the earliest occurrence by time wins). Returns the dropped count.
std::size_t sort_and_dedupe(RawTimeline& timeline);

/// Serialize a corpus back to JSONL, one message per line, canonical field
/// order. parse_corpus(serialize_corpus(c)) == c for any valid corpus.
void serialize_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path, IngestReport& report);

std::size_t corpus_message_count(const Corpus& corpus);

bool operator==(const Message& a, const Message& b);
bool operator==(const RawTimeline& a, const RawTimeline& b);

} // namespace affectflow
