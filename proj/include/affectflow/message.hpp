#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace affectflow {

enum class Gender { unknown, male, female };

const char* to_string(Gender g);
std::optional<Gender> gender_from_string(const std::string& s);

/// One timestamped text item from one subject.
struct Message {
    std::string subject_id;
    std::string message_id;
    std::int64_t utc_time = 0; // epoch seconds, UTC
    std::optional<int> tz_offset_minutes;
    std::string text;
    bool is_repost = false;
    Gender gender_label = Gender::unknown;
    std::optional<double> valence; // filled by the scoring stage

    /// Local wall-clock epoch seconds; falls back to UTC when no offset known.
    std::int64_t local_time() const {
        return utc_time + (tz_offset_minutes ? static_cast<std::int64_t>(*tz_offset_minutes) * 60 : 0);
    }
};

/// A subject's message sequence, ascending by utc_time, unique message ids.
struct RawTimeline {
    std::string subject_id;
    std::vector<Message> messages;
};

using Corpus = std::vector<RawTimeline>;

} // namespace affectflow
