#include "affectflow/json_io.hpp"

#include "affectflow/timeutil.hpp"

#include <stdexcept>

namespace affectflow {

ordered_json message_to_json(const Message& m) {
    ordered_json j;
    j["subject_id"] = m.subject_id;
    j["message_id"] = m.message_id;
    j["utc_time"] = format_rfc3339(m.utc_time);
    if (m.tz_offset_minutes)
        j["tz_offset_minutes"] = *m.tz_offset_minutes;
    else
        j["tz_offset_minutes"] = nullptr;
    j["text"] = m.text;
    j["is_repost"] = m.is_repost;
    j["gender_label"] = to_string(m.gender_label);
    if (m.valence) j["valence"] = *m.valence;
    return j;
}

Message message_from_json(const ordered_json& j) {
    Message m;
    m.subject_id = j.at("subject_id").get<std::string>();
    m.message_id = j.at("message_id").get<std::string>();
    auto epoch = parse_rfc3339(j.at("utc_time").get<std::string>());
    if (!epoch) throw std::runtime_error("bad utc_time in record " + m.message_id);
    m.utc_time = *epoch;
    if (j.contains("tz_offset_minutes") && !j["tz_offset_minutes"].is_null())
        m.tz_offset_minutes = j["tz_offset_minutes"].get<int>();
    m.text = j.at("text").get<std::string>();
    if (j.contains("is_repost")) m.is_repost = j["is_repost"].get<bool>();
    if (j.contains("gender_label") && !j["gender_label"].is_null()) {
        auto g = gender_from_string(j["gender_label"].get<std::string>());
        if (!g) throw std::runtime_error("bad gender_label in record " + m.message_id);
        m.gender_label = *g;
    }
    if (j.contains("valence") && !j["valence"].is_null()) m.valence = j["valence"].get<double>();
    return m;
}

} // namespace affectflow
