#pragma once

#include "affectflow/message.hpp"

#include <json.hpp>

namespace affectflow {

using ordered_json = nlohmann::ordered_json;

/// Canonical JSON record for a message (fixed field order so serialized
/// corpora are byte-stable).
ordered_json message_to_json(const Message& m);

/// Strict inverse of message_to_json; throws on malformed records.
Message message_from_json(const ordered_json& j);

} // namespace affectflow
