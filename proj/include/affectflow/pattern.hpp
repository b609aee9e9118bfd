#pragma once

#include "affectflow/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace affectflow {

enum class Polarity { positive, negative };

const char* to_string(Polarity p);

/// Grammar for explicit affect statements:
///   <prefix> ($booster)? <adjective>
/// with prefix one of "i feel" / "i'm feeling" / "i am feeling", at most one
/// booster, and the adjective drawn from the configured valence lists.
struct PatternConfig {
    std::vector<std::string> prefixes;
    std::vector<std::string> boosters;
    std::vector<std::string> positive_adjectives;
    std::vector<std::string> negative_adjectives;

    static PatternConfig defaults();
    static PatternConfig from_config(const Config& cfg);

    /// Throws if the adjective sets overlap or any entry is not lowercase.
    void validate() const;
};

/// A matched affect statement, minus its timeline context.
struct DetectedPattern {
    Polarity polarity;
    std::string adjective;
    std::optional<std::string> booster;
};

/// Lowercased tokens with edge punctuation stripped; the tokenization the
/// pattern grammar is defined over.
std::vector<std::string> pattern_tokenize(const std::string& text);

enum class DetectOutcome { none, match, ambiguous };

/// Pattern grammar compiled into lookup tables; reuse one instance when
/// scanning a corpus.
class AffectDetector {
public:
    explicit AffectDetector(PatternConfig cfg);

    /// Match the grammar. Returns nullopt for non-matches and for ambiguous
    /// texts that match both polarities (see detect_ex to distinguish).
    std::optional<DetectedPattern> detect(const std::string& text) const;
    DetectOutcome detect_ex(const std::string& text, DetectedPattern& out) const;

    /// True when any prefix appears as a consecutive token run (used to strip
    /// residual self-report phrasing from timelines).
    bool contains_prefix(const std::string& text) const;

    const PatternConfig& config() const { return cfg_; }

private:
    PatternConfig cfg_;
    std::vector<std::vector<std::string>> prefix_tokens_;
    std::unordered_set<std::string> boosters_;
    std::unordered_map<std::string, Polarity> adjectives_;
};

/// Convenience one-shot form of AffectDetector::detect.
std::optional<DetectedPattern> detect_affect_label(const std::string& text,
                                                   const PatternConfig& cfg);

bool contains_prefix(const std::string& text, const PatternConfig& cfg);

/// An affect statement anchored in time.
struct AffectLabel {
    Polarity polarity = Polarity::positive;
    std::string adjective;
    std::optional<std::string> booster;
    std::string message_id;
    std::int64_t t0 = 0; // utc epoch seconds
};

} // namespace affectflow
