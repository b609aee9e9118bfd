#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace affectflow {

/// Token ratings on the -4..+4 human-rating scale, plus the modifier tables
/// the rule engine consults. Immutable after load; scoring is pure.
struct Lexicon {
    std::unordered_map<std::string, double> entries; // token -> mean rating
    std::unordered_map<std::string, double> boosters; // token -> signed increment
    std::unordered_set<std::string> negators;
    std::vector<std::string> warnings; // duplicate-token notes from loading
};

/// Rule constants match the public reference engine this scorer is modeled on.
namespace vader {
constexpr double kBoosterIncrement = 0.293;
constexpr double kCapsIncrement = 0.733;
constexpr double kNegationFactor = -0.74;
constexpr double kNormalizationAlpha = 15.0;
constexpr double kExclamationStep = 0.292;
constexpr int kMaxExclamations = 4;
constexpr int kModifierLookback = 3;
// Booster influence fades with distance from the sentiment token.
constexpr double kDistanceDamping[kModifierLookback] = {1.0, 0.95, 0.9};
} // namespace vader

/// Built-in modifier tables (the lexicon file carries ratings only).
const std::unordered_map<std::string, double>& default_boosters();
const std::unordered_set<std::string>& default_negators();

/// The 46 amplifying booster words, in file order (shared with the affect
/// pattern grammar).
const std::vector<std::string>& amplifier_booster_list();

/// Load a tab-separated `token<TAB>mean_rating` lexicon. Duplicate tokens:
/// last row wins, a warning is recorded. Missing file or malformed row throws
/// with the offending line number.
Lexicon load_lexicon(const std::string& path);

/// One token as the scorer sees it: lowercased, edge punctuation stripped.
struct ScoredToken {
    std::string lower;
    bool all_caps = false;
};

std::vector<ScoredToken> scorer_tokenize(const std::string& text);

/// Rule-based valence in [-1, +1]. Zero when no lexicon token is present.
///
/// Per sentiment token: ALL-CAPS adds +-0.733 toward its sign; a booster in
/// the three preceding tokens adds +-0.293 (distance-damped) toward its sign;
/// a negator in the three preceding tokens multiplies by -0.74. The token sum
/// gains 0.292 per trailing '!' (max 4) toward its sign, then normalizes as
/// s / sqrt(s^2 + 15).
double score(const std::string& text, const Lexicon& lexicon);

/// Raw rating sum that `score` would normalize; exposed for the synthetic
/// corpus composer, which needs to invert the normalization.
double raw_rating_sum(const std::string& text, const Lexicon& lexicon);

/// Invert s / sqrt(s^2 + alpha): the raw sum needed to produce `value`.
double raw_sum_for_score(double value);

} // namespace affectflow
