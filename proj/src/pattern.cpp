#include "affectflow/pattern.hpp"

#include "affectflow/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

namespace affectflow {

const char* to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

PatternConfig PatternConfig::defaults() {
    PatternConfig cfg;
    cfg.prefixes = {"i feel", "i'm feeling", "i am feeling"};
    cfg.boosters = amplifier_booster_list();
    cfg.positive_adjectives = {"good", "happy", "great", "awesome"};
    cfg.negative_adjectives = {"bad", "unhappy", "sad", "terrible", "horrible", "awful"};
    cfg.validate();
    return cfg;
}

PatternConfig PatternConfig::from_config(const Config& c) {
    PatternConfig def = defaults();
    PatternConfig cfg;
    cfg.prefixes = c.get_string_array_or("pattern.prefixes", def.prefixes);
    cfg.boosters = c.get_string_array_or("pattern.boosters", def.boosters);
    cfg.positive_adjectives =
        c.get_string_array_or("pattern.positive_adjectives", def.positive_adjectives);
    cfg.negative_adjectives =
        c.get_string_array_or("pattern.negative_adjectives", def.negative_adjectives);
    cfg.validate();
    return cfg;
}

void PatternConfig::validate() const {
    auto check_lower = [](const std::vector<std::string>& words, const char* what) {
        for (const auto& w : words) {
            if (w.empty()) throw std::invalid_argument(std::string(what) + " contains an empty entry");
            for (unsigned char ch : w)
                if (std::isupper(ch))
                    throw std::invalid_argument(std::string(what) + " entry not lowercase: " + w);
        }
    };
    check_lower(prefixes, "prefixes");
    check_lower(boosters, "boosters");
    check_lower(positive_adjectives, "positive_adjectives");
    check_lower(negative_adjectives, "negative_adjectives");
    for (const auto& p : positive_adjectives)
        for (const auto& n : negative_adjectives)
            if (p == n)
                throw std::invalid_argument("adjective '" + p + "' appears in both polarity lists");
}

std::vector<std::string> pattern_tokenize(const std::string& text) {
    auto scored = scorer_tokenize(text);
    std::vector<std::string> out;
    out.reserve(scored.size());
    for (auto& t : scored) out.push_back(std::move(t.lower));
    return out;
}

namespace {

bool prefix_at(const std::vector<std::string>& tokens, std::size_t pos,
               const std::vector<std::string>& prefix) {
    if (pos + prefix.size() > tokens.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (tokens[pos + i] != prefix[i]) return false;
    return true;
}

} // namespace

AffectDetector::AffectDetector(PatternConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    for (const auto& p : cfg_.prefixes) prefix_tokens_.push_back(pattern_tokenize(p));
    boosters_.insert(cfg_.boosters.begin(), cfg_.boosters.end());
    for (const auto& a : cfg_.positive_adjectives) adjectives_[a] = Polarity::positive;
    for (const auto& a : cfg_.negative_adjectives) adjectives_[a] = Polarity::negative;
}

DetectOutcome AffectDetector::detect_ex(const std::string& text, DetectedPattern& out) const {
    const auto tokens = pattern_tokenize(text);
    std::vector<DetectedPattern> matches;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        for (const auto& prefix : prefix_tokens_) {
            if (!prefix_at(tokens, pos, prefix)) continue;
            std::size_t next = pos + prefix.size();
            if (next >= tokens.size()) continue;
            std::optional<std::string> booster;
            if (boosters_.count(tokens[next])) {
                booster = tokens[next];
                ++next;
                if (next >= tokens.size()) continue;
            }
            auto adj = adjectives_.find(tokens[next]);
            if (adj == adjectives_.end()) continue;
            matches.push_back(DetectedPattern{adj->second, adj->first, booster});
        }
    }
    if (matches.empty()) return DetectOutcome::none;
    bool has_pos = false, has_neg = false;
    for (const auto& m : matches) (m.polarity == Polarity::positive ? has_pos : has_neg) = true;
    if (has_pos && has_neg) return DetectOutcome::ambiguous;
    out = matches.front();
    return DetectOutcome::match;
}

std::optional<DetectedPattern> AffectDetector::detect(const std::string& text) const {
    DetectedPattern out;
    if (detect_ex(text, out) == DetectOutcome::match) return out;
    return std::nullopt;
}

bool AffectDetector::contains_prefix(const std::string& text) const {
    const auto tokens = pattern_tokenize(text);
    for (const auto& prefix : prefix_tokens_) {
        if (prefix.empty()) continue;
        for (std::size_t pos = 0; pos + prefix.size() <= tokens.size(); ++pos)
            if (prefix_at(tokens, pos, prefix)) return true;
    }
    return false;
}

std::optional<DetectedPattern> detect_affect_label(const std::string& text,
                                                   const PatternConfig& cfg) {
    return AffectDetector(cfg).detect(text);
}

bool contains_prefix(const std::string& text, const PatternConfig& cfg) {
    return AffectDetector(cfg).contains_prefix(text);
}

} // namespace affectflow
