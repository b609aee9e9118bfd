#include "affectflow/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace affectflow {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

const std::vector<std::string> kAmplifiers = {
    "absolutely", "amazingly",  "awfully",      "completely",  "considerably", "decidedly",
    "deeply",     "enormously", "entirely",     "especially",  "exceptionally", "extremely",
    "fabulously", "flipping",   "flippin",      "fricking",    "frickin",      "frigging",
    "friggin",    "fully",      "fucking",      "fuckin",      "greatly",      "hella",
    "highly",     "hugely",     "incredibly",   "intensely",   "majorly",      "more",
    "most",       "particularly", "purely",     "quite",       "really",       "remarkably",
    "so",         "substantially", "thoroughly", "totally",    "tremendously", "uber",
    "unbelievably", "unusually", "utterly",     "very"};

const std::vector<std::string> kDampeners = {
    "almost", "barely", "hardly",  "kinda",    "less",     "little",  "marginally",
    "occasionally", "partly", "scarcely", "slightly", "somewhat", "sorta"};

const std::vector<std::string> kNegators = {
    "aint",    "arent",   "cannot",  "cant",    "couldnt", "darent",  "didnt",   "doesnt",
    "ain't",   "aren't",  "can't",   "couldn't", "daren't", "didn't", "doesn't", "dont",
    "hadnt",   "hasnt",   "havent",  "isnt",    "mightnt", "mustnt",  "neither", "don't",
    "hadn't",  "hasn't",  "haven't", "isn't",   "mightn't", "mustn't", "neednt", "needn't",
    "never",   "none",    "nope",    "nor",     "not",     "nothing", "nowhere", "oughtnt",
    "shant",   "shouldnt", "oughtn't", "shan't", "shouldn't", "wasnt", "werent", "without",
    "wont",    "wouldnt", "won't",   "wouldn't", "rarely",  "seldom",  "despite"};

} // namespace

const std::vector<std::string>& amplifier_booster_list() { return kAmplifiers; }

const std::unordered_map<std::string, double>& default_boosters() {
    static const std::unordered_map<std::string, double> table = [] {
        std::unordered_map<std::string, double> t;
        for (const auto& w : kAmplifiers) t[w] = vader::kBoosterIncrement;
        for (const auto& w : kDampeners) t[w] = -vader::kBoosterIncrement;
        return t;
    }();
    return table;
}

const std::unordered_set<std::string>& default_negators() {
    static const std::unordered_set<std::string> table(kNegators.begin(), kNegators.end());
    return table;
}

Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
    Lexicon lex;
    lex.boosters = default_boosters();
    lex.negators = default_negators();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected token<TAB>rating");
        std::string token = line.substr(0, tab);
        std::string rating_s = line.substr(tab + 1);
        // Tolerate extra columns after the rating.
        if (auto tab2 = rating_s.find('\t'); tab2 != std::string::npos) rating_s = rating_s.substr(0, tab2);
        double rating = 0.0;
        try {
            size_t used = 0;
            rating = std::stod(rating_s, &used);
            if (used == 0) throw std::invalid_argument("empty");
        } catch (...) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad rating '" + rating_s + "'");
        }
        if (!std::isfinite(rating))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-finite rating");
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (lex.entries.count(token))
            lex.warnings.push_back("duplicate token '" + token + "' at line " + std::to_string(lineno) +
                                   ", later rating wins");
        lex.entries[token] = rating;
    }
    if (lex.entries.empty()) throw std::runtime_error("lexicon is empty: " + path);
    return lex;
}

std::vector<ScoredToken> scorer_tokenize(const std::string& text_in) {
    std::string text = text_in;
    // Curly apostrophes (U+2019) are common in social text; fold to ASCII so
    // "i'm" contractions tokenize uniformly.
    for (std::size_t p; (p = text.find("\xE2\x80\x99")) != std::string::npos;)
        text.replace(p, 3, "'");
    std::vector<ScoredToken> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;
        std::size_t a = start, b = i;
        while (a < b && !is_word_char(static_cast<unsigned char>(text[a]))) ++a;
        while (b > a && !is_word_char(static_cast<unsigned char>(text[b - 1]))) --b;
        if (a >= b) continue;
        ScoredToken tok;
        tok.lower.reserve(b - a);
        bool any_alpha = false;
        bool all_upper = true;
        for (std::size_t k = a; k < b; ++k) {
            unsigned char c = static_cast<unsigned char>(text[k]);
            if (std::isalpha(c)) {
                any_alpha = true;
                if (!std::isupper(c)) all_upper = false;
            }
            tok.lower.push_back(static_cast<char>(std::tolower(c)));
        }
        tok.all_caps = any_alpha && all_upper;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

namespace {

int trailing_exclamations(const std::string& text) {
    auto end = text.find_last_not_of(" \t\r\n");
    if (end == std::string::npos) return 0;
    int count = 0;
    for (std::size_t i = end + 1; i-- > 0 && text[i] == '!';) ++count;
    return std::min(count, vader::kMaxExclamations);
}

double token_sum(const std::vector<ScoredToken>& tokens, const Lexicon& lexicon) {
    double sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = lexicon.entries.find(tokens[i].lower);
        if (it == lexicon.entries.end()) continue;
        double valence = it->second;
        if (valence == 0.0) continue;
        double sign = valence > 0 ? 1.0 : -1.0;
        if (tokens[i].all_caps) valence += sign * vader::kCapsIncrement;
        for (int back = 1; back <= vader::kModifierLookback && back <= static_cast<int>(i); ++back) {
            const auto& prev = tokens[i - back].lower;
            auto bit = lexicon.boosters.find(prev);
            if (bit != lexicon.boosters.end())
                valence += sign * bit->second * vader::kDistanceDamping[back - 1];
        }
        for (int back = 1; back <= vader::kModifierLookback && back <= static_cast<int>(i); ++back) {
            if (lexicon.negators.count(tokens[i - back].lower)) {
                valence *= vader::kNegationFactor;
                break;
            }
        }
        sum += valence;
    }
    return sum;
}

} // namespace

double raw_rating_sum(const std::string& text, const Lexicon& lexicon) {
    return token_sum(scorer_tokenize(text), lexicon);
}

double score(const std::string& text, const Lexicon& lexicon) {
    double s = token_sum(scorer_tokenize(text), lexicon);
    if (s > 0)
        s += trailing_exclamations(text) * vader::kExclamationStep;
    else if (s < 0)
        s -= trailing_exclamations(text) * vader::kExclamationStep;
    double v = s / std::sqrt(s * s + vader::kNormalizationAlpha);
    return std::clamp(v, -1.0, 1.0);
}

double raw_sum_for_score(double value) {
    if (std::abs(value) >= 1.0)
        throw std::invalid_argument("score magnitude must be < 1");
    return value * std::sqrt(vader::kNormalizationAlpha / (1.0 - value * value));
}

} // namespace affectflow
