#include "affectflow/synthgen.hpp"

#include "affectflow/epoch.hpp"
#include "affectflow/json_io.hpp"
#include "affectflow/timeutil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace affectflow {

namespace {

constexpr std::uint64_t kSubjectStream = 0x73756263ULL;  // subject attributes
constexpr std::uint64_t kMessageStream = 0x6d736763ULL;  // per-message draws

const std::vector<std::string> kFillers = {"today",  "tonight",  "later",   "again",
                                           "still",  "anyway",   "morning", "meanwhile",
                                           "mostly", "somewhere"};

double circadian_weight(int hour, double amplitude) {
    // Evening-peaked sinusoid, normalized to at most 1.
    double phase = 2.0 * M_PI * (hour - 15) / 24.0;
    return (1.0 + amplitude * std::sin(phase)) / (1.0 + std::abs(amplitude));
}

} // namespace

SynthConfig SynthConfig::from_config(const Config& c) {
    SynthConfig s;
    auto& e = s.episode;
    std::string pol = c.get_string_or("episode.polarity", "positive");
    if (pol != "positive" && pol != "negative")
        throw std::runtime_error("episode.polarity must be positive or negative");
    e.polarity = pol == "positive" ? Polarity::positive : Polarity::negative;
    e.baseline = c.get_double_or("episode.baseline", e.baseline);
    e.amplitude = c.get_double_or("episode.amplitude", e.amplitude);
    e.decay_amplitude = c.get_double_or("episode.decay_amplitude", e.amplitude);
    e.growth_rate = c.get_double_or("episode.growth_rate", e.growth_rate);
    e.decay_rate = c.get_double_or("episode.decay_rate", e.decay_rate);
    e.onset_minutes = static_cast<int>(c.get_int_or("episode.onset", e.onset_minutes));
    e.end_minutes = static_cast<int>(c.get_int_or("episode.end", e.end_minutes));
    e.noise_sigma = c.get_double_or("episode.noise_sigma", e.noise_sigma);
    e.messages_per_subject =
        static_cast<int>(c.get_int_or("posting.messages_per_subject", e.messages_per_subject));
    e.circadian_amplitude = c.get_double_or("posting.circadian_amplitude", e.circadian_amplitude);
    e.t0_volume_boost = c.get_double_or("posting.t0_volume_boost", e.t0_volume_boost);
    e.t0_volume_tau = c.get_double_or("posting.t0_volume_tau", e.t0_volume_tau);
    s.days = static_cast<int>(c.get_int_or("corpus.days", s.days));
    s.tz_offset_minutes = static_cast<int>(c.get_int_or("corpus.tz_offset_minutes", s.tz_offset_minutes));
    s.male_fraction = c.get_double_or("corpus.male_fraction", s.male_fraction);
    s.female_fraction = c.get_double_or("corpus.female_fraction", s.female_fraction);
    s.subject_prefix = c.get_string_or("corpus.subject_prefix", s.subject_prefix);
    s.start_date = c.get_string_or("corpus.start_date", s.start_date);
    if (e.onset_minutes >= 0 || e.end_minutes <= 0)
        throw std::runtime_error("episode must satisfy onset < 0 < end");
    if (e.noise_sigma < 0) throw std::runtime_error("noise_sigma must be >= 0");
    return s;
}

double episode_value(const EpisodeSpec& spec, int minute_offset) {
    if (minute_offset < spec.onset_minutes || minute_offset > spec.end_minutes)
        return spec.baseline;
    if (minute_offset < 0)
        return spec.baseline + spec.amplitude * std::exp(spec.growth_rate * minute_offset);
    return spec.baseline + spec.decay_amplitude * std::exp(spec.decay_rate * minute_offset);
}

TextComposer::TextComposer(const Lexicon& lexicon, double tolerance)
    : lexicon_(lexicon), tolerance_(tolerance) {
    std::map<double, std::vector<std::string>> grouped;
    for (const auto& [token, rating] : lexicon.entries) {
        if (rating == 0.0) continue;
        if (lexicon.boosters.count(token) || lexicon.negators.count(token)) continue;
        grouped[rating].push_back(token);
    }
    if (grouped.empty()) throw std::runtime_error("lexicon has no usable sentiment tokens");
    for (auto& [rating, words] : grouped) {
        std::sort(words.begin(), words.end());
        by_rating_.emplace_back(rating, std::move(words));
        ratings_.push_back(rating);
    }
}

std::string TextComposer::compose(double target_score, Rng& rng) const {
    if (std::abs(target_score) >= 1.0)
        throw std::runtime_error("target score " + std::to_string(target_score) +
                                 " is outside the scorer range");
    double remaining = raw_sum_for_score(target_score);
    std::vector<std::string> words;
    for (int picks = 0; picks < 4 && std::abs(remaining) > 0.051; ++picks) {
        // Closest available rating to the remaining sum.
        auto it = std::lower_bound(ratings_.begin(), ratings_.end(), remaining);
        std::size_t idx;
        if (it == ratings_.begin())
            idx = 0;
        else if (it == ratings_.end())
            idx = ratings_.size() - 1;
        else {
            std::size_t hi = static_cast<std::size_t>(it - ratings_.begin());
            idx = (remaining - ratings_[hi - 1] <= ratings_[hi] - remaining) ? hi - 1 : hi;
        }
        const auto& [rating, candidates] = by_rating_[idx];
        words.push_back(candidates[rng.uniform_index(candidates.size())]);
        remaining -= rating;
    }
    // Sentiment-neutral filler for texture; never affects the score.
    if (rng.uniform() < 0.5)
        words.insert(words.begin(), kFillers[rng.uniform_index(kFillers.size())]);
    if (rng.uniform() < 0.3) words.push_back(kFillers[rng.uniform_index(kFillers.size())]);

    std::string text;
    for (const auto& w : words) {
        if (!text.empty()) text += ' ';
        text += w;
    }
    double achieved = score(text, lexicon_);
    if (std::abs(achieved - target_score) > tolerance_)
        throw std::runtime_error("target score " + std::to_string(target_score) +
                                 " is not reachable with this lexicon (closest " +
                                 std::to_string(achieved) + ")");
    return text;
}

GenerationStats generate_cohort(const SynthConfig& cfg, const Lexicon& lexicon, int n_subjects,
                                std::uint64_t seed, std::ostream& out) {
    if (n_subjects < 1) throw std::invalid_argument("n_subjects must be >= 1");
    const EpisodeSpec& ep = cfg.episode;
    TextComposer composer(lexicon);
    PatternConfig pattern = PatternConfig::defaults();
    const auto& adjectives = ep.polarity == Polarity::positive ? pattern.positive_adjectives
                                                               : pattern.negative_adjectives;

    auto start = parse_rfc3339(cfg.start_date + "T00:00:00Z");
    if (!start) throw std::runtime_error("bad start_date: " + cfg.start_date);

    // Equal anchors per local calendar day keeps the unusual-day filter inert.
    int days = std::max(1, std::min(cfg.days, n_subjects));
    while (n_subjects % days != 0) --days;

    GenerationStats stats;
    stats.subjects = static_cast<std::size_t>(n_subjects);
    const double w_max = (1.0 + std::max(0.0, ep.t0_volume_boost));
    const int digits_n = std::clamp(static_cast<int>(std::to_string(n_subjects).size()), 6, 12);

    char idbuf[32];
    for (int i = 0; i < n_subjects; ++i) {
        Rng subj_rng = Rng::stream(seed, kSubjectStream, static_cast<std::uint64_t>(i));
        std::snprintf(idbuf, sizeof(idbuf), "%0*d", digits_n, i);
        std::string subject_id = cfg.subject_prefix + idbuf;

        Gender gender = Gender::unknown;
        double gu = subj_rng.uniform();
        if (gu < cfg.male_fraction)
            gender = Gender::male;
        else if (gu < cfg.male_fraction + cfg.female_fraction)
            gender = Gender::female;

        const int day = i % days;
        const int minute_of_day = (i * 733) % 1440;
        const std::int64_t t0_local = *start + static_cast<std::int64_t>(day) * 86400 +
                                      static_cast<std::int64_t>(minute_of_day) * 60;
        const std::int64_t t0_utc = t0_local - static_cast<std::int64_t>(cfg.tz_offset_minutes) * 60;

        // Anchor statement.
        Message anchor;
        anchor.subject_id = subject_id;
        anchor.message_id = subject_id + "-a";
        anchor.utc_time = t0_utc;
        anchor.tz_offset_minutes = cfg.tz_offset_minutes;
        anchor.is_repost = false;
        anchor.gender_label = gender;
        {
            const std::string& adj = adjectives[static_cast<std::size_t>(i) % adjectives.size()];
            const char* prefix = (i % 3 == 0) ? "i feel" : (i % 3 == 1 ? "i'm feeling" : "i am feeling");
            anchor.text = (i % 4 == 0) ? std::string(prefix) + " so " + adj
                                       : std::string(prefix) + " " + adj;
        }
        out << message_to_json(anchor).dump() << '\n';
        ++stats.messages;

        for (int j = 0; j < ep.messages_per_subject; ++j) {
            Rng rng = Rng::stream(seed, kMessageStream, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(j));
            // Rejection-sample an offset from the posting profile.
            double offset_min = 0.0;
            for (int tries = 0; tries < 256; ++tries) {
                double u = rng.uniform(-static_cast<double>(cfg.pool_minutes),
                                       static_cast<double>(cfg.pool_minutes));
                double w = 1.0;
                if (std::abs(u) <= cfg.span_minutes)
                    w += ep.t0_volume_boost * std::exp(-std::abs(u) / ep.t0_volume_tau);
                w *= circadian_weight(hour_of(t0_local + static_cast<std::int64_t>(u * 60.0)),
                                      ep.circadian_amplitude);
                offset_min = u;
                if (rng.uniform() * w_max <= w) break;
            }
            const std::int64_t offset_s = static_cast<std::int64_t>(std::llround(offset_min * 60.0));
            const int minute = offset_minutes(t0_utc + offset_s, t0_utc);

            double noise = ep.noise_sigma * std::clamp(rng.gaussian(), -4.0, 4.0);
            double target = episode_value(ep, minute) + noise;

            Message m;
            m.subject_id = subject_id;
            m.message_id = subject_id + "-m" + std::to_string(j);
            m.utc_time = t0_utc + offset_s;
            m.tz_offset_minutes = cfg.tz_offset_minutes;
            m.is_repost = false;
            m.gender_label = gender;
            m.text = composer.compose(target, rng);
            double err = std::abs(score(m.text, lexicon) - target);
            stats.max_quantization_error = std::max(stats.max_quantization_error, err);
            out << message_to_json(m).dump() << '\n';
            ++stats.messages;
        }
    }
    return stats;
}

GenerationStats generate_cohort_file(const SynthConfig& cfg, const Lexicon& lexicon,
                                     int n_subjects, std::uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    return generate_cohort(cfg, lexicon, n_subjects, seed, out);
}

} // namespace affectflow
