#pragma once

#include "affectflow/config.hpp"
#include "affectflow/pattern.hpp"
#include "affectflow/rng.hpp"
#include "affectflow/sentiment.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace affectflow {

/// Ground-truth emotional episode: expected score follows
///   baseline + A_up * e^(growth_rate * t)   for onset <= t < 0
///   baseline + A_down * e^(decay_rate * t)  for 0 <= t <= end
/// and baseline outside, with additive Gaussian noise per message.
struct EpisodeSpec {
    Polarity polarity = Polarity::positive;
    double baseline = 0.14;
    double amplitude = 0.043;        // growth side
    double decay_amplitude = 0.042;  // decay side
    double growth_rate = 0.183;      // per minute, > 0
    double decay_rate = -0.057;      // per minute, < 0
    int onset_minutes = -38;
    int end_minutes = 53;
    double noise_sigma = 0.15;

    // Posting-rate profile.
    int messages_per_subject = 36;   // fixed count keeps the filter suite inert
    double circadian_amplitude = 0.3;
    double t0_volume_boost = 1.5;    // extra density within the +-6h window
    double t0_volume_tau = 90.0;     // minutes
};

struct SynthConfig {
    EpisodeSpec episode;
    int days = 50;                // anchors spread over (a divisor-adjusted) day count
    int tz_offset_minutes = -300;
    double male_fraction = 0.0;
    double female_fraction = 0.0;
    std::string subject_prefix = "synth";
    std::string start_date = "2012-03-01"; // first anchor day, local
    int pool_minutes = 1440;      // messages generated within +-24h of t0
    int span_minutes = 360;       // analysis window, for the volume boost

    static SynthConfig from_config(const Config& cfg);
};

/// Expected (noise-free) score at a minute offset from t0.
double episode_value(const EpisodeSpec& spec, int minute_offset);

/// Builds short texts whose engine score lands on a requested value by
/// greedily combining lexicon tokens; quantization error is bounded by
/// `tolerance`. Throws when a target is outside the reachable range.
class TextComposer {
public:
    explicit TextComposer(const Lexicon& lexicon, double tolerance = 0.02);

    std::string compose(double target_score, Rng& rng) const;
    double tolerance() const { return tolerance_; }

private:
    Lexicon lexicon_;
    double tolerance_;
    std::vector<std::pair<double, std::vector<std::string>>> by_rating_; // ascending rating
    std::vector<double> ratings_;
};

struct GenerationStats {
    std::size_t subjects = 0;
    std::size_t messages = 0; // anchors included
    double max_quantization_error = 0.0;
};

/// Write a synthetic cohort as JSON Lines. Deterministic: a fixed
/// (config, n_subjects, seed) triple reproduces the output byte for byte.
GenerationStats generate_cohort(const SynthConfig& cfg, const Lexicon& lexicon, int n_subjects,
                                std::uint64_t seed, std::ostream& out);
GenerationStats generate_cohort_file(const SynthConfig& cfg, const Lexicon& lexicon,
                                     int n_subjects, std::uint64_t seed, const std::string& path);

} // namespace affectflow
