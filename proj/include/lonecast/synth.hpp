#pragma once

#include <map>
#include <string>
#include <vector>

#include "lonecast/model.hpp"

namespace lonecast::synth {

struct SynthConfig {
    int n_participants = 29;
    int weeks = 8;
    int reports_per_day = 3;
    double ppg_sample_rate = 20.0; // Hz
    double missing_rate = 0.05;    // fraction of PPG segments, score days, and reports dropped
    double effect_strength = 1.0;  // 0 severs every planted feature-label link
    uint64_t seed = 0;
};

// What the generator actually planted, for downstream validation: the
// signed logit weights of the lagged daily scores and every participant's
// latent loneliness trajectory.
struct PlantedTruth {
    double effect_strength = 0;
    int lag_days = 0;                      // loneliness on day t responds to drivers on day t-lag
    std::vector<std::string> score_names;  // daily score streams, emitted order
    std::vector<double> coefficients;      // parallel signed logit weights
    std::vector<std::string> drivers;      // names with nonzero weight; empty at effect 0
    int64_t first_day = 0;                 // epoch day of each trajectory's first entry
    std::map<ParticipantId, std::vector<double>> latent; // logit-scale loneliness per day
};

struct SynthResult {
    CohortStreams streams;
    PlantedTruth truth;
};

// Fully in-memory generation; right for tests and small cohorts. The
// default config carries roughly 2 GB of PPG samples, so full-size runs
// should prefer generate_to_dir. Same seed, same bytes, always.
SynthResult generate(const SynthConfig& cfg);

// Writes the cohort files directly into dir, streaming PPG one segment at
// a time; byte-identical to generate() followed by write_cohort.
PlantedTruth generate_to_dir(const SynthConfig& cfg, const std::string& dir);

// Lossless JSON round-trip of the planted truth.
std::string truth_to_json(const PlantedTruth& t);
PlantedTruth truth_from_json(const std::string& text);
void save_truth(const PlantedTruth& t, const std::string& path);
PlantedTruth load_truth(const std::string& path);

// Human-readable summary of the planted drivers, signs, and lag.
std::string describe_truth(const PlantedTruth& t);

} // namespace lonecast::synth
