#pragma once

#include "lonecast/behavior.hpp"
#include "lonecast/hrv.hpp"
#include "lonecast/ppg.hpp"

namespace lonecast::features {

struct TimeValue {
    double time = 0;
    double value = 0;
};

// Time-sorted observations of one feature, per participant.
using ParticipantSeries = std::map<ParticipantId, std::vector<TimeValue>>;

// Every extracted feature across the cohort. names is sorted; sources and
// series run parallel to it. Sources name the producing stage: "hrv",
// "behavior", "context", or "daily".
struct FeatureBundle {
    std::vector<std::string> names;
    std::vector<std::string> sources;
    std::vector<ParticipantSeries> series;

    std::optional<size_t> index_of(const std::string& name) const;
};

struct ExtractConfig {
    TimePolicy time;
    ppg::PipelineConfig ppg;
    hrv::SpectrumConfig spectrum;
    double place_radius_m = 150.0;
    double place_min_dwell_s = 600.0;
};

// Heart features land at their segment start time; phone, location, and
// daily ring features are aggregated per local day and land at that day's
// noon. Days without any location fix get no context row, while days inside
// a participant's phone-event span always get behavior counts (no events
// genuinely means zero interactions).
FeatureBundle extract_features(const CohortStreams& streams, const ExtractConfig& cfg = {});

// Same extraction, but PPG segments are streamed from the JSONL file one at
// a time instead of being taken from streams.ppg.
FeatureBundle extract_features(const CohortStreams& streams, const std::string& ppg_jsonl_path,
                               const ExtractConfig& cfg = {});

// Long-format interchange: participant,time,feature,source,value, ordered
// by feature then participant then time.
void write_features_csv(const FeatureBundle& bundle, const std::string& path);
FeatureBundle read_features_csv(const std::string& path);

} // namespace lonecast::features
