#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lonecast/time_util.hpp"

namespace lonecast {

// Participants are opaque string tokens, unique within a cohort.
using ParticipantId = std::string;

// One recording burst of raw photoplethysmogram samples.
struct PpgSegment {
    ParticipantId participant;
    double start = 0;        // UTC epoch seconds of samples[0]
    double sample_rate = 0;  // Hz
    std::vector<double> samples;

    double duration() const {
        return samples.empty() ? 0.0 : double(samples.size()) / sample_rate;
    }
};

// One named daily score from the ring (e.g. sleep_restless, activity_balance).
struct DailyScore {
    ParticipantId participant;
    int64_t day = 0; // days since 1970-01-01 in the study timezone
    std::string name;
    double value = 0;
};

enum class EventKind {
    ScreenOn,
    ScreenOff,
    ScreenLock,
    ScreenUnlock,
    BatteryPlugin,
    Call,
    Message,
    Notification,
};

const char* event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(const std::string& s);

struct PhoneEvent {
    ParticipantId participant;
    double time = 0;
    EventKind kind = EventKind::ScreenOn;
    std::optional<double> duration;      // seconds; calls only
    std::optional<std::string> category; // messages / notifications only
};

struct LocationFix {
    ParticipantId participant;
    double time = 0;
    double latitude = 0;  // degrees, [-90, 90]
    double longitude = 0; // degrees, [-180, 180]
    std::optional<double> speed; // m/s, >= 0
};

// One momentary self-report on the 0..100 loneliness scale.
struct SelfReport {
    ParticipantId participant;
    double time = 0;
    double loneliness = 0;
};

// Counts of duplicate records dropped during ingestion, per stream.
struct IngestWarnings {
    size_t duplicate_self_reports = 0;
    size_t duplicate_daily_scores = 0;
    size_t duplicate_phone_events = 0;
    size_t duplicate_location_fixes = 0;
    size_t duplicate_ppg_segments = 0;
    size_t total() const {
        return duplicate_self_reports + duplicate_daily_scores + duplicate_phone_events +
               duplicate_location_fixes + duplicate_ppg_segments;
    }
};

// Everything ingested for a cohort. Immutable after construction; all
// record vectors are sorted by (participant, time) and safe to share
// read-only across threads.
struct CohortStreams {
    std::vector<ParticipantId> participants; // sorted, unique
    std::vector<PpgSegment> ppg;
    std::vector<DailyScore> daily_scores;
    std::vector<PhoneEvent> phone_events;
    std::vector<LocationFix> location_fixes;
    std::vector<SelfReport> self_reports;
    IngestWarnings warnings;
};

// File names inside a cohort directory.
namespace cohort_files {
inline constexpr const char* kSelfReports = "self_reports.csv";
inline constexpr const char* kPpgSegments = "ppg_segments.jsonl";
inline constexpr const char* kDailyScores = "daily_scores.csv";
inline constexpr const char* kPhoneEvents = "phone_events.csv";
inline constexpr const char* kLocation = "location.csv";
} // namespace cohort_files

struct IngestOptions {
    TimePolicy time;
    // When false, PPG segments are not retained in memory; use
    // for_each_ppg_segment to stream them instead.
    bool load_ppg = true;
};

// Reads every stream file under root (missing files mean empty streams),
// validates all type invariants, drops duplicates with a warning count,
// and sorts records by (participant, time).
CohortStreams ingest_cohort(const std::string& root, const IngestOptions& opts = {});

// Writes streams back out in the exact on-disk formats ingest_cohort reads.
void write_cohort(const CohortStreams& streams, const std::string& dir);

// Streams PPG segments from a JSONL file one at a time (validated), so
// cohort-scale signal data never has to be resident all at once.
void for_each_ppg_segment(const std::string& jsonl_path,
                          const std::function<void(PpgSegment&&)>& fn);

// Appends one segment as a JSONL line to an open stream.
void append_ppg_jsonl(std::ostream& out, const PpgSegment& seg);

struct ParticipantSummary {
    ParticipantId participant;
    size_t n_ppg = 0;
    size_t n_daily_scores = 0;
    size_t n_phone_events = 0;
    size_t n_location_fixes = 0;
    size_t n_self_reports = 0;
    std::optional<double> t_min;
    std::optional<double> t_max;
};

struct CohortSummary {
    std::vector<ParticipantSummary> rows; // ordered by participant
};

CohortSummary cohort_summary(const CohortStreams& streams, const TimePolicy& tz = {});

} // namespace lonecast
