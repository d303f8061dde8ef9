#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lonecast/model.hpp"

namespace lonecast::ppg {

// Cleaned inter-beat intervals for one segment. beat_times[0] is the start
// beat of the first accepted interval and beat_times[i+1] the end beat of
// accepted interval i, so |intervals| = |beat_times| - 1 always holds.
// When an interval between two accepted ones was rejected, the stride
// between the surrounding beat_times exceeds the stored interval values;
// each interval remains the true gap of its own beat pair.
struct IbiSeries {
    ParticipantId participant;
    std::vector<double> beat_times;   // UTC epoch seconds, strictly increasing
    std::vector<double> intervals;    // ms, each in [300, 2000]
};

struct QualityRules {
    // flatline: sliding windows whose sample variance falls below the floor
    double flatline_window_s = 2.0;
    double flatline_variance_floor = 1e-6;
    double flatline_max_fraction = 0.05; // more flat windows than this => Noisy

    // clipping: samples pinned to the segment's min/max rail
    double clipping_max_fraction = 0.02;

    // plausibility band on peak-to-peak amplitude (arbitrary device units)
    double amplitude_min = 0.01;
    double amplitude_max = 100.0;
};

struct QualityLabel {
    bool clean = true;
    std::vector<std::string> reasons; // rule ids: "flatline", "clipping", "amplitude"
};

// Applies the flatline / clipping / amplitude rules. Deterministic.
QualityLabel assess_quality(const PpgSegment& segment, const QualityRules& rules = {});

// Per-sample mask of rule violations (clipped samples, flat windows) used
// to drive gap repair. mask[i] == true means sample i is suspect.
std::vector<bool> noisy_sample_mask(const PpgSegment& segment, const QualityRules& rules = {});

struct RepairResult {
    PpgSegment segment;
    std::vector<bool> remaining; // still-bad samples (gaps longer than max_gap
                                 // or touching a segment boundary)
    size_t repaired_samples = 0;
};

// Linearly interpolates masked runs no longer than max_gap seconds across
// their clean endpoints. Longer runs (and runs without two clean endpoints)
// stay marked for downstream exclusion.
RepairResult repair_short_gaps(const PpgSegment& segment, const std::vector<bool>& mask,
                               double max_gap_s = 2.0);

struct PeakConfig {
    double band_low_hz = 0.5;
    double band_high_hz = 8.0;
    double refractory_s = 0.3;
    double envelope_window_s = 2.0;   // half-width of the local-envelope window
    double threshold_fraction = 0.4;  // candidate must exceed this fraction of
                                      // the local envelope
    double min_duration_s = 10.0;
};

// Zero-phase band-pass filter + adaptive-threshold local-maxima detection
// with a refractory period. Returns strictly increasing sample indices with
// pairwise spacing >= the refractory period. Throws TooShort for segments
// under min_duration_s.
std::vector<size_t> detect_peaks(const PpgSegment& segment, const PeakConfig& cfg = {});

struct IbiRules {
    double min_interval_ms = 300;
    double max_interval_ms = 2000;
    double ectopic_median_fraction = 0.30; // drop intervals deviating more than
                                           // this from the segment median
};

// Successive peak gaps in ms, filtered by the range rule and the ectopic
// (median-deviation) rule. Throws InsufficientBeats when fewer than three
// beats survive.
IbiSeries peaks_to_ibi(const PpgSegment& segment, const std::vector<size_t>& peaks,
                       const IbiRules& rules = {});

struct PipelineConfig {
    QualityRules quality;
    double max_gap_s = 2.0;
    PeakConfig peaks;
    IbiRules ibi;
};

// Full segment pipeline: gate on quality, repair short gaps once if that is
// enough to make the segment clean, then detect peaks and extract intervals.
// Returns nothing when the segment is unusable.
std::optional<IbiSeries> process_segment(const PpgSegment& segment,
                                         const PipelineConfig& cfg = {});

} // namespace lonecast::ppg
