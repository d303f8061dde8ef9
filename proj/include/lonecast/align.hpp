#pragma once

#include "lonecast/features.hpp"

namespace lonecast::align {

enum class BinaryLabel : int { NotLonely = 0, Lonely = 1 };

struct LabeledReport {
    ParticipantId participant;
    double time = 0;
    double score = 0; // raw 0..100 loneliness
    BinaryLabel label = BinaryLabel::NotLonely;
};

struct Binarized {
    std::vector<LabeledReport> labels; // same order as the input reports
    double threshold = 0;              // cohort-wide median score
};

// Lonely iff score strictly above the cohort median (ties are NotLonely).
// Throws ValidationError on empty input.
Binarized binarize(const std::vector<SelfReport>& reports);

inline const std::vector<int>& default_window_candidates() {
    static const std::vector<int> k{1, 2, 3, 5, 7, 14};
    return k;
}

struct WindowChoice {
    int window_days = 1;
    bool uninformative = false; // no candidate had >= 3 usable pairs with defined r
    double abs_r = 0;           // |Pearson r| at the chosen window
};

// Picks the averaging window (in days) maximizing |Pearson r| between the
// feature's window averages and the raw label scores. A label's window
// covers the w calendar days ending on the label's own day. Ties go to the
// smaller candidate. Call with training labels only.
WindowChoice select_window(const features::ParticipantSeries& series,
                           const std::vector<LabeledReport>& labels, const TimePolicy& time,
                           const std::vector<int>& candidates = default_window_candidates());

// Daily table of window-averaged features. Rows cover every calendar day
// in each participant's observed data span; cells are missing where the
// window held no data.
struct AlignedFeatureTable {
    std::vector<std::string> features; // sorted, from the bundle
    std::vector<std::string> sources;  // parallel: producing stage
    std::vector<int> window_days;      // parallel: chosen windows
    std::vector<bool> uninformative;   // parallel

    struct RowKey {
        ParticipantId participant;
        int64_t day = 0;
    };
    std::vector<RowKey> rows; // sorted by (participant, day), dense per participant
    std::vector<std::vector<std::optional<double>>> cells; // rows x features

    std::optional<size_t> row_of(const ParticipantId& p, int64_t day) const;
};

AlignedFeatureTable align_and_aggregate(const features::FeatureBundle& bundle,
                                        const std::vector<WindowChoice>& choices,
                                        const TimePolicy& time);

// Single-imputation constants fitted on a training subset of rows:
// participant mean, then global mean, then 0 for features with no training
// data at all (flagged degenerate).
struct ImputeModel {
    std::vector<std::string> features;
    std::vector<std::map<ParticipantId, double>> participant_mean; // per feature
    std::vector<std::optional<double>> global_mean;                // per feature
    std::vector<bool> degenerate;                                  // per feature
};

// train_mask runs parallel to table.rows; only masked rows contribute.
ImputeModel fit_impute(const AlignedFeatureTable& table, const std::vector<bool>& train_mask);

// Fills every missing cell; the returned table has no missing values.
AlignedFeatureTable apply_impute(AlignedFeatureTable table, const ImputeModel& model);

// Flattened 14-day windows with a 7-day forecasting gap: a label on day t
// uses daily rows t-21 .. t-8, named day1_<f> (= t-21) .. day14_<f> (= t-8).
struct WindowSet {
    std::vector<std::string> base_features; // F names, table column order
    std::vector<std::string> flat_names;    // 14 * F names
    std::vector<std::vector<double>> X;     // one row per emitted window
    std::vector<int> y;                     // 0 = NotLonely, 1 = Lonely
    std::vector<ParticipantId> participant; // parallel to X
    std::vector<double> label_time;         // parallel to X

    size_t size() const { return X.size(); }
};

inline constexpr int kWindowDays = 14;
inline constexpr int kGapDays = 7;

// Emits a window per label whose full 14-day span lies inside the
// participant's table rows; earlier (or later) labels are skipped. The
// table must already be imputed.
WindowSet build_windows(const AlignedFeatureTable& table,
                        const std::vector<LabeledReport>& labels, const TimePolicy& time);

// One row per window: participant, label_time, day1_<f1> ... day14_<fF>,
// label. read_windows_csv reverses it.
void write_windows_csv(const WindowSet& ws, const std::string& path);
WindowSet read_windows_csv(const std::string& path);

} // namespace lonecast::align
