#pragma once

#include <functional>

#include "lonecast/align.hpp"
#include "lonecast/shap.hpp"

namespace lonecast::eval {

// Counts with Lonely as the positive class; rows are actual, columns
// predicted.
struct ConfusionMatrix {
    long tn = 0, fp = 0, fn = 0, tp = 0;

    long total() const { return tn + fp + fn + tp; }
};

// y values are 0 (NotLonely) or 1 (Lonely). Throws ValidationError on
// empty input, a length mismatch, or out-of-range values.
ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// Ratios with a zero denominator are reported as 0 with their flag
// cleared, so callers can tell a genuine zero from an undefined one.
struct MetricReport {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double kappa = 0;
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
    bool kappa_defined = true;
};

MetricReport metrics(const ConfusionMatrix& m);

struct SplitIndices {
    std::vector<size_t> train; // participant's older windows + everyone else's
    std::vector<size_t> test;  // participant's most recent ceil(n/2) windows
};

// Splits a window set for one personal model. Throws ValidationError when
// the participant has fewer than 2 windows.
SplitIndices personalized_split(const align::WindowSet& windows, const ParticipantId& p);

struct ProtocolConfig {
    forest::ForestParams params; // seed is the master seed; n_threads applies throughout
    std::vector<int> window_candidates = align::default_window_candidates();
    TimePolicy time;
    bool shuffle_labels = false; // permutation null: shuffle scores within participant
    bool explain = true;         // attribute pooled test windows with each personal model

    // Called once per fitted personal model, in participant order.
    std::function<void(const ParticipantId&, const forest::ForestModel&)> on_model;
};

struct ParticipantResult {
    ParticipantId participant;
    bool ok = false;
    std::string note; // why the participant was skipped, when not ok
    size_t n_train = 0;
    size_t n_test = 0;
    ConfusionMatrix cm;
    MetricReport report;
};

struct ProtocolResult {
    double threshold = 0;  // cohort median used to binarize scores
    bool shuffled = false; // whether labels were permutation-nulled
    std::vector<ParticipantResult> participants; // ordered by id, skipped included
    size_t n_models = 0;    // participants that produced a model
    MetricReport macro;     // unweighted mean over modeled participants
    ConfusionMatrix pooled; // summed over modeled participants
    MetricReport pooled_report;

    bool has_explanations = false;
    shap::ExplanationMatrix explanations;   // one row per pooled test window
    forest::Matrix explained_X;             // the matching feature rows
    std::vector<ParticipantId> explained_participant; // per pooled row
};

// Trains one forecasting model per participant: its training set is the
// participant's older windows plus every other participant's windows, and
// window selection and imputation are refitted on exactly that training
// view (the participant's rows enter imputation only up to the day of
// their last training label). Participants that cannot be modeled (too
// few windows, single-class training labels) are skipped with a note, not
// fatal. Throws ValidationError with fewer than 2 participants reporting.
ProtocolResult run_protocol(const features::FeatureBundle& bundle,
                            const std::vector<SelfReport>& reports, const ProtocolConfig& cfg);

// metrics.json: macro and pooled blocks plus per-participant rows. The
// macro block averages the personal models; the pooled block scores all
// test windows at once, so the two legitimately differ.
void write_metrics_json(const ProtocolResult& r, const std::string& path);

// 2x2 grid with labeled actual rows and predicted columns.
void write_confusion_csv(const ConfusionMatrix& m, const std::string& path);

void write_per_participant_csv(const ProtocolResult& r, const std::string& path);

} // namespace lonecast::eval
