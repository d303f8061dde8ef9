#include "lonecast/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lonecast/align.hpp"
#include "lonecast/error.hpp"
#include "lonecast/eval.hpp"
#include "lonecast/features.hpp"
#include "lonecast/forest.hpp"
#include "lonecast/model.hpp"
#include "lonecast/shap.hpp"
#include "lonecast/synth.hpp"

namespace fs = std::filesystem;

namespace lonecast::cli {

namespace {

std::string fmt3(double v) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(3) << v;
    return o.str();
}

size_t count_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::vector<char> buf(1 << 20);
    size_t n = 0;
    while (in) {
        in.read(buf.data(), std::streamsize(buf.size()));
        n += size_t(std::count(buf.data(), buf.data() + in.gcount(), '\n'));
    }
    return n;
}

void print_report(const std::string& label, const eval::MetricReport& r) {
    std::cout << label << "  accuracy " << fmt3(r.accuracy) << "  precision "
              << fmt3(r.precision) << "  recall " << fmt3(r.recall) << "  f1 " << fmt3(r.f1)
              << "  kappa " << fmt3(r.kappa) << "\n";
}

struct SynthOptions {
    std::string out;
    synth::SynthConfig cfg;
};

struct ExtractFlags {
    int tz_offset = 0;
    double flatline_max = 0.05;
    double clipping_max = 0.02;
    double amplitude_min = 0.01;
    double amplitude_max = 100.0;
    double min_duration = 10.0;
    double place_radius = 150.0;
    double place_min_dwell = 600.0;
};

struct ExtractOptions {
    std::string in, out;
    ExtractFlags flags;
};

struct AlignOptions {
    std::string in, out, features_file;
    int tz_offset = 0;
    std::vector<int> candidates = align::default_window_candidates();
    ExtractFlags flags;
};

struct ForestFlags {
    int trees = 400;
    int depth = 15;
    int min_split = 2;
    int mtry = 0;
    int threads = 1;
    uint64_t seed = 0;
};

struct RunOptions {
    std::string in, out, features_file, save_models;
    int tz_offset = 0;
    std::vector<int> candidates = align::default_window_candidates();
    ForestFlags forest;
    ExtractFlags flags;
    bool shuffle = false;
    bool no_explain = false;
    int top_k = 20;
};

struct ExplainOptions {
    std::string windows_file, out, model_file, save_model;
    ForestFlags forest;
    int top_k = 20;
};

void add_extract_flags(CLI::App* sub, ExtractFlags& f) {
    sub->add_option("--tz-offset", f.tz_offset,
                    "UTC offset in seconds defining local day boundaries");
    sub->add_option("--ppg-flatline-max-fraction", f.flatline_max,
                    "reject a segment when more of it is flat than this")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--ppg-clipping-max-fraction", f.clipping_max,
                    "reject a segment when more of it rides the rails than this")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--ppg-amplitude-min", f.amplitude_min,
                    "minimum acceptable peak-to-peak amplitude");
    sub->add_option("--ppg-amplitude-max", f.amplitude_max,
                    "maximum acceptable peak-to-peak amplitude");
    sub->add_option("--ppg-min-duration", f.min_duration,
                    "shortest segment worth analyzing, in seconds");
    sub->add_option("--place-radius", f.place_radius, "stay-point radius in meters");
    sub->add_option("--place-min-dwell", f.place_min_dwell,
                    "minimum stay-point dwell in seconds");
}

// The tz-offset lives on ExtractFlags for extract but is a top-level
// option for align/run, so those commands wire it themselves.
features::ExtractConfig to_extract_config(const ExtractFlags& f, int tz_offset) {
    features::ExtractConfig ec;
    ec.time.utc_offset_seconds = tz_offset;
    ec.ppg.quality.flatline_max_fraction = f.flatline_max;
    ec.ppg.quality.clipping_max_fraction = f.clipping_max;
    ec.ppg.quality.amplitude_min = f.amplitude_min;
    ec.ppg.quality.amplitude_max = f.amplitude_max;
    ec.ppg.peaks.min_duration_s = f.min_duration;
    ec.place_radius_m = f.place_radius;
    ec.place_min_dwell_s = f.place_min_dwell;
    return ec;
}

void add_forest_flags(CLI::App* sub, ForestFlags& f) {
    sub->add_option("--trees", f.trees, "trees in the forest")->check(CLI::PositiveNumber);
    sub->add_option("--depth", f.depth, "maximum tree depth")->check(CLI::PositiveNumber);
    sub->add_option("--min-split", f.min_split, "smallest node worth splitting")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mtry", f.mtry, "features tried per split; 0 means ceil(sqrt(d))");
    sub->add_option("--threads", f.threads, "worker threads; results do not depend on this")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "master random seed");
}

forest::ForestParams to_forest_params(const ForestFlags& f) {
    forest::ForestParams p;
    p.n_trees = f.trees;
    p.max_depth = f.depth;
    p.min_samples_split = f.min_split;
    p.mtry = f.mtry;
    p.seed = f.seed;
    p.n_threads = f.threads;
    return p;
}

features::FeatureBundle load_or_extract(const std::string& features_file, const std::string& in,
                                        const CohortStreams& streams,
                                        const features::ExtractConfig& ec) {
    if (!features_file.empty()) return features::read_features_csv(features_file);
    std::string jsonl = (fs::path(in) / cohort_files::kPpgSegments).string();
    return features::extract_features(streams, jsonl, ec);
}

void print_bundle_summary(const features::FeatureBundle& bundle) {
    std::set<ParticipantId> participants;
    std::map<std::string, size_t> rows_by_source;
    for (size_t i = 0; i < bundle.names.size(); ++i)
        for (const auto& [p, vec] : bundle.series[i]) {
            participants.insert(p);
            rows_by_source[bundle.sources[i]] += vec.size();
        }
    std::cout << "participants: " << participants.size() << "\n";
    std::cout << "features: " << bundle.names.size() << "\n";
    for (const auto& [source, n] : rows_by_source)
        std::cout << "  " << source << " observations: " << n << "\n";
}

int cmd_synth(const SynthOptions& o) {
    fs::create_directories(o.out);
    synth::PlantedTruth truth = synth::generate_to_dir(o.cfg, o.out);
    synth::save_truth(truth, (fs::path(o.out) / "truth.json").string());

    IngestOptions opts;
    opts.load_ppg = false;
    CohortStreams streams = ingest_cohort(o.out, opts);
    size_t segments = count_lines((fs::path(o.out) / cohort_files::kPpgSegments).string());

    std::cout << "wrote " << o.out << "\n";
    std::cout << "participants: " << streams.participants.size() << "\n";
    std::cout << "self reports: " << streams.self_reports.size() << "\n";
    std::cout << "daily score rows: " << streams.daily_scores.size() << "\n";
    std::cout << "phone events: " << streams.phone_events.size() << "\n";
    std::cout << "location fixes: " << streams.location_fixes.size() << "\n";
    std::cout << "ppg segments: " << segments << "\n";
    std::cout << describe_truth(truth);
    return 0;
}

int cmd_extract(const ExtractOptions& o) {
    fs::create_directories(o.out);
    IngestOptions opts;
    opts.time.utc_offset_seconds = o.flags.tz_offset;
    opts.load_ppg = false;
    CohortStreams streams = ingest_cohort(o.in, opts);
    if (streams.warnings.total() > 0)
        std::cout << "dropped " << streams.warnings.total() << " duplicate rows\n";

    features::FeatureBundle bundle =
        load_or_extract("", o.in, streams, to_extract_config(o.flags, o.flags.tz_offset));
    features::write_features_csv(bundle, (fs::path(o.out) / "features.csv").string());
    std::cout << "wrote " << (fs::path(o.out) / "features.csv").string() << "\n";
    print_bundle_summary(bundle);
    return 0;
}

int cmd_align(const AlignOptions& o) {
    fs::create_directories(o.out);
    IngestOptions opts;
    opts.time.utc_offset_seconds = o.tz_offset;
    opts.load_ppg = false;
    CohortStreams streams = ingest_cohort(o.in, opts);
    TimePolicy tz{o.tz_offset};

    features::FeatureBundle bundle = load_or_extract(
        o.features_file, o.in, streams, to_extract_config(o.flags, o.tz_offset));

    align::Binarized bin = align::binarize(streams.self_reports);
    std::vector<align::WindowChoice> choices;
    choices.reserve(bundle.names.size());
    for (const auto& series : bundle.series)
        choices.push_back(align::select_window(series, bin.labels, tz, o.candidates));

    align::AlignedFeatureTable table = align::align_and_aggregate(bundle, choices, tz);
    std::vector<bool> mask(table.rows.size(), true);
    align::ImputeModel im = align::fit_impute(table, mask);
    table = align::apply_impute(std::move(table), im);
    align::WindowSet ws = align::build_windows(table, bin.labels, tz);

    align::write_windows_csv(ws, (fs::path(o.out) / "windows.csv").string());

    nlohmann::ordered_json j;
    j["threshold"] = bin.threshold;
    j["n_labels"] = bin.labels.size();
    j["n_windows"] = ws.size();
    auto feats = nlohmann::ordered_json::array();
    for (size_t i = 0; i < bundle.names.size(); ++i)
        feats.push_back({{"feature", bundle.names[i]},
                         {"source", bundle.sources[i]},
                         {"window_days", choices[i].window_days},
                         {"uninformative", choices[i].uninformative},
                         {"abs_r", choices[i].abs_r}});
    j["features"] = std::move(feats);
    std::string meta_path = (fs::path(o.out) / "align_summary.json").string();
    std::ofstream meta(meta_path, std::ios::binary);
    if (!meta) throw IoError("cannot open for writing: " + meta_path);
    meta << j.dump(2) << '\n';
    if (!meta) throw IoError("write failed: " + meta_path);

    std::cout << "wrote " << (fs::path(o.out) / "windows.csv").string() << "\n";
    std::cout << "threshold: " << bin.threshold << "\n";
    std::cout << "windows: " << ws.size() << " from " << bin.labels.size() << " reports\n";
    return 0;
}

int cmd_run(const RunOptions& o) {
    fs::create_directories(o.out);
    IngestOptions opts;
    opts.time.utc_offset_seconds = o.tz_offset;
    opts.load_ppg = false;
    CohortStreams streams = ingest_cohort(o.in, opts);

    features::FeatureBundle bundle = load_or_extract(
        o.features_file, o.in, streams, to_extract_config(o.flags, o.tz_offset));

    eval::ProtocolConfig pc;
    pc.params = to_forest_params(o.forest);
    pc.window_candidates = o.candidates;
    pc.time.utc_offset_seconds = o.tz_offset;
    pc.shuffle_labels = o.shuffle;
    pc.explain = !o.no_explain && !o.shuffle;
    if (!o.save_models.empty()) {
        fs::create_directories(o.save_models);
        std::string dir = o.save_models;
        pc.on_model = [dir](const ParticipantId& p, const forest::ForestModel& m) {
            forest::save(m, (fs::path(dir) / ("model_" + p + ".json")).string());
        };
    }

    eval::ProtocolResult result = eval::run_protocol(bundle, streams.self_reports, pc);

    eval::write_metrics_json(result, (fs::path(o.out) / "metrics.json").string());
    eval::write_confusion_csv(result.pooled, (fs::path(o.out) / "confusion.csv").string());
    eval::write_per_participant_csv(result,
                                    (fs::path(o.out) / "per_participant.csv").string());
    if (result.has_explanations)
        shap::export_beeswarm(result.explanations, result.explained_X, o.top_k,
                              (fs::path(o.out) / "shap_beeswarm.csv").string(),
                              (fs::path(o.out) / "shap_summary.json").string());

    std::cout << "models: " << result.n_models << "/" << result.participants.size()
              << " participants\n";
    if (result.n_models > 0) {
        print_report("macro ", result.macro);
        print_report("pooled", result.pooled_report);
        std::cout << "pooled confusion  tn " << result.pooled.tn << "  fp " << result.pooled.fp
                  << "  fn " << result.pooled.fn << "  tp " << result.pooled.tp << "\n";
        std::cout << "macro averages the per-participant models with equal weight; pooled\n"
                     "scores every test window in a single confusion matrix. The two answer\n"
                     "different questions and need not agree.\n";
    }
    for (const auto& pr : result.participants)
        if (!pr.ok) std::cout << "skipped " << pr.participant << ": " << pr.note << "\n";
    if (result.has_explanations && !result.explanations.ranking.empty()) {
        std::cout << "top features by mean |phi|:\n";
        const auto& em = result.explanations;
        for (size_t r = 0; r < std::min<size_t>(5, em.ranking.size()); ++r)
            std::cout << "  " << em.feature_names[em.ranking[r]] << "  "
                      << fmt3(em.mean_abs_phi[em.ranking[r]]) << "\n";
    }
    std::cout << "wrote " << (fs::path(o.out) / "metrics.json").string() << "\n";
    return result.n_models >= 1 ? 0 : 1;
}

int cmd_explain(const ExplainOptions& o) {
    fs::create_directories(o.out);
    align::WindowSet ws = align::read_windows_csv(o.windows_file);
    if (ws.size() == 0) throw ValidationError("the window file holds no rows");

    forest::ForestModel model;
    if (!o.model_file.empty()) {
        model = forest::load(o.model_file);
        if (model.n_features() != ws.flat_names.size())
            throw ValidationError("model and window file disagree on feature count");
    } else {
        std::cout << "no --model given; training a single model on every window "
                     "(exploratory, not the personalized protocol)\n";
        model = forest::fit(ws.X, ws.y, ws.flat_names, to_forest_params(o.forest));
    }
    if (!o.save_model.empty()) forest::save(model, o.save_model);

    shap::ExplanationMatrix em = shap::explain_dataset(model, ws.X, o.forest.threads);
    shap::export_beeswarm(em, ws.X, o.top_k, (fs::path(o.out) / "shap_beeswarm.csv").string(),
                          (fs::path(o.out) / "shap_summary.json").string());

    std::cout << "explained " << ws.size() << " windows\n";
    std::cout << "top features by mean |phi|:\n";
    for (size_t r = 0; r < std::min<size_t>(10, em.ranking.size()); ++r)
        std::cout << "  " << em.feature_names[em.ranking[r]] << "  "
                  << fmt3(em.mean_abs_phi[em.ranking[r]]) << "\n";
    std::cout << "wrote " << (fs::path(o.out) / "shap_beeswarm.csv").string() << "\n";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"forecasts self-reported loneliness a week ahead from wearable and "
                 "phone-sensing features, and explains the predictions"};
    app.require_subcommand(1);

    SynthOptions so;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate a synthetic cohort with a planted ground truth");
    synth_cmd->add_option("--out", so.out, "directory for the cohort files")->required();
    synth_cmd->add_option("--participants", so.cfg.n_participants, "cohort size")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--weeks", so.cfg.weeks, "study length")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--reports-per-day", so.cfg.reports_per_day, "loneliness prompts per day")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--sample-rate", so.cfg.ppg_sample_rate, "PPG sample rate in Hz")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--missing-rate", so.cfg.missing_rate,
                          "fraction of segments, score days, and reports dropped")
        ->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--effect-strength", so.cfg.effect_strength,
                          "planted signal strength; 0 makes labels pure noise")
        ->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--seed", so.cfg.seed, "master random seed");
    synth_cmd->set_config("--config", "", "read options from a key=value file");

    ExtractOptions eo;
    CLI::App* extract_cmd =
        app.add_subcommand("extract", "turn a raw cohort directory into feature series");
    extract_cmd->add_option("--in", eo.in, "cohort directory")->required();
    extract_cmd->add_option("--out", eo.out, "directory for features.csv")->required();
    add_extract_flags(extract_cmd, eo.flags);
    extract_cmd->set_config("--config", "", "read options from a key=value file");

    AlignOptions ao;
    CLI::App* align_cmd = app.add_subcommand(
        "align", "window, aggregate, and impute features against every label at once "
                 "(exploratory; `run` refits per model for honest evaluation)");
    align_cmd->add_option("--in", ao.in, "cohort directory (for the self reports)")->required();
    align_cmd->add_option("--features", ao.features_file,
                          "features.csv from `extract`; extracted fresh when omitted");
    align_cmd->add_option("--out", ao.out, "directory for windows.csv")->required();
    align_cmd->add_option("--tz-offset", ao.tz_offset,
                          "UTC offset in seconds defining local day boundaries");
    align_cmd->add_option("--window-candidates", ao.candidates,
                          "candidate averaging windows in days")
        ->delimiter(',');
    align_cmd->set_config("--config", "", "read options from a key=value file");

    RunOptions ro;
    CLI::App* run_cmd = app.add_subcommand(
        "run", "evaluate the personalized forecasting protocol end to end");
    run_cmd->add_option("--in", ro.in, "cohort directory")->required();
    run_cmd->add_option("--out", ro.out, "directory for metrics and explanations")->required();
    run_cmd->add_option("--features", ro.features_file,
                        "features.csv from `extract`; extracted fresh when omitted");
    run_cmd->add_option("--tz-offset", ro.tz_offset,
                        "UTC offset in seconds defining local day boundaries");
    run_cmd->add_option("--window-candidates", ro.candidates,
                        "candidate averaging windows in days")
        ->delimiter(',');
    add_forest_flags(run_cmd, ro.forest);
    run_cmd->add_flag("--shuffle-labels", ro.shuffle,
                      "permutation null: shuffle each participant's scores in time "
                      "(skips attribution export)");
    run_cmd->add_flag("--no-explain", ro.no_explain, "skip attribution export");
    run_cmd->add_option("--top-k", ro.top_k, "features in the beeswarm export")
        ->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--save-models", ro.save_models,
                        "directory to write each personal model into");
    run_cmd->set_config("--config", "", "read options from a key=value file");

    ExplainOptions xo;
    CLI::App* explain_cmd = app.add_subcommand(
        "explain", "attribute predictions on a window file and export beeswarm data");
    explain_cmd->add_option("--windows", xo.windows_file, "windows.csv from `align`")
        ->required();
    explain_cmd->add_option("--out", xo.out, "directory for the beeswarm files")->required();
    explain_cmd->add_option("--model", xo.model_file,
                            "saved forest to explain; a fresh one is trained when omitted");
    explain_cmd->add_option("--save-model", xo.save_model, "path to save the fitted model");
    explain_cmd->add_option("--top-k", xo.top_k, "features in the beeswarm export")
        ->check(CLI::NonNegativeNumber);
    add_forest_flags(explain_cmd, xo.forest);
    explain_cmd->set_config("--config", "", "read options from a key=value file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth_cmd) return cmd_synth(so);
        if (*extract_cmd) return cmd_extract(eo);
        if (*align_cmd) return cmd_align(ao);
        if (*run_cmd) return cmd_run(ro);
        if (*explain_cmd) return cmd_explain(xo);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2; // no subcommand selected; require_subcommand should prevent this
}

} // namespace lonecast::cli
