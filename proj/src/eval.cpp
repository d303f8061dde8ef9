#include "lonecast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include <json.hpp>

#include "lonecast/csv.hpp"
#include "lonecast/error.hpp"
#include "lonecast/rng.hpp"

namespace lonecast::eval {

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty()) throw ValidationError("confusion needs at least one sample");
    if (y_true.size() != y_pred.size())
        throw ValidationError("y_true and y_pred lengths differ");
    ConfusionMatrix m;
    for (size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1))
            throw ValidationError("labels must be 0 or 1");
        if (t == 1)
            (p == 1 ? m.tp : m.fn) += 1;
        else
            (p == 1 ? m.fp : m.tn) += 1;
    }
    return m;
}

MetricReport metrics(const ConfusionMatrix& m) {
    if (m.tn < 0 || m.fp < 0 || m.fn < 0 || m.tp < 0)
        throw ValidationError("confusion counts must be nonnegative");
    double total = double(m.total());
    if (m.total() <= 0) throw ValidationError("empty confusion matrix");

    MetricReport r;
    r.accuracy = double(m.tp + m.tn) / total;

    if (m.tp + m.fp > 0)
        r.precision = double(m.tp) / double(m.tp + m.fp);
    else
        r.precision_defined = false;

    if (m.tp + m.fn > 0)
        r.recall = double(m.tp) / double(m.tp + m.fn);
    else
        r.recall_defined = false;

    if (r.precision_defined && r.recall_defined && r.precision + r.recall > 0)
        r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    else
        r.f1_defined = false;

    // Chance agreement from the marginals; degenerate marginals (all mass
    // in one actual and one predicted class) leave kappa undefined.
    double p_yes = double(m.tp + m.fp) / total * double(m.tp + m.fn) / total;
    double p_no = double(m.fn + m.tn) / total * double(m.fp + m.tn) / total;
    double p_e = p_yes + p_no;
    if (p_e < 1.0)
        r.kappa = (r.accuracy - p_e) / (1.0 - p_e);
    else
        r.kappa_defined = false;
    return r;
}

SplitIndices personalized_split(const align::WindowSet& windows, const ParticipantId& p) {
    std::vector<size_t> mine;
    for (size_t i = 0; i < windows.size(); ++i)
        if (windows.participant[i] == p) mine.push_back(i);
    if (mine.size() < 2)
        throw ValidationError("participant " + p + " has fewer than 2 windows");
    std::stable_sort(mine.begin(), mine.end(),
                     [&](size_t a, size_t b) { return windows.label_time[a] < windows.label_time[b]; });

    size_t n_test = (mine.size() + 1) / 2;
    std::set<size_t> test_set(mine.end() - long(n_test), mine.end());

    SplitIndices s;
    s.test.assign(mine.end() - long(n_test), mine.end());
    for (size_t i = 0; i < windows.size(); ++i)
        if (!test_set.count(i)) s.train.push_back(i);
    return s;
}

namespace {

nlohmann::ordered_json report_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["kappa"] = r.kappa;
    auto undefined = nlohmann::ordered_json::array();
    if (!r.precision_defined) undefined.push_back("precision");
    if (!r.recall_defined) undefined.push_back("recall");
    if (!r.f1_defined) undefined.push_back("f1");
    if (!r.kappa_defined) undefined.push_back("kappa");
    if (!undefined.empty()) j["undefined"] = std::move(undefined);
    return j;
}

// Permutes each participant's loneliness scores among their own report
// slots, leaving times untouched. The null cohort keeps every marginal
// while destroying any feature-label association.
std::vector<SelfReport> shuffle_within_participant(std::vector<SelfReport> reports,
                                                   uint64_t seed) {
    std::map<ParticipantId, std::vector<size_t>> by_participant;
    for (size_t i = 0; i < reports.size(); ++i)
        by_participant[reports[i].participant].push_back(i);
    for (auto& [p, idx] : by_participant) {
        Rng rng = Rng::derive(seed, "label-shuffle:" + p);
        for (size_t i = idx.size(); i-- > 1;) {
            size_t j = size_t(rng.next_below(i + 1));
            std::swap(reports[idx[i]].loneliness, reports[idx[j]].loneliness);
        }
    }
    return reports;
}

struct PooledExplanations {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> phi;
    std::vector<double> base_values;
    forest::Matrix X;
    std::vector<ParticipantId> participant;
};

} // namespace

ProtocolResult run_protocol(const features::FeatureBundle& bundle,
                            const std::vector<SelfReport>& reports, const ProtocolConfig& cfg) {
    std::vector<SelfReport> working =
        cfg.shuffle_labels ? shuffle_within_participant(reports, cfg.params.seed) : reports;

    align::Binarized bin = align::binarize(working);

    std::set<ParticipantId> ids;
    for (const auto& r : working) ids.insert(r.participant);
    if (ids.size() < 2) throw ValidationError("the protocol needs at least 2 participants");

    // A label can be windowed iff its 14 feature days sit inside the
    // participant's observed span; that depends only on the data layout,
    // never on per-model choices, so it is computed once up front.
    std::map<ParticipantId, std::pair<int64_t, int64_t>> span;
    for (const auto& series : bundle.series)
        for (const auto& [p, vec] : series) {
            if (vec.empty()) continue;
            int64_t lo = day_of(vec.front().time, cfg.time);
            int64_t hi = day_of(vec.back().time, cfg.time);
            auto [it, inserted] = span.try_emplace(p, lo, hi);
            if (!inserted) {
                it->second.first = std::min(it->second.first, lo);
                it->second.second = std::max(it->second.second, hi);
            }
        }

    std::map<ParticipantId, std::vector<size_t>> usable; // label indices per participant
    for (size_t i = 0; i < bin.labels.size(); ++i) {
        const auto& l = bin.labels[i];
        auto it = span.find(l.participant);
        if (it == span.end()) continue;
        int64_t d = day_of(l.time, cfg.time);
        if (d - align::kWindowDays - align::kGapDays >= it->second.first &&
            d - align::kGapDays - 1 <= it->second.second)
            usable[l.participant].push_back(i);
    }
    for (auto& [p, idx] : usable)
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return bin.labels[a].time < bin.labels[b].time;
        });

    ProtocolResult result;
    result.threshold = bin.threshold;
    result.shuffled = cfg.shuffle_labels;

    PooledExplanations pooled_expl;
    double macro_acc = 0, macro_prec = 0, macro_rec = 0, macro_f1 = 0, macro_kappa = 0;

    for (const ParticipantId& p : ids) {
        ParticipantResult pr;
        pr.participant = p;

        auto uit = usable.find(p);
        size_t n_mine = uit == usable.end() ? 0 : uit->second.size();
        if (n_mine < 2) {
            pr.note = "fewer than 2 usable windows";
            result.participants.push_back(std::move(pr));
            continue;
        }

        const std::vector<size_t>& mine = uit->second;
        size_t n_test = (n_mine + 1) / 2;
        std::set<size_t> test_idx(mine.end() - long(n_test), mine.end());

        std::vector<align::LabeledReport> train_labels, test_labels;
        for (const auto& [q, idx] : usable)
            for (size_t i : idx) {
                if (test_idx.count(i))
                    test_labels.push_back(bin.labels[i]);
                else
                    train_labels.push_back(bin.labels[i]);
            }

        double last_train_time = std::numeric_limits<double>::lowest();
        for (size_t i : mine)
            if (!test_idx.count(i)) last_train_time = std::max(last_train_time, bin.labels[i].time);
        int64_t last_train_day = day_of(last_train_time, cfg.time);

        try {
            std::vector<align::WindowChoice> choices;
            choices.reserve(bundle.names.size());
            for (const auto& series : bundle.series)
                choices.push_back(
                    align::select_window(series, train_labels, cfg.time, cfg.window_candidates));

            align::AlignedFeatureTable table =
                align::align_and_aggregate(bundle, choices, cfg.time);

            // The participant's own rows beyond their training period stay
            // out of the imputation fit; everyone else's rows are fair
            // game, exactly as their windows are.
            std::vector<bool> mask(table.rows.size());
            for (size_t i = 0; i < table.rows.size(); ++i)
                mask[i] =
                    table.rows[i].participant != p || table.rows[i].day <= last_train_day;
            align::ImputeModel im = align::fit_impute(table, mask);
            table = align::apply_impute(std::move(table), im);

            align::WindowSet train_ws = align::build_windows(table, train_labels, cfg.time);
            align::WindowSet test_ws = align::build_windows(table, test_labels, cfg.time);

            forest::ForestParams params = cfg.params;
            params.seed = Rng::derive(cfg.params.seed, "model:" + p).next_u64();
            forest::ForestModel model =
                forest::fit(train_ws.X, train_ws.y, train_ws.flat_names, params);
            if (cfg.on_model) cfg.on_model(p, model);

            std::vector<int> preds;
            preds.reserve(test_ws.size());
            for (const auto& x : test_ws.X) preds.push_back(forest::predict(model, x));

            pr.cm = confusion(test_ws.y, preds);
            pr.report = metrics(pr.cm);
            pr.n_train = train_ws.size();
            pr.n_test = test_ws.size();
            pr.ok = true;

            result.pooled.tn += pr.cm.tn;
            result.pooled.fp += pr.cm.fp;
            result.pooled.fn += pr.cm.fn;
            result.pooled.tp += pr.cm.tp;
            macro_acc += pr.report.accuracy;
            macro_prec += pr.report.precision;
            macro_rec += pr.report.recall;
            macro_f1 += pr.report.f1;
            macro_kappa += pr.report.kappa;
            result.macro.precision_defined &= pr.report.precision_defined;
            result.macro.recall_defined &= pr.report.recall_defined;
            result.macro.f1_defined &= pr.report.f1_defined;
            result.macro.kappa_defined &= pr.report.kappa_defined;
            ++result.n_models;

            if (cfg.explain) {
                shap::ExplanationMatrix em =
                    shap::explain_dataset(model, test_ws.X, cfg.params.n_threads);
                if (pooled_expl.feature_names.empty())
                    pooled_expl.feature_names = em.feature_names;
                for (size_t i = 0; i < test_ws.size(); ++i) {
                    pooled_expl.phi.push_back(std::move(em.phi[i]));
                    pooled_expl.base_values.push_back(em.base_values[i]);
                    pooled_expl.X.push_back(test_ws.X[i]);
                    pooled_expl.participant.push_back(test_ws.participant[i]);
                }
            }
        } catch (const Error& e) {
            pr.ok = false;
            pr.note = e.what();
        }
        result.participants.push_back(std::move(pr));
    }

    if (result.n_models > 0) {
        double n = double(result.n_models);
        result.macro.accuracy = macro_acc / n;
        result.macro.precision = macro_prec / n;
        result.macro.recall = macro_rec / n;
        result.macro.f1 = macro_f1 / n;
        result.macro.kappa = macro_kappa / n;
        result.pooled_report = metrics(result.pooled);
    }

    if (!pooled_expl.phi.empty()) {
        shap::ExplanationMatrix& em = result.explanations;
        em.feature_names = std::move(pooled_expl.feature_names);
        em.phi = std::move(pooled_expl.phi);
        em.base_values = std::move(pooled_expl.base_values);

        size_t nf = em.feature_names.size();
        em.mean_abs_phi.assign(nf, 0.0);
        for (const auto& row : em.phi)
            for (size_t f = 0; f < nf; ++f) em.mean_abs_phi[f] += std::fabs(row[f]);
        for (double& v : em.mean_abs_phi) v /= double(em.phi.size());
        em.ranking.resize(nf);
        for (size_t f = 0; f < nf; ++f) em.ranking[f] = f;
        std::sort(em.ranking.begin(), em.ranking.end(), [&](size_t a, size_t b) {
            if (em.mean_abs_phi[a] != em.mean_abs_phi[b])
                return em.mean_abs_phi[a] > em.mean_abs_phi[b];
            return em.feature_names[a] < em.feature_names[b];
        });

        result.explained_X = std::move(pooled_expl.X);
        result.explained_participant = std::move(pooled_expl.participant);
        result.has_explanations = true;
    }
    return result;
}

void write_metrics_json(const ProtocolResult& r, const std::string& path) {
    nlohmann::ordered_json j;
    j["positive_class"] = "Lonely";
    j["threshold"] = r.threshold;
    j["shuffled_labels"] = r.shuffled;
    j["n_participants"] = r.participants.size();
    j["n_models"] = r.n_models;
    j["macro"] = report_json(r.macro);
    nlohmann::ordered_json pooled;
    pooled["tn"] = r.pooled.tn;
    pooled["fp"] = r.pooled.fp;
    pooled["fn"] = r.pooled.fn;
    pooled["tp"] = r.pooled.tp;
    pooled["metrics"] = report_json(r.pooled_report);
    j["pooled"] = std::move(pooled);
    j["note"] =
        "macro averages the per-participant models with equal weight; pooled scores "
        "every test window in a single confusion matrix. The two answer different "
        "questions and need not agree.";

    auto rows = nlohmann::ordered_json::array();
    for (const auto& pr : r.participants) {
        nlohmann::ordered_json row;
        row["participant"] = pr.participant;
        row["ok"] = pr.ok;
        if (pr.ok) {
            row["n_train"] = pr.n_train;
            row["n_test"] = pr.n_test;
            row["confusion"] = {{"tn", pr.cm.tn}, {"fp", pr.cm.fp}, {"fn", pr.cm.fn},
                                {"tp", pr.cm.tp}};
            row["metrics"] = report_json(pr.report);
        } else {
            row["note"] = pr.note;
        }
        rows.push_back(std::move(row));
    }
    j["participants"] = std::move(rows);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_confusion_csv(const ConfusionMatrix& m, const std::string& path) {
    CsvWriter w(path, {"", "predicted_not_lonely", "predicted_lonely"});
    w.write_row({"actual_not_lonely", std::to_string(m.tn), std::to_string(m.fp)});
    w.write_row({"actual_lonely", std::to_string(m.fn), std::to_string(m.tp)});
    w.close();
}

void write_per_participant_csv(const ProtocolResult& r, const std::string& path) {
    CsvWriter w(path, {"participant", "ok", "n_train", "n_test", "tn", "fp", "fn", "tp",
                       "accuracy", "precision", "recall", "f1", "kappa", "note"});
    for (const auto& pr : r.participants) {
        if (pr.ok)
            w.write_row({pr.participant, "true", std::to_string(pr.n_train),
                         std::to_string(pr.n_test), std::to_string(pr.cm.tn),
                         std::to_string(pr.cm.fp), std::to_string(pr.cm.fn),
                         std::to_string(pr.cm.tp), format_double(pr.report.accuracy),
                         format_double(pr.report.precision), format_double(pr.report.recall),
                         format_double(pr.report.f1), format_double(pr.report.kappa), ""});
        else
            w.write_row({pr.participant, "false", "0", "0", "0", "0", "0", "0", "0", "0", "0",
                         "0", "0", pr.note});
    }
    w.close();
}

} // namespace lonecast::eval
