#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lonecast/error.hpp"
#include "lonecast/eval.hpp"
#include "lonecast/rng.hpp"

using namespace lonecast;
using eval::ConfusionMatrix;

namespace {

const TimePolicy kTz;

double noon(int64_t day) { return day_start(day, kTz) + 43200.0; }

// a two-participant bundle where one feature's 1-day value predicts the
// score ten days later and a second feature is pure noise
struct PlantedCohort {
    features::FeatureBundle bundle;
    std::vector<SelfReport> reports;
};

// The signal must be slowly varying: the window is chosen by correlating
// its averages with same-day scores, so only a feature whose today still
// resembles its ten-days-ago can be picked up and then forecast.
PlantedCohort make_cohort(int64_t n_days, uint64_t seed) {
    PlantedCohort c;
    c.bundle.names = {"noise", "signal"}; // bundle names stay sorted
    c.bundle.sources = {"test", "test"};
    c.bundle.series.resize(2);
    int pi = 0;
    for (const std::string p : {"alice", "bob", "cara"}) {
        Rng rng = Rng::derive(seed, "cohort:" + p);
        double period = 20.0 + double(pi++);
        double phase = rng.uniform(0, 6.28318530717958647692);
        std::vector<double> z(static_cast<size_t>(n_days));
        for (int64_t d = 0; d < n_days; ++d)
            z[size_t(d)] = std::sin(6.28318530717958647692 * double(d) / period + phase) +
                           0.25 * rng.normal();
        auto& sig = c.bundle.series[1][p];
        auto& noi = c.bundle.series[0][p];
        for (int64_t d = 0; d < n_days; ++d) {
            sig.push_back({noon(d), z[size_t(d)]});
            noi.push_back({noon(d), rng.uniform(0, 1)});
        }
        for (int64_t d = 10; d < n_days; ++d) {
            double score = std::clamp(50.0 + 35.0 * z[size_t(d - 10)], 0.0, 100.0);
            c.reports.push_back({p, noon(d) + 600.0, score});
        }
    }
    return c;
}

} // namespace

TEST_CASE("confusion counts each quadrant with Lonely positive") {
    std::vector<int> t = {0, 0, 0, 1, 1, 1, 1, 0};
    std::vector<int> p = {0, 1, 0, 1, 0, 1, 1, 0};
    auto cm = eval::confusion(t, p);
    CHECK(cm.tn == 3);
    CHECK(cm.fp == 1);
    CHECK(cm.fn == 1);
    CHECK(cm.tp == 3);
    CHECK(cm.total() == 8);

    CHECK_THROWS_AS(eval::confusion({}, {}), ValidationError);
    CHECK_THROWS_AS(eval::confusion({0, 1}, {0}), ValidationError);
    CHECK_THROWS_AS(eval::confusion({0, 2}, {0, 1}), ValidationError);
}

TEST_CASE("metrics reproduce a published pooled matrix exactly") {
    // the pooled two-week-horizon matrix: 1371 tn, 114 fp, 412 fn, 1198 tp
    ConfusionMatrix cm{1371, 114, 412, 1198};
    auto r = eval::metrics(cm);

    double n = 3095.0;
    double acc = (1371.0 + 1198.0) / n;
    CHECK(r.accuracy == doctest::Approx(acc).epsilon(1e-15));
    CHECK(std::fabs(r.accuracy - 0.8300) < 0.0005);

    // kappa longhand from marginal chance agreement
    double p_yes = ((1198 + 412) / n) * ((1198 + 114) / n);
    double p_no = ((1371 + 114) / n) * ((1371 + 412) / n);
    double pe = p_yes + p_no;
    double kappa = (acc - pe) / (1 - pe);
    CHECK(r.kappa == doctest::Approx(kappa).epsilon(1e-12));
    CHECK(std::fabs(r.kappa - 0.662) < 0.002);

    CHECK(r.precision == doctest::Approx(1198.0 / 1312.0).epsilon(1e-12));
    CHECK(r.recall == doctest::Approx(1198.0 / 1610.0).epsilon(1e-12));
    double f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    CHECK(r.f1 == doctest::Approx(f1).epsilon(1e-12));
    CHECK(r.kappa_defined);
    CHECK(r.f1_defined);
}

TEST_CASE("undefined ratios are flagged instead of fabricated") {
    // no positive predictions and no positive truth: precision undefined
    auto r = eval::metrics(ConfusionMatrix{5, 0, 0, 0});
    CHECK(r.accuracy == 1.0);
    CHECK_FALSE(r.precision_defined);
    CHECK_FALSE(r.recall_defined);
    CHECK_FALSE(r.f1_defined);
    CHECK(r.precision == 0.0);
    // all agreement with one class present: chance agreement is also 1
    CHECK_FALSE(r.kappa_defined);

    // predicted positives exist but no true positives
    auto r2 = eval::metrics(ConfusionMatrix{3, 2, 0, 0});
    CHECK(r2.precision_defined);
    CHECK(r2.precision == 0.0);
    CHECK_FALSE(r2.recall_defined);
    CHECK_FALSE(r2.f1_defined);
}

TEST_CASE("personal test sets are the most recent half, rounded up") {
    align::WindowSet ws;
    ws.base_features = {"f"};
    ws.flat_names = {"day1_f"};
    // interleave two participants; alice's times deliberately unsorted
    std::vector<double> alice_times = {50, 10, 30, 20, 40};
    for (double t : alice_times) {
        ws.X.push_back({t});
        ws.y.push_back(0);
        ws.participant.push_back("alice");
        ws.label_time.push_back(t);
    }
    for (double t : {15.0, 25.0}) {
        ws.X.push_back({t});
        ws.y.push_back(1);
        ws.participant.push_back("bob");
        ws.label_time.push_back(t);
    }

    auto split = eval::personalized_split(ws, "alice");
    // ceil(5/2) = 3 most recent: times 30, 40, 50
    REQUIRE(split.test.size() == 3);
    std::set<double> test_times;
    for (size_t i : split.test) {
        CHECK(ws.participant[i] == "alice");
        test_times.insert(ws.label_time[i]);
    }
    CHECK(test_times == std::set<double>{30, 40, 50});
    // train = alice's older two + both of bob's
    REQUIRE(split.train.size() == 4);
    std::set<double> train_times;
    for (size_t i : split.train) train_times.insert(ws.label_time[i]);
    CHECK(train_times == std::set<double>{10, 20, 15, 25});

    // every test window is strictly newer than every personal train window
    for (size_t i : split.train)
        if (ws.participant[i] == "alice")
            for (size_t j : split.test) CHECK(ws.label_time[i] < ws.label_time[j]);

    auto one = eval::personalized_split(ws, "bob");
    CHECK(one.test.size() == 1);
    CHECK(one.train.size() == 6);

    align::WindowSet tiny = ws;
    tiny.X.resize(6);
    tiny.y.resize(6);
    tiny.participant.resize(6);
    tiny.label_time.resize(6);
    CHECK_THROWS_AS(eval::personalized_split(tiny, "bob"), ValidationError);
    CHECK_THROWS_AS(eval::personalized_split(ws, "nobody"), ValidationError);
}

TEST_CASE("the protocol learns a planted forecastable signal") {
    auto c = make_cohort(70, 404);
    eval::ProtocolConfig cfg;
    cfg.params.n_trees = 60;
    cfg.params.max_depth = 8;
    cfg.params.seed = 9;
    std::vector<ParticipantId> seen;
    cfg.on_model = [&](const ParticipantId& p, const forest::ForestModel& m) {
        seen.push_back(p);
        CHECK(m.trees.size() == 60);
    };
    auto r = eval::run_protocol(c.bundle, c.reports, cfg);

    CHECK(r.n_models == 3);
    CHECK(seen == std::vector<ParticipantId>{"alice", "bob", "cara"});
    CHECK_FALSE(r.shuffled);
    CHECK(r.threshold > 0);
    for (const auto& pr : r.participants) {
        CHECK(pr.ok);
        CHECK(pr.n_train > pr.n_test); // train includes other participants
        CHECK(pr.cm.total() == long(pr.n_test));
    }
    // the signal cell sits at day12 (t-10); forecastable well above chance
    CHECK(r.macro.accuracy > 0.75);
    CHECK(r.pooled.total() ==
          long(r.participants[0].n_test + r.participants[1].n_test + r.participants[2].n_test));

    REQUIRE(r.has_explanations);
    CHECK(r.explanations.phi.size() == size_t(r.pooled.total()));
    CHECK(r.explained_X.size() == r.explanations.phi.size());
    CHECK(r.explained_participant.size() == r.explanations.phi.size());
    // planted-signal cells dominate the attribution; neighbors of day12
    // carry nearly the same information, so only the base feature and a
    // near-the-lag position are stable claims
    const auto& names = r.explanations.feature_names;
    std::string top = names[r.explanations.ranking[0]];
    CHECK(top.find("_signal") != std::string::npos);
    bool day12_in_top3 = false;
    for (size_t k = 0; k < 3; ++k)
        if (names[r.explanations.ranking[k]] == "day12_signal") day12_in_top3 = true;
    CHECK(day12_in_top3);
}

TEST_CASE("shuffling labels destroys the signal but not determinism") {
    auto c = make_cohort(70, 404);
    eval::ProtocolConfig cfg;
    cfg.params.n_trees = 40;
    cfg.params.max_depth = 6;
    cfg.params.seed = 9;
    cfg.shuffle_labels = true;
    cfg.explain = false;
    auto a = eval::run_protocol(c.bundle, c.reports, cfg);
    auto b = eval::run_protocol(c.bundle, c.reports, cfg);
    CHECK(a.shuffled);
    CHECK_FALSE(a.has_explanations);
    CHECK(a.macro.accuracy == b.macro.accuracy); // same seed, same permutation
    CHECK(a.pooled.tp == b.pooled.tp);
    CHECK(a.macro.accuracy < 0.7); // planted link broken
}

TEST_CASE("report files carry the macro and pooled stories") {
    auto c = make_cohort(60, 7);
    eval::ProtocolConfig cfg;
    cfg.params.n_trees = 30;
    cfg.params.max_depth = 6;
    cfg.params.seed = 1;
    cfg.explain = false;
    auto r = eval::run_protocol(c.bundle, c.reports, cfg);

    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "lonecast_test_eval";
    fs::create_directories(dir);
    auto metrics_path = (dir / "metrics.json").string();
    auto confusion_path = (dir / "confusion.csv").string();
    auto per_path = (dir / "per_participant.csv").string();
    eval::write_metrics_json(r, metrics_path);
    eval::write_confusion_csv(r.pooled, confusion_path);
    eval::write_per_participant_csv(r, per_path);

    std::ifstream jin(metrics_path);
    auto j = nlohmann::json::parse(jin);
    CHECK(j["n_models"].get<size_t>() == r.n_models);
    CHECK(j["macro"]["accuracy"].get<double>() == r.macro.accuracy);
    CHECK(j["pooled"]["metrics"]["accuracy"].get<double>() == r.pooled_report.accuracy);
    CHECK(j["pooled"]["tp"].get<long>() == r.pooled.tp);
    CHECK(j["participants"].size() == r.participants.size());
    CHECK(j["shuffled_labels"].get<bool>() == false);
    // the report itself explains why macro and pooled may disagree
    CHECK(j["note"].get<std::string>().find("pooled") != std::string::npos);

    std::ifstream cin_(confusion_path);
    std::string line;
    REQUIRE(std::getline(cin_, line));
    CHECK(line.find("predicted") != std::string::npos);
    size_t data_rows = 0;
    while (std::getline(cin_, line)) ++data_rows;
    CHECK(data_rows == 2);

    std::ifstream pin(per_path);
    REQUIRE(std::getline(pin, line));
    CHECK(line.find("participant") != std::string::npos);
    data_rows = 0;
    while (std::getline(pin, line)) ++data_rows;
    CHECK(data_rows == r.participants.size());

    fs::remove_all(dir);
}

TEST_CASE("too few participants is an error, a skipped one is not") {
    auto c = make_cohort(60, 11);
    // strip cara's reports so only two participants report
    std::vector<SelfReport> two;
    for (const auto& rep : c.reports)
        if (rep.participant != "cara") two.push_back(rep);
    eval::ProtocolConfig cfg;
    cfg.params.n_trees = 20;
    cfg.params.max_depth = 5;
    cfg.params.seed = 2;
    cfg.explain = false;
    auto r = eval::run_protocol(c.bundle, two, cfg);
    CHECK(r.n_models == 2);

    std::vector<SelfReport> one;
    for (const auto& rep : c.reports)
        if (rep.participant == "alice") one.push_back(rep);
    CHECK_THROWS_AS(eval::run_protocol(c.bundle, one, cfg), ValidationError);
}
