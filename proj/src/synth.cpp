#include "lonecast/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lonecast/error.hpp"
#include "lonecast/rng.hpp"
#include "lonecast/time_util.hpp"

namespace lonecast::synth {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

constexpr int kScoreCount = 3;
const std::array<const char*, kScoreCount> kScoreNames = {"sleep_restless", "activity_balance",
                                                          "social_contact"};
// Raw logit weights before effect scaling: restless sleep raises
// loneliness, balanced activity and social contact lower it.
constexpr std::array<double, kScoreCount> kRawWeights = {1.0, -0.8, -0.4};
constexpr int kLagDays = 10;

// Each driver is a slow multi-week rhythm plus a little day-to-day noise.
// The rhythm has to be slow: the forecaster only sees daily values 8 to 21
// days before a label, so a driver that decorrelates within a week would
// leave nothing recoverable at the planted lag. A period of a few weeks
// also swings each participant through both label classes, keeping the
// per-participant class mix balanced.
constexpr double kDriverPeriodMin = 18.0; // days
constexpr double kDriverPeriodMax = 26.0;
constexpr double kDriverWaveAmp = 0.95 * 1.4142135623730951; // sd 0.95 before mixing
constexpr double kDriverNoiseSd = 0.31;
constexpr double kDriverNoiseRho = 0.5; // memory of the noise component
constexpr double kMoodPhi = 0.5;    // autocorrelation of the non-driver mood noise
constexpr double kMoodSigma = 0.5;  // its stationary spread
constexpr double kOffsetSigma = 0.15; // between-participant trait spread
constexpr double kReportNoise = 0.15; // per-report observation noise (logit units)

constexpr double kSegmentSeconds = 720.0; // 12-minute PPG segments
constexpr int kSegmentsPerDay = 12;       // one every 2 hours

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Equirectangular offset, plenty accurate at the few-km scale used here.
void offset_point(double lat, double lon, double bearing_rad, double dist_m, double& out_lat,
                  double& out_lon) {
    out_lat = lat + dist_m * std::cos(bearing_rad) / 111320.0;
    out_lon = lon + dist_m * std::sin(bearing_rad) / (111320.0 * std::cos(lat * kPi / 180.0));
}

struct ParticipantPlan {
    ParticipantId id;
    int index = 0;
    double alpha = 0;       // trait offset in the logit
    double base_ibi_ms = 0; // resting inter-beat interval
    double home_lat = 0, home_lon = 0;
    double work_lat = 0, work_lon = 0;
    std::array<std::pair<double, double>, 3> leisure{};
    // drivers[s][j] holds driver s on day j - kLagDays, so index d is the
    // value loneliness on day d responds to
    std::array<std::vector<double>, kScoreCount> drivers;
    std::vector<double> latent; // logit-scale loneliness per emitted day
};

std::string participant_name(int index, int n_participants) {
    std::string digits = std::to_string(index + 1);
    size_t width = std::max<size_t>(2, std::to_string(n_participants).size());
    return "p" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

void validate(const SynthConfig& cfg) {
    if (cfg.n_participants < 1) throw ValidationError("n_participants must be at least 1");
    if (cfg.weeks < 1) throw ValidationError("weeks must be at least 1");
    if (cfg.reports_per_day < 1) throw ValidationError("reports_per_day must be at least 1");
    if (!(cfg.ppg_sample_rate > 0)) throw ValidationError("ppg_sample_rate must be positive");
    if (!(cfg.missing_rate >= 0 && cfg.missing_rate < 1))
        throw ValidationError("missing_rate must lie in [0, 1)");
    if (!(cfg.effect_strength >= 0)) throw ValidationError("effect_strength must be >= 0");
}

ParticipantPlan plan_participant(const SynthConfig& cfg, int index, int n_days) {
    ParticipantPlan p;
    p.index = index;
    p.id = participant_name(index, cfg.n_participants);

    for (int s = 0; s < kScoreCount; ++s) {
        Rng rng = Rng::derive(cfg.seed, "drivers:" + p.id + ":" + kScoreNames[s]);
        auto& z = p.drivers[s];
        z.resize(size_t(n_days + kLagDays));
        double period = rng.uniform(kDriverPeriodMin, kDriverPeriodMax);
        double phase = rng.uniform(0, 2 * kPi);
        double innovation = std::sqrt(1.0 - kDriverNoiseRho * kDriverNoiseRho);
        double noise = rng.normal();
        for (size_t j = 0; j < z.size(); ++j) {
            z[j] = kDriverWaveAmp * std::sin(2 * kPi * double(j) / period + phase) +
                   kDriverNoiseSd * noise;
            noise = kDriverNoiseRho * noise + rng.normal(0, innovation);
        }
        // Standardize, then snap to the 0-100 score scale the participant
        // actually reports. Loneliness responds to the reported value, so
        // the planted dependence survives the clamping exactly.
        double mean = 0;
        for (double v : z) mean += v;
        mean /= double(z.size());
        double var = 0;
        for (double v : z) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / double(z.size()));
        for (double& v : z) {
            double standardized = (v - mean) / sd;
            v = (std::clamp(50.0 + 15.0 * standardized, 0.0, 100.0) - 50.0) / 15.0;
        }
    }

    p.alpha = Rng::derive(cfg.seed, "offset:" + p.id).normal(0, kOffsetSigma);

    {
        Rng rng = Rng::derive(cfg.seed, "mood:" + p.id);
        double innovation = kMoodSigma * std::sqrt(1.0 - kMoodPhi * kMoodPhi);
        double u = rng.normal(0, kMoodSigma);
        p.latent.resize(size_t(n_days));
        for (int d = 0; d < n_days; ++d) {
            double signal = 0;
            for (int s = 0; s < kScoreCount; ++s)
                signal += kRawWeights[size_t(s)] * p.drivers[size_t(s)][size_t(d)];
            p.latent[size_t(d)] = cfg.effect_strength * signal + p.alpha + u;
            u = kMoodPhi * u + rng.normal(0, innovation);
        }
    }

    p.base_ibi_ms = Rng::derive(cfg.seed, "physio:" + p.id).normal(850, 40);

    {
        Rng rng = Rng::derive(cfg.seed, "geo:" + p.id);
        p.home_lat = 37.40 + 0.02 * index;
        p.home_lon = -122.10 - 0.015 * index;
        offset_point(p.home_lat, p.home_lon, rng.uniform(0, 2 * kPi), rng.uniform(1000, 3000),
                     p.work_lat, p.work_lon);
        for (auto& spot : p.leisure)
            offset_point(p.home_lat, p.home_lon, rng.uniform(0, 2 * kPi),
                         rng.uniform(500, 2500), spot.first, spot.second);
    }
    return p;
}

void emit_scores_and_reports(const SynthConfig& cfg, const ParticipantPlan& p,
                             int64_t start_day, int n_days, CohortStreams& out) {
    Rng rng_missing = Rng::derive(cfg.seed, "missing-scores:" + p.id);
    Rng rng_reports = Rng::derive(cfg.seed, "reports:" + p.id);
    TimePolicy tz;

    for (int d = 0; d < n_days; ++d) {
        bool drop_day = rng_missing.next_double() < cfg.missing_rate;
        if (!drop_day)
            for (int s = 0; s < kScoreCount; ++s) {
                double z = p.drivers[size_t(s)][size_t(d + kLagDays)];
                out.daily_scores.push_back(
                    {p.id, start_day + d, kScoreNames[size_t(s)],
                     std::clamp(50.0 + 15.0 * z, 0.0, 100.0)});
            }

        double spacing = 12.0 / cfg.reports_per_day;
        for (int k = 0; k < cfg.reports_per_day; ++k) {
            double hour = 9.0 + (k + 0.5) * spacing + rng_reports.uniform(-0.25, 0.25) * spacing;
            double t = day_start(start_day + d, tz) + hour * 3600.0;
            double score =
                100.0 * logistic(p.latent[size_t(d)] + rng_reports.normal(0, kReportNoise));
            bool drop = rng_reports.next_double() < cfg.missing_rate;
            if (!drop) out.self_reports.push_back({p.id, t, score});
        }
    }
}

void emit_phone(const SynthConfig& cfg, const ParticipantPlan& p, int64_t start_day, int n_days,
                CohortStreams& out) {
    TimePolicy tz;
    for (int d = 0; d < n_days; ++d) {
        Rng rng = Rng::derive(cfg.seed, "phone:" + p.id + ":" + std::to_string(d));
        double mod = cfg.effect_strength * std::tanh(p.latent[size_t(d)] / 2.0);
        long n_calls = rng.poisson(4.0 * std::exp(-0.30 * mod));
        long n_messages = rng.poisson(10.0 * std::exp(-0.25 * mod));
        long n_notifications = rng.poisson(25.0 * std::exp(-0.10 * mod));
        long n_screen = rng.poisson(30.0);
        long n_lock = rng.poisson(25.0);
        long n_battery = rng.poisson(2.0);

        double ds = day_start(start_day + d, tz);
        auto stamp = [&] { return ds + rng.uniform(8.0, 23.0) * 3600.0; };

        std::vector<PhoneEvent> day_events;
        for (long i = 0; i < n_calls; ++i) {
            double duration = std::clamp(std::exp(rng.normal(std::log(120.0), 0.8)), 5.0, 7200.0);
            day_events.push_back({p.id, stamp(), EventKind::Call, duration, std::nullopt});
        }
        for (long i = 0; i < n_messages; ++i) {
            double u = rng.next_double();
            const char* cat = u < 0.3 ? "family" : u < 0.8 ? "friend" : "work";
            day_events.push_back({p.id, stamp(), EventKind::Message, std::nullopt, cat});
        }
        for (long i = 0; i < n_notifications; ++i) {
            double u = rng.next_double();
            const char* cat = u < 0.4 ? "social" : u < 0.7 ? "system" : "media";
            day_events.push_back({p.id, stamp(), EventKind::Notification, std::nullopt, cat});
        }
        for (long i = 0; i < n_screen; ++i)
            day_events.push_back({p.id, stamp(), EventKind::ScreenOn, std::nullopt, std::nullopt});
        for (long i = 0; i < n_screen; ++i)
            day_events.push_back(
                {p.id, stamp(), EventKind::ScreenOff, std::nullopt, std::nullopt});
        for (long i = 0; i < n_lock; ++i)
            day_events.push_back(
                {p.id, stamp(), EventKind::ScreenLock, std::nullopt, std::nullopt});
        for (long i = 0; i < n_lock; ++i)
            day_events.push_back(
                {p.id, stamp(), EventKind::ScreenUnlock, std::nullopt, std::nullopt});
        for (long i = 0; i < n_battery; ++i)
            day_events.push_back(
                {p.id, stamp(), EventKind::BatteryPlugin, std::nullopt, std::nullopt});

        std::stable_sort(day_events.begin(), day_events.end(),
                         [](const PhoneEvent& a, const PhoneEvent& b) { return a.time < b.time; });
        for (auto& e : day_events) out.phone_events.push_back(std::move(e));
    }
}

void emit_gps(const SynthConfig& cfg, const ParticipantPlan& p, int64_t start_day, int n_days,
              CohortStreams& out) {
    TimePolicy tz;
    double meters_lat = 1.0 / 111320.0;
    double meters_lon = 1.0 / (111320.0 * std::cos(p.home_lat * kPi / 180.0));

    for (int d = 0; d < n_days; ++d) {
        Rng rng = Rng::derive(cfg.seed, "gps:" + p.id + ":" + std::to_string(d));
        double mod = cfg.effect_strength * std::tanh(p.latent[size_t(d)] / 2.0);
        double p_out = std::clamp(0.35 * std::exp(-0.4 * mod), 0.05, 0.85);
        bool outing = rng.next_double() < p_out;
        size_t spot = size_t(rng.next_below(3));
        bool weekday = d % 7 < 5; // the cohort starts on a Monday

        struct Block {
            double t0, t1, lat, lon;
        };
        std::vector<Block> blocks;
        blocks.push_back({0.0, 7.5 * 3600, p.home_lat, p.home_lon});
        if (weekday) blocks.push_back({9.0 * 3600, 17.0 * 3600, p.work_lat, p.work_lon});
        if (outing)
            blocks.push_back(
                {18.5 * 3600, 21.5 * 3600, p.leisure[spot].first, p.leisure[spot].second});
        else
            blocks.push_back({18.5 * 3600, 21.5 * 3600, p.home_lat, p.home_lon});
        blocks.push_back({22.0 * 3600, 24.0 * 3600, p.home_lat, p.home_lon});

        double ds = day_start(start_day + d, tz);
        for (double s = 0; s < 86400.0; s += 300.0) {
            const Block* in = nullptr;
            for (const auto& b : blocks)
                if (s >= b.t0 && s < b.t1) {
                    in = &b;
                    break;
                }
            if (!in) continue;
            double lat = in->lat + rng.normal(0, 8.0) * meters_lat;
            double lon = in->lon + rng.normal(0, 8.0) * meters_lon;
            out.location_fixes.push_back({p.id, ds + s, lat, lon, std::nullopt});
        }
    }
}

template <typename Sink>
void emit_ppg(const SynthConfig& cfg, const ParticipantPlan& p, int64_t start_day, int n_days,
              Sink&& sink) {
    TimePolicy tz;
    Rng rng_missing = Rng::derive(cfg.seed, "missing-ppg:" + p.id);
    double fs = cfg.ppg_sample_rate;
    size_t n = size_t(std::lround(kSegmentSeconds * fs));

    for (int d = 0; d < n_days; ++d) {
        double L = p.latent[size_t(d)];
        double mod = std::tanh(L / 2.0);
        double ibi_day = p.base_ibi_ms * (1.0 - 0.03 * mod); // lonelier days run a higher HR
        double hrv_scale = 1.0 - 0.15 * mod;                 // and a slightly flatter rhythm
        double ds = day_start(start_day + d, tz);

        for (int slot = 0; slot < kSegmentsPerDay; ++slot) {
            bool drop = rng_missing.next_double() < cfg.missing_rate;
            if (drop) continue;

            Rng rng = Rng::derive(cfg.seed,
                                  "ppg:" + p.id + ":" + std::to_string(d) + ":" +
                                      std::to_string(slot));
            PpgSegment seg;
            seg.participant = p.id;
            seg.start = ds + slot * 7200.0 + rng.uniform(0, 60);
            seg.sample_rate = fs;
            seg.samples.assign(n, 0.0);

            double phase_lf = rng.uniform(0, 2 * kPi);
            double phase_hf = rng.uniform(0, 2 * kPi);
            double phase_base = rng.uniform(0, 2 * kPi);

            constexpr double kSigma = 0.09; // pulse width in seconds
            double t = rng.uniform(0.2, 1.0);
            while (t < kSegmentSeconds + 1.0) {
                double amp = 1.0 + rng.normal(0, 0.05);
                long lo = std::lround((t - 4 * kSigma) * fs);
                long hi = std::lround((t + 4 * kSigma) * fs);
                for (long i = std::max(lo, 0L); i <= std::min(hi, long(n) - 1); ++i) {
                    double dt = double(i) / fs - t;
                    seg.samples[size_t(i)] += amp * std::exp(-dt * dt / (2 * kSigma * kSigma));
                }
                double ibi = ibi_day +
                             hrv_scale * (25.0 * std::sin(2 * kPi * 0.10 * t + phase_lf) +
                                          20.0 * std::sin(2 * kPi * 0.25 * t + phase_hf)) +
                             rng.normal(0, 10.0);
                t += std::clamp(ibi, 400.0, 1800.0) / 1000.0;
            }

            for (size_t i = 0; i < n; ++i) {
                double wander = 0.3 * std::sin(2 * kPi * 0.05 * (double(i) / fs) + phase_base);
                double v = seg.samples[i] + wander + rng.normal(0, 0.05);
                seg.samples[i] = std::round(v * 1000.0) / 1000.0;
            }
            sink(std::move(seg));
        }
    }
}

int64_t cohort_start_day() {
    int64_t day = 0;
    parse_day("2024-03-04", day); // a Monday, so d % 7 < 5 marks weekdays
    return day;
}

PlantedTruth build_everything_but_ppg(const SynthConfig& cfg, CohortStreams& streams,
                                      std::vector<ParticipantPlan>& plans) {
    validate(cfg);
    int n_days = cfg.weeks * 7;
    int64_t start_day = cohort_start_day();

    PlantedTruth truth;
    truth.effect_strength = cfg.effect_strength;
    truth.lag_days = kLagDays;
    truth.first_day = start_day;
    for (int s = 0; s < kScoreCount; ++s) {
        truth.score_names.push_back(kScoreNames[size_t(s)]);
        truth.coefficients.push_back(cfg.effect_strength * kRawWeights[size_t(s)]);
        if (cfg.effect_strength > 0) truth.drivers.push_back(kScoreNames[size_t(s)]);
    }

    plans.reserve(size_t(cfg.n_participants));
    for (int i = 0; i < cfg.n_participants; ++i) {
        plans.push_back(plan_participant(cfg, i, n_days));
        const ParticipantPlan& p = plans.back();
        streams.participants.push_back(p.id);
        truth.latent[p.id] = p.latent;
        emit_scores_and_reports(cfg, p, start_day, n_days, streams);
        emit_phone(cfg, p, start_day, n_days, streams);
        emit_gps(cfg, p, start_day, n_days, streams);
    }
    return truth;
}

} // namespace

SynthResult generate(const SynthConfig& cfg) {
    SynthResult r;
    std::vector<ParticipantPlan> plans;
    r.truth = build_everything_but_ppg(cfg, r.streams, plans);
    int n_days = cfg.weeks * 7;
    int64_t start_day = cohort_start_day();
    for (const auto& p : plans)
        emit_ppg(cfg, p, start_day, n_days,
                 [&](PpgSegment&& seg) { r.streams.ppg.push_back(std::move(seg)); });
    return r;
}

PlantedTruth generate_to_dir(const SynthConfig& cfg, const std::string& dir) {
    CohortStreams streams;
    std::vector<ParticipantPlan> plans;
    PlantedTruth truth = build_everything_but_ppg(cfg, streams, plans);
    write_cohort(streams, dir); // CSVs now, PPG streamed below

    std::string ppg_path = dir + "/" + cohort_files::kPpgSegments;
    std::ofstream out(ppg_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + ppg_path);
    int n_days = cfg.weeks * 7;
    int64_t start_day = cohort_start_day();
    for (const auto& p : plans)
        emit_ppg(cfg, p, start_day, n_days,
                 [&](PpgSegment&& seg) { append_ppg_jsonl(out, seg); });
    out.close();
    if (out.fail()) throw IoError("write failed: " + ppg_path);
    return truth;
}

std::string truth_to_json(const PlantedTruth& t) {
    nlohmann::ordered_json j;
    j["effect_strength"] = t.effect_strength;
    j["lag_days"] = t.lag_days;
    j["score_names"] = t.score_names;
    j["coefficients"] = t.coefficients;
    j["drivers"] = t.drivers;
    j["first_day"] = format_day(t.first_day);
    nlohmann::ordered_json latent = nlohmann::ordered_json::object();
    for (const auto& [id, traj] : t.latent) latent[id] = traj;
    j["latent"] = std::move(latent);
    return j.dump(2) + "\n";
}

PlantedTruth truth_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("truth json does not parse: ") + e.what());
    }
    PlantedTruth t;
    try {
        t.effect_strength = j.at("effect_strength").get<double>();
        t.lag_days = j.at("lag_days").get<int>();
        t.score_names = j.at("score_names").get<std::vector<std::string>>();
        t.coefficients = j.at("coefficients").get<std::vector<double>>();
        t.drivers = j.at("drivers").get<std::vector<std::string>>();
        if (!parse_day(j.at("first_day").get<std::string>(), t.first_day))
            throw ValidationError("truth json: first_day is not a date");
        for (const auto& [id, traj] : j.at("latent").items())
            t.latent[id] = traj.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("truth json has a bad shape: ") + e.what());
    }
    if (t.score_names.size() != t.coefficients.size())
        throw ValidationError("truth json: score_names and coefficients differ in length");
    return t;
}

void save_truth(const PlantedTruth& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << truth_to_json(t);
    if (!out) throw IoError("write failed: " + path);
}

PlantedTruth load_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return truth_from_json(buf.str());
}

std::string describe_truth(const PlantedTruth& t) {
    std::ostringstream out;
    out << "Planted truth\n";
    out << "  lag: " << t.lag_days << " days (loneliness on day t responds to drivers on day t-"
        << t.lag_days << ")\n";
    out << "  effect strength: " << t.effect_strength << "\n";
    if (t.drivers.empty()) {
        out << "  drivers: none (labels carry no feature signal)\n";
    } else {
        out << "  drivers:\n";
        for (size_t i = 0; i < t.score_names.size(); ++i) {
            double c = t.coefficients[i];
            if (c == 0) continue;
            out << "    " << t.score_names[i] << (c > 0 ? "  +" : "  ") << c
                << (c > 0 ? "  (raises loneliness)" : "  (lowers loneliness)") << "\n";
        }
    }
    out << "  participants: " << t.latent.size() << ", days: "
        << (t.latent.empty() ? 0 : t.latent.begin()->second.size()) << "\n";
    return out.str();
}

} // namespace lonecast::synth
