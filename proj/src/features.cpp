#include "lonecast/features.hpp"

#include <algorithm>
#include <cctype>

#include "lonecast/csv.hpp"
#include "lonecast/error.hpp"

namespace lonecast::features {

namespace {

// Accumulates (name, source, participant, time, value) observations and
// hands back a bundle with sorted names.
class Builder {
public:
    void add(const std::string& name, const std::string& source, const ParticipantId& p,
             double t, double v) {
        auto [it, inserted] = acc_.try_emplace(name);
        if (inserted) it->second.source = source;
        it->second.series[p].push_back({t, v});
    }

    FeatureBundle finish() {
        FeatureBundle out;
        for (auto& [name, entry] : acc_) {
            for (auto& [p, vec] : entry.series)
                std::sort(vec.begin(), vec.end(),
                          [](const TimeValue& a, const TimeValue& b) { return a.time < b.time; });
            out.names.push_back(name);
            out.sources.push_back(entry.source);
            out.series.push_back(std::move(entry.series));
        }
        return out;
    }

private:
    struct Entry {
        std::string source;
        ParticipantSeries series;
    };
    std::map<std::string, Entry> acc_;
};

std::string sanitize_category(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        unsigned char u = static_cast<unsigned char>(c);
        out += std::isalnum(u) ? char(std::tolower(u)) : '_';
    }
    return out.empty() ? "_" : out;
}

double noon_of(int64_t day, const TimePolicy& time) {
    return double(day_start(day, time)) + 43200.0;
}

void add_hrv(Builder& b, const PpgSegment& seg, const ExtractConfig& cfg) {
    auto ibi = ppg::process_segment(seg, cfg.ppg);
    if (!ibi) return;
    hrv::HrvFeatures f = hrv::hrv_features(*ibi, seg.start, cfg.spectrum);
    auto put = [&](const char* name, const std::optional<double>& v) {
        if (v) b.add(name, "hrv", seg.participant, seg.start, *v);
    };
    put("hrv_avnn", f.avnn);
    put("hrv_sdnn", f.sdnn);
    put("hrv_rmssd", f.rmssd);
    put("hrv_mean_hr", f.mean_hr);
    put("hrv_lf", f.lf);
    put("hrv_hf", f.hf);
    put("hrv_lf_hf", f.lf_hf);
    put("hrv_sd1", f.sd1);
    put("hrv_sd2", f.sd2);
}

void add_behavior(Builder& b, const std::vector<PhoneEvent>& events, const ExtractConfig& cfg) {
    // Per-category columns exist for every category seen anywhere in the
    // cohort, so day counts of zero are real zeros rather than gaps.
    std::vector<std::string> msg_cats, notif_cats;
    for (const auto& e : events) {
        if (!e.category) continue;
        auto& cats = e.kind == EventKind::Message ? msg_cats : notif_cats;
        std::string c = sanitize_category(*e.category);
        if (std::find(cats.begin(), cats.end(), c) == cats.end()) cats.push_back(c);
    }
    std::sort(msg_cats.begin(), msg_cats.end());
    std::sort(notif_cats.begin(), notif_cats.end());

    size_t i = 0;
    while (i < events.size()) {
        size_t j = i;
        while (j < events.size() && events[j].participant == events[i].participant) ++j;
        std::vector<PhoneEvent> mine(events.begin() + i, events.begin() + j);
        const ParticipantId& p = events[i].participant;

        int64_t d0 = day_of(mine.front().time, cfg.time);
        int64_t d1 = day_of(mine.back().time, cfg.time);
        for (int64_t d = d0; d <= d1; ++d) {
            behavior::WindowSpec w{double(day_start(d, cfg.time)),
                                   double(day_start(d + 1, cfg.time))};
            behavior::BehaviorFeatures f = behavior::behavior_features(mine, w);
            double t = noon_of(d, cfg.time);
            b.add("beh_battery_plugin", "behavior", p, t, double(f.n_battery_plugin));
            b.add("beh_screen_on", "behavior", p, t, double(f.n_screen_on));
            b.add("beh_screen_off", "behavior", p, t, double(f.n_screen_off));
            b.add("beh_screen_lock", "behavior", p, t, double(f.n_screen_lock));
            b.add("beh_screen_unlock", "behavior", p, t, double(f.n_screen_unlock));
            b.add("beh_messages", "behavior", p, t, double(f.n_messages));
            b.add("beh_notifications", "behavior", p, t, double(f.n_notifications));
            b.add("beh_calls", "behavior", p, t, double(f.n_calls));
            b.add("beh_call_total", "behavior", p, t, f.call_total);
            b.add("beh_call_mean", "behavior", p, t, f.call_mean);
            for (const auto& c : msg_cats) {
                auto it = f.messages_by_category.find(c);
                b.add("beh_msg_" + c, "behavior", p, t,
                      it == f.messages_by_category.end() ? 0.0 : double(it->second));
            }
            for (const auto& c : notif_cats) {
                auto it = f.notifications_by_category.find(c);
                b.add("beh_notif_" + c, "behavior", p, t,
                      it == f.notifications_by_category.end() ? 0.0 : double(it->second));
            }
        }
        i = j;
    }
}

void add_context(Builder& b, const std::vector<LocationFix>& fixes, const ExtractConfig& cfg) {
    behavior::PlaceConfig pc;
    pc.radius_m = cfg.place_radius_m;
    pc.min_dwell_s = cfg.place_min_dwell_s;
    pc.time = cfg.time;

    size_t i = 0;
    while (i < fixes.size()) {
        size_t j = i;
        while (j < fixes.size() && fixes[j].participant == fixes[i].participant) ++j;
        std::vector<LocationFix> mine(fixes.begin() + i, fixes.begin() + j);
        const ParticipantId& p = fixes[i].participant;

        behavior::PlaceSet places = behavior::cluster_places(mine, pc);

        size_t cursor = 0;
        int64_t d0 = day_of(mine.front().time, cfg.time);
        int64_t d1 = day_of(mine.back().time, cfg.time);
        for (int64_t d = d0; d <= d1; ++d) {
            behavior::WindowSpec w{double(day_start(d, cfg.time)),
                                   double(day_start(d + 1, cfg.time))};
            while (cursor < mine.size() && mine[cursor].time < w.start) ++cursor;
            bool has_fix = cursor < mine.size() && mine[cursor].time < w.end;
            if (!has_fix) continue; // sensor silent all day: no row, not zeros

            behavior::ContextFeatures f = behavior::context_features(mine, places, w);
            double t = noon_of(d, cfg.time);
            b.add("ctx_lat_variance", "context", p, t, f.lat_variance);
            b.add("ctx_speed_mean", "context", p, t, f.speed_mean);
            b.add("ctx_speed_variance", "context", p, t, f.speed_variance);
            b.add("ctx_n_places", "context", p, t, double(f.n_places));
            b.add("ctx_travel_distance", "context", p, t, f.travel_distance);
            if (f.home_duration) b.add("ctx_home_duration", "context", p, t, *f.home_duration);
            if (f.outside_mean) b.add("ctx_outside_mean", "context", p, t, *f.outside_mean);
            if (f.outside_std) b.add("ctx_outside_std", "context", p, t, *f.outside_std);
        }
        i = j;
    }
}

void add_daily(Builder& b, const std::vector<DailyScore>& scores, const ExtractConfig& cfg) {
    for (const auto& s : scores)
        b.add(s.name, "daily", s.participant, noon_of(s.day, cfg.time), s.value);
}

FeatureBundle extract_common(const CohortStreams& streams, const ExtractConfig& cfg,
                             const std::function<void(Builder&)>& ppg_pass) {
    Builder b;
    ppg_pass(b);
    add_behavior(b, streams.phone_events, cfg);
    add_context(b, streams.location_fixes, cfg);
    add_daily(b, streams.daily_scores, cfg);
    return b.finish();
}

} // namespace

std::optional<size_t> FeatureBundle::index_of(const std::string& name) const {
    auto it = std::lower_bound(names.begin(), names.end(), name);
    if (it == names.end() || *it != name) return std::nullopt;
    return size_t(it - names.begin());
}

FeatureBundle extract_features(const CohortStreams& streams, const ExtractConfig& cfg) {
    return extract_common(streams, cfg, [&](Builder& b) {
        for (const auto& seg : streams.ppg) add_hrv(b, seg, cfg);
    });
}

FeatureBundle extract_features(const CohortStreams& streams, const std::string& ppg_jsonl_path,
                               const ExtractConfig& cfg) {
    return extract_common(streams, cfg, [&](Builder& b) {
        for_each_ppg_segment(ppg_jsonl_path,
                             [&](PpgSegment&& seg) { add_hrv(b, seg, cfg); });
    });
}

void write_features_csv(const FeatureBundle& bundle, const std::string& path) {
    CsvWriter w(path, {"participant", "time", "feature", "source", "value"});
    for (size_t f = 0; f < bundle.names.size(); ++f)
        for (const auto& [p, vec] : bundle.series[f])
            for (const TimeValue& tv : vec)
                w.write_row({p, format_double(tv.time), bundle.names[f], bundle.sources[f],
                             format_double(tv.value)});
    w.close();
}

FeatureBundle read_features_csv(const std::string& path) {
    CsvReader r(path);
    if (!r.is_open()) throw IoError("cannot open " + path);
    size_t cp = r.col("participant"), ct = r.col("time"), cf = r.col("feature");
    size_t cs = r.col("source"), cv = r.col("value");
    Builder b;
    std::vector<std::string> f;
    while (r.next(f))
        b.add(f[cf], f[cs], f[cp], r.as_double(f, ct), r.as_double(f, cv));
    return b.finish();
}

} // namespace lonecast::features
