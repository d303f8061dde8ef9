#include "lonecast/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lonecast/error.hpp"

namespace lonecast::behavior {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = 0.017453292519943295;

struct MeanVar {
    double mean = 0;
    double var = 0; // population
};

MeanVar mean_var(const std::vector<double>& x) {
    MeanVar out;
    if (x.empty()) return out;
    for (double v : x) out.mean += v;
    out.mean /= double(x.size());
    for (double v : x) {
        double d = v - out.mean;
        out.var += d * d;
    }
    out.var /= double(x.size());
    return out;
}

} // namespace

BehaviorFeatures behavior_features(const std::vector<PhoneEvent>& events,
                                   const WindowSpec& window) {
    if (!(window.start < window.end))
        throw ValidationError("window start must precede end");

    auto lo = std::lower_bound(events.begin(), events.end(), window.start,
                               [](const PhoneEvent& e, double t) { return e.time < t; });
    auto hi = std::lower_bound(lo, events.end(), window.end,
                               [](const PhoneEvent& e, double t) { return e.time < t; });

    BehaviorFeatures out;
    for (auto it = lo; it != hi; ++it) {
        switch (it->kind) {
        case EventKind::BatteryPlugin: ++out.n_battery_plugin; break;
        case EventKind::ScreenOn: ++out.n_screen_on; break;
        case EventKind::ScreenOff: ++out.n_screen_off; break;
        case EventKind::ScreenLock: ++out.n_screen_lock; break;
        case EventKind::ScreenUnlock: ++out.n_screen_unlock; break;
        case EventKind::Call:
            ++out.n_calls;
            out.call_total += it->duration.value_or(0.0);
            break;
        case EventKind::Message:
            ++out.n_messages;
            if (it->category) ++out.messages_by_category[*it->category];
            break;
        case EventKind::Notification:
            ++out.n_notifications;
            if (it->category) ++out.notifications_by_category[*it->category];
            break;
        }
    }
    if (out.n_calls > 0) out.call_mean = out.call_total / double(out.n_calls);
    return out;
}

double haversine(double lat_a, double lon_a, double lat_b, double lon_b) {
    double phi_a = lat_a * kDegToRad, phi_b = lat_b * kDegToRad;
    double dphi = (lat_b - lat_a) * kDegToRad;
    double dlam = (lon_b - lon_a) * kDegToRad;
    double sp = std::sin(0.5 * dphi), sl = std::sin(0.5 * dlam);
    double h = sp * sp + std::cos(phi_a) * std::cos(phi_b) * sl * sl;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

// Grows a run of fixes while every member stays within radius of the run's
// centroid. Distances are rechecked exactly only when a triangle-inequality
// bound (exact max at last check + centroid drift since) can no longer
// guarantee the condition, which keeps long stationary runs near linear.
class RunGrower {
public:
    RunGrower(const std::vector<LocationFix>& fixes, double radius)
        : fixes_(fixes), radius_(radius) {}

    void start(size_t i) {
        begin_ = i;
        end_ = i + 1;
        sum_lat_ = fixes_[i].latitude;
        sum_lon_ = fixes_[i].longitude;
        bound_ = 0;
    }

    bool try_extend() {
        if (end_ >= fixes_.size()) return false;
        const auto& f = fixes_[end_];
        double n_new = double(end_ - begin_ + 1);
        double old_lat = sum_lat_ / double(end_ - begin_);
        double old_lon = sum_lon_ / double(end_ - begin_);
        double new_lat = (sum_lat_ + f.latitude) / n_new;
        double new_lon = (sum_lon_ + f.longitude) / n_new;
        double drift = haversine(old_lat, old_lon, new_lat, new_lon);
        double d_new = haversine(f.latitude, f.longitude, new_lat, new_lon);

        double candidate = std::max(bound_ + drift, d_new);
        if (candidate > radius_) {
            double exact = d_new;
            for (size_t k = begin_; k < end_; ++k)
                exact = std::max(exact, haversine(fixes_[k].latitude, fixes_[k].longitude,
                                                  new_lat, new_lon));
            if (exact > radius_) return false;
            candidate = exact;
        }
        bound_ = candidate;
        sum_lat_ += f.latitude;
        sum_lon_ += f.longitude;
        ++end_;
        return true;
    }

    size_t begin() const { return begin_; }
    size_t end() const { return end_; }
    double centroid_lat() const { return sum_lat_ / double(end_ - begin_); }
    double centroid_lon() const { return sum_lon_ / double(end_ - begin_); }

private:
    const std::vector<LocationFix>& fixes_;
    double radius_;
    size_t begin_ = 0, end_ = 0;
    double sum_lat_ = 0, sum_lon_ = 0;
    double bound_ = 0;
};

size_t uf_find(std::vector<size_t>& parent, size_t a) {
    while (parent[a] != a) {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    return a;
}

double interval_overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

double night_overlap(double t0, double t1, const TimePolicy& time) {
    double total = 0;
    for (int64_t d = day_of(t0, time); d <= day_of(t1, time); ++d) {
        double ns = double(day_start(d, time));
        total += interval_overlap(t0, t1, ns, ns + 6 * 3600.0);
    }
    return total;
}

} // namespace

PlaceSet cluster_places(const std::vector<LocationFix>& fixes, const PlaceConfig& cfg) {
    PlaceSet out;
    if (fixes.empty()) return out;

    RunGrower grower(fixes, cfg.radius_m);
    size_t i = 0;
    while (i < fixes.size()) {
        grower.start(i);
        while (grower.try_extend()) {
        }
        double span = fixes[grower.end() - 1].time - fixes[grower.begin()].time;
        if (span >= cfg.min_dwell_s) {
            Visit v;
            v.lat = grower.centroid_lat();
            v.lon = grower.centroid_lon();
            v.t_start = fixes[grower.begin()].time;
            v.t_end = fixes[grower.end() - 1].time;
            out.visits.push_back(v);
            i = grower.end();
        } else {
            ++i;
        }
    }
    if (out.visits.empty()) return out;

    // Merge visits whose centroids sit within radius of each other.
    size_t nv = out.visits.size();
    std::vector<size_t> parent(nv);
    std::iota(parent.begin(), parent.end(), size_t{0});
    for (size_t a = 0; a < nv; ++a)
        for (size_t b = a + 1; b < nv; ++b) {
            if (haversine(out.visits[a].lat, out.visits[a].lon, out.visits[b].lat,
                          out.visits[b].lon) <= cfg.radius_m) {
                size_t ra = uf_find(parent, a), rb = uf_find(parent, b);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }

    // Places numbered in order of their first visit.
    std::vector<size_t> place_of_root(nv, size_t(-1));
    for (size_t a = 0; a < nv; ++a) {
        size_t r = uf_find(parent, a);
        if (place_of_root[r] == size_t(-1)) {
            place_of_root[r] = out.places.size();
            out.places.emplace_back();
        }
        size_t p = place_of_root[r];
        out.visits[a].place = p;
        Place& pl = out.places[p];
        pl.lat += out.visits[a].lat;
        pl.lon += out.visits[a].lon;
        ++pl.n_visits;
        pl.night_dwell_s += night_overlap(out.visits[a].t_start, out.visits[a].t_end, cfg.time);
    }
    for (Place& pl : out.places) {
        pl.lat /= double(pl.n_visits);
        pl.lon /= double(pl.n_visits);
    }

    double best = 0;
    for (size_t p = 0; p < out.places.size(); ++p)
        if (out.places[p].night_dwell_s > best) {
            best = out.places[p].night_dwell_s;
            out.home = p;
        }
    return out;
}

ContextFeatures context_features(const std::vector<LocationFix>& fixes,
                                 const PlaceSet& places, const WindowSpec& window) {
    if (!(window.start < window.end))
        throw ValidationError("window start must precede end");

    auto lo = std::lower_bound(fixes.begin(), fixes.end(), window.start,
                               [](const LocationFix& f, double t) { return f.time < t; });
    auto hi = std::lower_bound(lo, fixes.end(), window.end,
                               [](const LocationFix& f, double t) { return f.time < t; });

    ContextFeatures out;

    std::vector<double> lats, speeds;
    for (auto it = lo; it != hi; ++it) {
        lats.push_back(it->latitude);
        if (it->speed) {
            speeds.push_back(*it->speed);
        } else if (it != lo) {
            auto prev = std::prev(it);
            double dt = it->time - prev->time;
            if (dt > 0)
                speeds.push_back(haversine(prev->latitude, prev->longitude, it->latitude,
                                           it->longitude) /
                                 dt);
        }
        if (it != lo) {
            auto prev = std::prev(it);
            out.travel_distance += haversine(prev->latitude, prev->longitude, it->latitude,
                                             it->longitude);
        }
    }
    out.lat_variance = mean_var(lats).var;
    MeanVar sv = mean_var(speeds);
    out.speed_mean = sv.mean;
    out.speed_variance = sv.var;

    std::vector<bool> seen(places.places.size(), false);
    for (const Visit& v : places.visits) {
        if (interval_overlap(v.t_start, v.t_end, window.start, window.end) <= 0) continue;
        if (!seen[v.place]) {
            seen[v.place] = true;
            ++out.n_places;
        }
    }

    if (places.home) {
        double at_home = 0;
        std::vector<std::pair<double, double>> home_spans;
        for (const Visit& v : places.visits) {
            if (v.place != *places.home) continue;
            double o = interval_overlap(v.t_start, v.t_end, window.start, window.end);
            if (o <= 0) continue;
            at_home += o;
            home_spans.emplace_back(std::max(v.t_start, window.start),
                                    std::min(v.t_end, window.end));
        }
        out.home_duration = at_home;

        // Away episodes: the complement of home dwell inside the window.
        std::sort(home_spans.begin(), home_spans.end());
        std::vector<double> away;
        double cursor = window.start;
        for (const auto& [s, e] : home_spans) {
            if (s > cursor) away.push_back(s - cursor);
            cursor = std::max(cursor, e);
        }
        if (cursor < window.end) away.push_back(window.end - cursor);
        MeanVar av = mean_var(away);
        out.outside_mean = av.mean;
        out.outside_std = std::sqrt(av.var);
    }
    return out;
}

} // namespace lonecast::behavior
