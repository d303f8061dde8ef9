#pragma once

#include <map>
#include <optional>

#include "lonecast/model.hpp"
#include "lonecast/time_util.hpp"

namespace lonecast::behavior {

// Half-open observation window [start, end).
struct WindowSpec {
    double start = 0;
    double end = 0;
};

struct BehaviorFeatures {
    long n_battery_plugin = 0;
    long n_screen_on = 0;
    long n_screen_off = 0;
    long n_screen_lock = 0;
    long n_screen_unlock = 0;
    long n_messages = 0;
    long n_notifications = 0;
    std::map<std::string, long> messages_by_category;
    std::map<std::string, long> notifications_by_category;
    long n_calls = 0;
    double call_total = 0; // seconds
    double call_mean = 0;  // seconds, 0 when n_calls == 0
};

// Counts phone events falling in the window. Events must be time-sorted.
BehaviorFeatures behavior_features(const std::vector<PhoneEvent>& events,
                                   const WindowSpec& window);

// Great-circle distance in meters on a sphere of radius 6,371,000 m.
double haversine(double lat_a, double lon_a, double lat_b, double lon_b);

struct PlaceConfig {
    double radius_m = 150.0;
    double min_dwell_s = 600.0;
    TimePolicy time;
};

struct Visit {
    double lat = 0; // centroid of the member fixes
    double lon = 0;
    double t_start = 0;
    double t_end = 0;
    size_t place = 0; // index into PlaceSet::places
};

struct Place {
    double lat = 0; // mean of member visit centroids
    double lon = 0;
    size_t n_visits = 0;
    double night_dwell_s = 0; // total visit overlap with 00:00-06:00
};

struct PlaceSet {
    std::vector<Visit> visits;        // time-sorted
    std::vector<Place> places;
    std::optional<size_t> home; // place with the largest night dwell
};

// Stay-point extraction: a maximal run of fixes all within radius of the
// run's centroid, spanning at least min_dwell, becomes a visit. Visits
// whose centroids lie within radius of one another collapse into a place.
// Home is the place with the greatest total dwell between 00:00 and 06:00
// local time; absent when no place has any night dwell.
PlaceSet cluster_places(const std::vector<LocationFix>& fixes, const PlaceConfig& cfg = {});

struct ContextFeatures {
    double lat_variance = 0;   // deg^2, population
    double speed_mean = 0;     // m/s
    double speed_variance = 0; // (m/s)^2, population
    long n_places = 0;
    std::optional<double> home_duration;  // seconds; absent when home unknown
    std::optional<double> outside_mean;   // seconds over away-from-home episodes
    std::optional<double> outside_std;    // population std
    double travel_distance = 0; // meters
};

// Location statistics over fixes in the window. Speed comes from the fix
// when recorded, otherwise from finite differences between consecutive
// window fixes. Away episodes are the maximal sub-intervals of the window
// not covered by home visits.
ContextFeatures context_features(const std::vector<LocationFix>& fixes,
                                 const PlaceSet& places, const WindowSpec& window);

} // namespace lonecast::behavior
