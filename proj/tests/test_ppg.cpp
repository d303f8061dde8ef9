#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "lonecast/error.hpp"
#include "lonecast/ppg.hpp"
#include "lonecast/rng.hpp"

using namespace lonecast;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Pulse train with Gaussian beats centered exactly on sample indices, so
// detector error can be measured in whole samples.
struct Train {
    PpgSegment segment;
    std::vector<size_t> beat_samples;
};

Train make_train(double bpm, double fs, double seconds, double noise_sd, uint64_t seed,
                 double wander = 0.3) {
    Train t;
    t.segment.participant = "p";
    t.segment.start = 1000.0;
    t.segment.sample_rate = fs;
    size_t n = size_t(seconds * fs);
    t.segment.samples.assign(n, 0.0);

    Rng rng(seed);
    double period = 60.0 / bpm;
    double sigma = 0.09;
    for (double tb = 0.5; tb < seconds - 0.5; tb += period) {
        size_t center = size_t(std::llround(tb * fs));
        t.beat_samples.push_back(center);
        long reach = std::lround(4 * sigma * fs);
        for (long k = -reach; k <= reach; ++k) {
            long i = long(center) + k;
            if (i < 0 || size_t(i) >= n) continue;
            double dt = (double(i) - double(center)) / fs;
            t.segment.samples[size_t(i)] += std::exp(-dt * dt / (2 * sigma * sigma));
        }
    }
    for (size_t i = 0; i < n; ++i) {
        double at = double(i) / fs;
        t.segment.samples[i] += wander * std::sin(2 * kPi * 0.05 * at);
        if (noise_sd > 0) t.segment.samples[i] += rng.normal(0, noise_sd);
    }
    return t;
}

// How many detections land within +-1 sample of a planted beat; detections
// claiming no beat count as spurious.
void match_stats(const std::vector<size_t>& truth, const std::vector<size_t>& got,
                 size_t& hits, size_t& spurious) {
    hits = 0;
    spurious = 0;
    for (size_t g : got) {
        bool ok = false;
        for (size_t b : truth)
            if (g + 1 >= b && g <= b + 1) {
                ok = true;
                break;
            }
        if (ok)
            ++hits;
        else
            ++spurious;
    }
}

} // namespace

TEST_CASE("clean pulse trains are recovered exactly at several heart rates") {
    for (double bpm : {40.0, 60.0, 75.0, 120.0}) {
        Train t = make_train(bpm, 20.0, 60.0, 0.0, 7);
        auto peaks = ppg::detect_peaks(t.segment);
        size_t hits = 0, spurious = 0;
        match_stats(t.beat_samples, peaks, hits, spurious);
        INFO("bpm ", bpm);
        CHECK(spurious == 0);
        CHECK(hits == t.beat_samples.size());
    }
}

TEST_CASE("noisy trains at 10 dB still recover nearly every beat") {
    // pulse-train signal power is around 0.13; sd 0.11 keeps SNR above 10 dB
    size_t total = 0, hits_total = 0, spurious_total = 0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Train t = make_train(70.0, 20.0, 120.0, 0.11, seed);
        auto peaks = ppg::detect_peaks(t.segment);
        size_t hits = 0, spurious = 0;
        match_stats(t.beat_samples, peaks, hits, spurious);
        total += t.beat_samples.size();
        hits_total += hits;
        spurious_total += spurious;
    }
    CHECK(double(hits_total) >= 0.99 * double(total));
    CHECK(spurious_total <= total / 100);
}

TEST_CASE("detections respect the refractory period") {
    Train t = make_train(60.0, 20.0, 30.0, 0.0, 3);
    ppg::PeakConfig cfg;
    auto peaks = ppg::detect_peaks(t.segment, cfg);
    REQUIRE(peaks.size() > 1);
    for (size_t i = 1; i < peaks.size(); ++i)
        CHECK(double(peaks[i] - peaks[i - 1]) / 20.0 >= cfg.refractory_s);
}

TEST_CASE("segments shorter than the minimum duration are rejected") {
    Train t = make_train(60.0, 20.0, 5.0, 0.0, 1);
    CHECK_THROWS_AS(ppg::detect_peaks(t.segment), TooShort);
}

TEST_CASE("quality rules catch flatline, clipping, and dead amplitude") {
    Train good = make_train(60.0, 20.0, 60.0, 0.01, 11);
    CHECK(ppg::assess_quality(good.segment).clean);

    Train flat = make_train(60.0, 20.0, 60.0, 0.0, 12);
    for (size_t i = 200; i < 600; ++i) flat.segment.samples[i] = 0.25; // 20 s frozen
    auto q = ppg::assess_quality(flat.segment);
    CHECK_FALSE(q.clean);
    CHECK(std::find(q.reasons.begin(), q.reasons.end(), "flatline") != q.reasons.end());

    Train clip = make_train(60.0, 20.0, 60.0, 0.0, 13);
    for (auto& v : clip.segment.samples) v = std::min(v, 0.6); // rail at 0.6
    q = ppg::assess_quality(clip.segment);
    CHECK_FALSE(q.clean);
    CHECK(std::find(q.reasons.begin(), q.reasons.end(), "clipping") != q.reasons.end());

    PpgSegment tiny;
    tiny.participant = "p";
    tiny.sample_rate = 20.0;
    tiny.samples.assign(1200, 0.0);
    for (size_t i = 0; i < tiny.samples.size(); ++i)
        tiny.samples[i] = 1e-4 * std::sin(2 * kPi * double(i) / 20.0);
    q = ppg::assess_quality(tiny);
    CHECK_FALSE(q.clean);
    CHECK(std::find(q.reasons.begin(), q.reasons.end(), "amplitude") != q.reasons.end());
}

TEST_CASE("short interior gaps are bridged, long ones stay bad") {
    Train t = make_train(60.0, 20.0, 60.0, 0.0, 21);
    std::vector<bool> mask(t.segment.samples.size(), false);
    for (size_t i = 400; i < 430; ++i) mask[i] = true; // 1.5 s
    auto rep = ppg::repair_short_gaps(t.segment, mask, 2.0);
    CHECK(rep.repaired_samples == 30);
    for (size_t i = 400; i < 430; ++i) CHECK_FALSE(rep.remaining[i]);
    // interpolation is linear between the clean endpoints
    double lo = t.segment.samples[399], hi = t.segment.samples[430];
    double mid = rep.segment.samples[415];
    CHECK(mid == doctest::Approx(lo + (hi - lo) * (415.0 - 399.0) / (430.0 - 399.0)));

    std::vector<bool> long_mask(t.segment.samples.size(), false);
    for (size_t i = 300; i < 360; ++i) long_mask[i] = true; // 3 s
    rep = ppg::repair_short_gaps(t.segment, long_mask, 2.0);
    CHECK(rep.repaired_samples == 0);
    CHECK(rep.remaining[320]);

    // a masked run touching the segment edge has no left anchor
    std::vector<bool> edge_mask(t.segment.samples.size(), false);
    for (size_t i = 0; i < 10; ++i) edge_mask[i] = true;
    rep = ppg::repair_short_gaps(t.segment, edge_mask, 2.0);
    CHECK(rep.remaining[0]);
}

TEST_CASE("interval extraction filters range and ectopic outliers") {
    PpgSegment seg;
    seg.participant = "p";
    seg.start = 100.0;
    seg.sample_rate = 100.0;
    seg.samples.assign(6000, 0.0);

    // peaks at 1.0 s spacing, one pair squeezed to 0.2 s, one ectopic at 1.5 s
    std::vector<size_t> peaks = {100, 200, 300, 320, 420, 570, 670, 770};
    auto ibi = ppg::peaks_to_ibi(seg, peaks);
    // gaps ms: 1000,1000,200(drop range),1000,1500(drop ectopic vs median 1000),1000,1000
    REQUIRE(ibi.intervals.size() == 5);
    for (double v : ibi.intervals) CHECK(v == 1000.0);
    CHECK(ibi.beat_times.size() == ibi.intervals.size() + 1);
    CHECK(ibi.beat_times.front() == doctest::Approx(101.0));
    // beat times stay strictly increasing even across dropped intervals
    for (size_t i = 1; i < ibi.beat_times.size(); ++i)
        CHECK(ibi.beat_times[i] > ibi.beat_times[i - 1]);

    std::vector<size_t> two = {100, 200};
    CHECK_THROWS_AS(ppg::peaks_to_ibi(seg, two), InsufficientBeats);
}

TEST_CASE("segment pipeline returns intervals for clean input, nothing for junk") {
    Train t = make_train(65.0, 20.0, 120.0, 0.02, 33);
    auto out = ppg::process_segment(t.segment);
    REQUIRE(out.has_value());
    CHECK(out->intervals.size() > 100);
    double period_ms = 60000.0 / 65.0;
    for (double v : out->intervals) CHECK(std::fabs(v - period_ms) < 110.0);

    PpgSegment dead;
    dead.participant = "p";
    dead.sample_rate = 20.0;
    dead.samples.assign(2400, 0.5);
    CHECK_FALSE(ppg::process_segment(dead).has_value());
}
