#include "lonecast/ppg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "lonecast/error.hpp"

namespace lonecast::ppg {

namespace {

// Population variance of samples[i0, i1).
double window_variance(const std::vector<double>& x, size_t i0, size_t i1) {
    size_t n = i1 - i0;
    if (n == 0) return 0;
    double mean = 0;
    for (size_t i = i0; i < i1; ++i) mean += x[i];
    mean /= double(n);
    double var = 0;
    for (size_t i = i0; i < i1; ++i) {
        double d = x[i] - mean;
        var += d * d;
    }
    return var / double(n);
}

} // namespace

QualityLabel assess_quality(const PpgSegment& segment, const QualityRules& rules) {
    const auto& x = segment.samples;
    QualityLabel label;

    size_t win = std::max<size_t>(2, size_t(rules.flatline_window_s * segment.sample_rate));
    size_t step = std::max<size_t>(1, win / 2);
    size_t n_windows = 0, n_flat = 0;
    for (size_t i0 = 0; i0 + win <= x.size(); i0 += step) {
        ++n_windows;
        if (window_variance(x, i0, i0 + win) < rules.flatline_variance_floor) ++n_flat;
    }
    if (n_windows == 0) {
        // shorter than one window: judge the whole segment
        ++n_windows;
        if (window_variance(x, 0, x.size()) < rules.flatline_variance_floor) ++n_flat;
    }
    if (double(n_flat) > rules.flatline_max_fraction * double(n_windows))
        label.reasons.push_back("flatline");

    auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
    double mn = *mn_it, mx = *mx_it;
    size_t pinned = 0;
    for (double v : x)
        if (v == mn || v == mx) ++pinned;
    if (double(pinned) >= rules.clipping_max_fraction * double(x.size()))
        label.reasons.push_back("clipping");

    double p2p = mx - mn;
    if (p2p < rules.amplitude_min || p2p > rules.amplitude_max)
        label.reasons.push_back("amplitude");

    label.clean = label.reasons.empty();
    return label;
}

std::vector<bool> noisy_sample_mask(const PpgSegment& segment, const QualityRules& rules) {
    const auto& x = segment.samples;
    std::vector<bool> mask(x.size(), false);

    auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
    double mn = *mn_it, mx = *mx_it;
    size_t pinned = 0;
    for (double v : x)
        if (v == mn || v == mx) ++pinned;
    if (double(pinned) >= rules.clipping_max_fraction * double(x.size())) {
        for (size_t i = 0; i < x.size(); ++i)
            if (x[i] == mn || x[i] == mx) mask[i] = true;
    }

    size_t win = std::max<size_t>(2, size_t(rules.flatline_window_s * segment.sample_rate));
    size_t step = std::max<size_t>(1, win / 2);
    for (size_t i0 = 0; i0 + win <= x.size(); i0 += step) {
        if (window_variance(x, i0, i0 + win) < rules.flatline_variance_floor)
            for (size_t i = i0; i < i0 + win; ++i) mask[i] = true;
    }
    return mask;
}

RepairResult repair_short_gaps(const PpgSegment& segment, const std::vector<bool>& mask,
                               double max_gap_s) {
    RepairResult out;
    out.segment = segment;
    out.remaining.assign(segment.samples.size(), false);
    if (mask.size() != segment.samples.size())
        throw ValidationError("mask length does not match sample count");

    auto& x = out.segment.samples;
    size_t max_run = size_t(max_gap_s * segment.sample_rate);
    size_t i = 0;
    while (i < x.size()) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < x.size() && mask[j]) ++j;
        size_t run = j - i;
        bool interior = i > 0 && j < x.size();
        if (interior && run <= max_run) {
            double a = x[i - 1], b = x[j];
            double span = double(run + 1);
            for (size_t k = 0; k < run; ++k)
                x[i + k] = a + (b - a) * double(k + 1) / span;
            out.repaired_samples += run;
        } else {
            for (size_t k = i; k < j; ++k) out.remaining[k] = true;
        }
        i = j;
    }
    return out;
}

namespace {

// Zero-phase single-pole filters: each stage runs forward then backward so
// peak positions are not shifted.
void highpass_zero_phase(std::vector<double>& x, double fc, double fs) {
    double rc = 1.0 / (6.283185307179586 * fc);
    double dt = 1.0 / fs;
    double a = rc / (rc + dt);
    auto pass = [&](bool forward) {
        double prev_x = forward ? x.front() : x.back();
        double prev_y = 0;
        if (forward) {
            for (size_t i = 0; i < x.size(); ++i) {
                double cur = x[i];
                double y = (i == 0) ? 0.0 : a * (prev_y + cur - prev_x);
                prev_x = cur;
                prev_y = y;
                x[i] = y;
            }
        } else {
            for (size_t i = x.size(); i-- > 0;) {
                double cur = x[i];
                double y = (i + 1 == x.size()) ? 0.0 : a * (prev_y + cur - prev_x);
                prev_x = cur;
                prev_y = y;
                x[i] = y;
            }
        }
    };
    pass(true);
    pass(false);
}

void lowpass_zero_phase(std::vector<double>& x, double fc, double fs) {
    double rc = 1.0 / (6.283185307179586 * fc);
    double dt = 1.0 / fs;
    double b = dt / (rc + dt);
    auto pass = [&](bool forward) {
        if (forward) {
            double y = x.front();
            for (size_t i = 0; i < x.size(); ++i) {
                y += b * (x[i] - y);
                x[i] = y;
            }
        } else {
            double y = x.back();
            for (size_t i = x.size(); i-- > 0;) {
                y += b * (x[i] - y);
                x[i] = y;
            }
        }
    };
    pass(true);
    pass(false);
}

// Sliding maximum of |x| over [i - w, i + w] via monotonic deque.
std::vector<double> local_envelope(const std::vector<double>& x, size_t w) {
    size_t n = x.size();
    std::vector<double> env(n, 0.0);
    std::deque<size_t> dq;
    size_t right = 0;
    for (size_t i = 0; i < n; ++i) {
        size_t hi = std::min(n - 1, i + w);
        while (right <= hi) {
            double v = std::fabs(x[right]);
            while (!dq.empty() && std::fabs(x[dq.back()]) <= v) dq.pop_back();
            dq.push_back(right);
            ++right;
        }
        while (!dq.empty() && dq.front() + w < i) dq.pop_front();
        env[i] = std::fabs(x[dq.front()]);
    }
    return env;
}

} // namespace

std::vector<size_t> detect_peaks(const PpgSegment& segment, const PeakConfig& cfg) {
    if (segment.duration() < cfg.min_duration_s)
        throw TooShort("segment shorter than " + std::to_string(cfg.min_duration_s) +
                       " s: " + std::to_string(segment.duration()) + " s");

    std::vector<double> z = segment.samples;
    double fs = segment.sample_rate;
    highpass_zero_phase(z, cfg.band_low_hz, fs);
    // keep the upper edge below Nyquist
    lowpass_zero_phase(z, std::min(cfg.band_high_hz, 0.45 * fs), fs);

    size_t env_w = std::max<size_t>(1, size_t(cfg.envelope_window_s * fs));
    std::vector<double> env = local_envelope(z, env_w);

    size_t refractory = std::max<size_t>(1, size_t(std::lround(cfg.refractory_s * fs)));
    std::vector<size_t> peaks;
    long last = -long(refractory) - 1;
    for (size_t i = 1; i + 1 < z.size(); ++i) {
        if (!(z[i] > z[i - 1] && z[i] >= z[i + 1])) continue; // first sample of a plateau
        if (z[i] <= 0) continue;
        if (z[i] < cfg.threshold_fraction * env[i]) continue;
        if (long(i) - last < long(refractory)) continue;
        peaks.push_back(i);
        last = long(i);
    }
    return peaks;
}

IbiSeries peaks_to_ibi(const PpgSegment& segment, const std::vector<size_t>& peaks,
                       const IbiRules& rules) {
    for (size_t i = 1; i < peaks.size(); ++i)
        if (peaks[i] <= peaks[i - 1])
            throw ValidationError("peak indices must be strictly increasing");

    struct Pair {
        double start, end, ms;
    };
    std::vector<Pair> in_range;
    for (size_t i = 1; i < peaks.size(); ++i) {
        double t0 = segment.start + double(peaks[i - 1]) / segment.sample_rate;
        double t1 = segment.start + double(peaks[i]) / segment.sample_rate;
        double ms = (t1 - t0) * 1000.0;
        if (ms < rules.min_interval_ms || ms > rules.max_interval_ms) continue;
        in_range.push_back({t0, t1, ms});
    }

    std::vector<Pair> kept;
    if (!in_range.empty()) {
        std::vector<double> vals;
        vals.reserve(in_range.size());
        for (const auto& p : in_range) vals.push_back(p.ms);
        std::sort(vals.begin(), vals.end());
        double median = vals.size() % 2 ? vals[vals.size() / 2]
                                        : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
        for (const auto& p : in_range)
            if (std::fabs(p.ms - median) <= rules.ectopic_median_fraction * median)
                kept.push_back(p);
    }

    if (kept.size() < 2)
        throw InsufficientBeats("fewer than 3 surviving beats (" +
                                std::to_string(kept.size() + (kept.empty() ? 0 : 1)) + ")");

    IbiSeries out;
    out.participant = segment.participant;
    out.beat_times.push_back(kept.front().start);
    for (const auto& p : kept) {
        out.beat_times.push_back(p.end);
        out.intervals.push_back(p.ms);
    }
    return out;
}

std::optional<IbiSeries> process_segment(const PpgSegment& segment, const PipelineConfig& cfg) {
    if (segment.samples.empty() || segment.duration() < cfg.peaks.min_duration_s)
        return std::nullopt;

    const PpgSegment* use = &segment;
    RepairResult repaired;
    QualityLabel q = assess_quality(segment, cfg.quality);
    if (!q.clean) {
        // amplitude violations are whole-segment properties; nothing to repair
        for (const auto& r : q.reasons)
            if (r == "amplitude") return std::nullopt;
        repaired = repair_short_gaps(segment, noisy_sample_mask(segment, cfg.quality),
                                     cfg.max_gap_s);
        if (std::find(repaired.remaining.begin(), repaired.remaining.end(), true) !=
            repaired.remaining.end())
            return std::nullopt;
        if (!assess_quality(repaired.segment, cfg.quality).clean) return std::nullopt;
        use = &repaired.segment;
    }

    try {
        auto peaks = detect_peaks(*use, cfg.peaks);
        return peaks_to_ibi(*use, peaks, cfg.ibi);
    } catch (const TooShort&) {
        return std::nullopt;
    } catch (const InsufficientBeats&) {
        return std::nullopt;
    }
}

} // namespace lonecast::ppg
