#include "lonecast/hrv.hpp"

#include <cmath>

#include "lonecast/error.hpp"

namespace lonecast::hrv {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

double population_std(const std::vector<double>& x) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= double(x.size());
    double var = 0;
    for (double v : x) {
        double d = v - mean;
        var += d * d;
    }
    return std::sqrt(var / double(x.size()));
}

} // namespace

TimeDomain time_domain(const ppg::IbiSeries& ibi) {
    const auto& x = ibi.intervals;
    if (x.size() < 2)
        throw InsufficientBeats("time_domain needs >= 2 intervals, got " +
                                std::to_string(x.size()));

    TimeDomain out;
    for (double v : x) out.avnn += v;
    out.avnn /= double(x.size());

    double var = 0;
    for (double v : x) {
        double d = v - out.avnn;
        var += d * d;
    }
    out.sdnn = std::sqrt(var / double(x.size()));

    double ssd = 0;
    for (size_t i = 1; i < x.size(); ++i) {
        double d = x[i] - x[i - 1];
        ssd += d * d;
    }
    out.rmssd = std::sqrt(ssd / double(x.size() - 1));

    out.mean_hr = 60000.0 / out.avnn;
    return out;
}

std::vector<double> lomb_scargle(const std::vector<double>& times,
                                 const std::vector<double>& values, double df,
                                 size_t n_freq) {
    size_t n = times.size();
    std::vector<double> power(n_freq, 0.0);
    if (n == 0 || n_freq == 0) return power;

    double mean = 0;
    for (double v : values) mean += v;
    mean /= double(n);

    // Phasor state: w[i] = exp(i * omega_k * t[i]), advanced by one grid step
    // per frequency. Resynchronized with exact trig every 64 steps to keep
    // the recurrence error near machine precision.
    double t0 = times.front();
    std::vector<double> xc(n), wc(n), ws(n), zc(n), zs(n);
    double dw = kTwoPi * df;
    for (size_t i = 0; i < n; ++i) {
        double t = times[i] - t0;
        xc[i] = values[i] - mean;
        zc[i] = std::cos(dw * t);
        zs[i] = std::sin(dw * t);
    }

    for (size_t k = 0; k < n_freq; ++k) {
        double omega = dw * double(k + 1);
        if (k % 64 == 0) {
            for (size_t i = 0; i < n; ++i) {
                double wt = omega * (times[i] - t0);
                wc[i] = std::cos(wt);
                ws[i] = std::sin(wt);
            }
        }

        double a = 0, b = 0, cc = 0, cs = 0;
        for (size_t i = 0; i < n; ++i) {
            double c = wc[i], s = ws[i];
            a += xc[i] * c;
            b += xc[i] * s;
            cc += c * c;
            cs += c * s;
            wc[i] = c * zc[i] - s * zs[i];
            ws[i] = c * zs[i] + s * zc[i];
        }
        double ss = double(n) - cc;

        // Rotate by tau so the cosine and sine bases are orthogonal.
        double tau_angle = 0.5 * std::atan2(2.0 * cs, cc - ss);
        double ct = std::cos(tau_angle), st = std::sin(tau_angle);
        double num_c = ct * a + st * b;
        double num_s = ct * b - st * a;
        double den_c = ct * ct * cc + 2.0 * ct * st * cs + st * st * ss;
        double den_s = double(n) - den_c;

        double p = 0;
        if (den_c > 1e-12 * double(n)) p += num_c * num_c / den_c;
        if (den_s > 1e-12 * double(n)) p += num_s * num_s / den_s;
        power[k] = 0.5 * p;
    }
    return power;
}

FrequencyDomain frequency_domain(const ppg::IbiSeries& ibi, const SpectrumConfig& cfg) {
    const auto& x = ibi.intervals;
    if (x.size() < cfg.min_intervals)
        throw InsufficientData("frequency_domain needs >= " +
                               std::to_string(cfg.min_intervals) + " intervals, got " +
                               std::to_string(x.size()));
    double span = ibi.beat_times.back() - ibi.beat_times.front();
    if (span < cfg.min_span_s)
        throw InsufficientData("frequency_domain needs span >= " +
                               std::to_string(cfg.min_span_s) + " s, got " +
                               std::to_string(span) + " s");

    // Each interval sits at its end-beat time.
    std::vector<double> times(ibi.beat_times.begin() + 1, ibi.beat_times.end());

    double df = 1.0 / (cfg.oversample * span);
    size_t n_freq = size_t(std::floor(cfg.hf_high_hz / df + 0.5)); // grid covers band top
    std::vector<double> power = lomb_scargle(times, x, df, n_freq);

    FrequencyDomain out;
    double scale = 2.0 / (double(x.size()) * cfg.oversample);
    for (size_t k = 0; k < n_freq; ++k) {
        double f = df * double(k + 1);
        if (f >= cfg.lf_low_hz && f < cfg.lf_high_hz) out.lf += power[k] * scale;
        else if (f >= cfg.hf_low_hz && f <= cfg.hf_high_hz + 0.5 * df) out.hf += power[k] * scale;
    }
    if (out.hf > 0) out.lf_hf = out.lf / out.hf;
    return out;
}

Nonlinear nonlinear(const ppg::IbiSeries& ibi) {
    const auto& x = ibi.intervals;
    if (x.size() < 3)
        throw InsufficientBeats("nonlinear needs >= 3 intervals, got " +
                                std::to_string(x.size()));

    std::vector<double> diff(x.size() - 1), summ(x.size() - 1);
    const double inv_sqrt2 = 0.7071067811865475244;
    for (size_t i = 0; i + 1 < x.size(); ++i) {
        diff[i] = (x[i] - x[i + 1]) * inv_sqrt2;
        summ[i] = (x[i] + x[i + 1]) * inv_sqrt2;
    }
    return {population_std(diff), population_std(summ)};
}

HrvFeatures hrv_features(const ppg::IbiSeries& ibi, double segment_start,
                         const SpectrumConfig& cfg) {
    HrvFeatures out;
    out.segment_start = segment_start;
    try {
        TimeDomain td = time_domain(ibi);
        out.avnn = td.avnn;
        out.sdnn = td.sdnn;
        out.rmssd = td.rmssd;
        out.mean_hr = td.mean_hr;
    } catch (const InsufficientBeats&) {
    }
    try {
        FrequencyDomain fd = frequency_domain(ibi, cfg);
        out.lf = fd.lf;
        out.hf = fd.hf;
        out.lf_hf = fd.lf_hf;
    } catch (const InsufficientData&) {
    }
    try {
        Nonlinear nl = nonlinear(ibi);
        out.sd1 = nl.sd1;
        out.sd2 = nl.sd2;
    } catch (const InsufficientBeats&) {
    }
    return out;
}

} // namespace lonecast::hrv
