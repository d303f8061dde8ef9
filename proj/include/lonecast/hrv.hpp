#pragma once

#include <optional>

#include "lonecast/ppg.hpp"

namespace lonecast::hrv {

struct TimeDomain {
    double avnn = 0;    // ms
    double sdnn = 0;    // ms, population std
    double rmssd = 0;   // ms
    double mean_hr = 0; // beats/min, 60000/avnn
};

// Requires >= 2 intervals, else InsufficientBeats.
TimeDomain time_domain(const ppg::IbiSeries& ibi);

struct SpectrumConfig {
    double lf_low_hz = 0.04;
    double lf_high_hz = 0.15; // exclusive
    double hf_low_hz = 0.15;  // inclusive
    double hf_high_hz = 0.40; // inclusive
    double oversample = 2.0;  // frequency grid density relative to 1/span
    double min_span_s = 120.0;
    size_t min_intervals = 30;
};

struct FrequencyDomain {
    double lf = 0; // ms^2
    double hf = 0; // ms^2
    std::optional<double> lf_hf;
};

// Lomb-Scargle periodogram of the unevenly sampled interval series (each
// interval placed at its end-beat time), integrated over the LF and HF
// bands. Requires span >= min_span_s and >= min_intervals intervals, else
// InsufficientData. lf_hf is absent when hf == 0.
FrequencyDomain frequency_domain(const ppg::IbiSeries& ibi, const SpectrumConfig& cfg = {});

// Raw periodogram used by frequency_domain, exposed for verification.
// Grid: f_k = (k+1)/(oversample * span) up to and including max_hz.
// Values are the classic normalization P(f); band power converts as
// sum(P) * 2 / (n * oversample).
std::vector<double> lomb_scargle(const std::vector<double>& times,
                                 const std::vector<double>& values, double df,
                                 size_t n_freq);

struct Nonlinear {
    double sd1 = 0; // ms, population std of (x_i - x_{i+1}) / sqrt(2)
    double sd2 = 0; // ms, population std of (x_i + x_{i+1}) / sqrt(2)
};

// Poincare descriptors over successive interval pairs. Requires >= 3
// intervals, else InsufficientBeats.
Nonlinear nonlinear(const ppg::IbiSeries& ibi);

// Assembled per-segment feature set. Fields whose precondition failed stay
// empty instead of being fabricated.
struct HrvFeatures {
    double segment_start = 0;
    std::optional<double> avnn, sdnn, rmssd, mean_hr;
    std::optional<double> lf, hf, lf_hf;
    std::optional<double> sd1, sd2;
};

HrvFeatures hrv_features(const ppg::IbiSeries& ibi, double segment_start,
                         const SpectrumConfig& cfg = {});

} // namespace lonecast::hrv
