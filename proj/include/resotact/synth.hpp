#pragma once

// Ground-truth audio generation: per-taxel phase-continuous oscillators
// driven through the forward model by force traces, mixed into one channel.
// The independent oracle for the inverse pipeline.

#include "resotact/dsp.hpp"
#include "resotact/estimator.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace resotact {

struct ForceTrace {
    std::string taxel_id;
    std::vector<std::pair<double, double>> samples; // (time_s, force_n), time increasing

    /// Piecewise-linear interpolation, clamped to the end values.
    double force_at(double time_s) const;
    double duration_s() const { return samples.empty() ? 0.0 : samples.back().first; }
};

struct SynthConfig {
    int sample_rate = 44100;
    std::optional<double> noise_snr_db;      // absent = clean
    std::uint64_t noise_seed = 0;
    double loudness = 1.0;                   // default per-taxel scale
    std::map<std::string, double> per_taxel_loudness;
    double peak_target = 0.9;                // downscale only if the mix exceeds this
};

/// Mixes one oscillator per taxel; instantaneous frequency and amplitude
/// follow forward_response(F(t)). Phase is continuous across frequency
/// changes. If applied_gain is given it receives the normalization factor
/// (1.0 unless the mix had to be scaled down).
AudioBuffer synthesize(std::span<const ForceTrace> traces, std::span<const TaxelSpec> array,
                       const SynthConfig& cfg = {}, double* applied_gain = nullptr);

/// Adds seeded white Gaussian noise at the requested SNR relative to the
/// signal RMS. Deterministic per seed across platforms.
AudioBuffer add_noise(const AudioBuffer& audio, double snr_db, std::uint64_t seed = 0);

} // namespace resotact
