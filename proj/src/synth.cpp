#include "resotact/synth.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace resotact {

double ForceTrace::force_at(double time_s) const {
    if (samples.empty()) return 0.0;
    if (time_s <= samples.front().first) return samples.front().second;
    if (time_s >= samples.back().first) return samples.back().second;
    std::size_t lo = 0, hi = samples.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (samples[mid].first <= time_s ? lo : hi) = mid;
    }
    const double u = (time_s - samples[lo].first) / (samples[hi].first - samples[lo].first);
    return samples[lo].second + u * (samples[hi].second - samples[lo].second);
}

AudioBuffer synthesize(std::span<const ForceTrace> traces, std::span<const TaxelSpec> array,
                       const SynthConfig& cfg, double* applied_gain) {
    if (cfg.sample_rate < 8000)
        throw std::invalid_argument("synthesize: sample rate must be >= 8000 Hz");
    if (traces.size() != array.size())
        throw std::invalid_argument("synthesize: need exactly one trace per taxel");

    double duration = 0.0;
    for (const auto& tr : traces) {
        if (tr.samples.empty())
            throw std::invalid_argument("synthesize: empty force trace '" + tr.taxel_id + "'");
        duration = std::max(duration, tr.duration_s());
    }
    if (duration <= 0.0)
        throw std::invalid_argument("synthesize: traces have zero duration");

    const std::size_t n = static_cast<std::size_t>(std::llround(duration * cfg.sample_rate));
    AudioBuffer out;
    out.sample_rate = cfg.sample_rate;
    out.samples.assign(n, 0.0);

    const double dt = 1.0 / cfg.sample_rate;
    // Taxels are summed in array order so that separate synthesis plus
    // summation reproduces the joint mix bit for bit.
    for (std::size_t ti = 0; ti < array.size(); ++ti) {
        const TaxelSpec& spec = array[ti];
        const ForceTrace* trace = nullptr;
        for (const auto& tr : traces)
            if (tr.taxel_id == spec.id) {
                trace = &tr;
                break;
            }
        if (!trace)
            throw std::invalid_argument("synthesize: no trace for taxel '" + spec.id + "'");

        double loud = cfg.loudness;
        if (auto it = cfg.per_taxel_loudness.find(spec.id); it != cfg.per_taxel_loudness.end())
            loud = it->second;

        double phase = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) * dt;
            const TaxelResponse resp = forward_response(spec.model, trace->force_at(t));
            phase += 2.0 * std::numbers::pi * resp.freq_hz * dt;
            if (phase > 2.0 * std::numbers::pi)
                phase -= 2.0 * std::numbers::pi;
            out.samples[i] += loud * resp.amplitude * std::sin(phase);
        }
    }

    double peak = 0.0;
    for (double v : out.samples) peak = std::max(peak, std::abs(v));
    double gain = 1.0;
    if (peak > cfg.peak_target && peak > 0.0) {
        gain = cfg.peak_target / peak;
        for (double& v : out.samples) v *= gain;
    }
    if (applied_gain) *applied_gain = gain;

    for (double v : out.samples)
        if (std::abs(v) > 1.0)
            throw std::logic_error("synthesize: clipping after normalization");

    if (cfg.noise_snr_db)
        return add_noise(out, *cfg.noise_snr_db, cfg.noise_seed);
    return out;
}

AudioBuffer add_noise(const AudioBuffer& audio, double snr_db, std::uint64_t seed) {
    if (!std::isfinite(snr_db))
        return audio;

    double ss = 0.0;
    for (double v : audio.samples) ss += v * v;
    const double rms = audio.samples.empty()
                           ? 0.0
                           : std::sqrt(ss / static_cast<double>(audio.samples.size()));
    const double noise_rms = rms * std::pow(10.0, -snr_db / 20.0);

    // Box-Muller over mt19937_64 uniforms: identical streams on every
    // platform, unlike std::normal_distribution.
    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    };

    AudioBuffer out = audio;
    double cached = 0.0;
    bool has_cached = false;
    for (double& v : out.samples) {
        double z;
        if (has_cached) {
            z = cached;
            has_cached = false;
        } else {
            const double u1 = uniform();
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double a = 2.0 * std::numbers::pi * u2;
            z = r * std::cos(a);
            cached = r * std::sin(a);
            has_cached = true;
        }
        v += noise_rms * z;
    }
    return out;
}

} // namespace resotact
