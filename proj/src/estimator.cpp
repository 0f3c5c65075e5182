#include "resotact/estimator.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace resotact {

namespace {

struct Sweep {
    double lo; // unloaded frequency
    double hi; // frequency at full deflection
};

Sweep deflection_sweep(const TaxelSpec& spec) {
    const auto& m = spec.model;
    const double delta_max_mm = deflection_from_force(m.force_defl.f_max_n, m.force_defl);
    return {fitted_freq(m.tube.length_m, m.length_freq),
            fitted_freq(m.tube.length_m - delta_max_mm * 1e-3, m.length_freq)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Highest frequency reachable inside the boundary-condition transition; any
/// reading at or below it maps to more than one force for a no-hole cap.
double transition_ambiguity_ceiling(const TaxelModel& m) {
    if (effective_deviation_hz(m.cap, m.transition) <= 0.0)
        return -std::numeric_limits<double>::infinity();
    const double f_end = std::min(m.transition.transition_force_n, m.force_defl.f_max_n);
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i) {
        const double force = f_end * i / 200.0;
        hi = std::max(hi, forward_response(m, force).freq_hz);
    }
    return hi;
}

} // namespace

const char* to_string(ContactState state) {
    switch (state) {
        case ContactState::NoContact: return "no_contact";
        case ContactState::Transition: return "transition";
        case ContactState::Loaded: return "loaded";
        case ContactState::Saturated: return "saturated";
    }
    return "unknown";
}

std::vector<FrequencyBand> assign_bands(std::span<const TaxelSpec> taxels, double guard_hz) {
    if (taxels.empty())
        throw ConfigError("assign_bands: no taxels");

    std::vector<std::size_t> order(taxels.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Sweep> sweeps(taxels.size());
    for (std::size_t i = 0; i < taxels.size(); ++i) sweeps[i] = deflection_sweep(taxels[i]);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sweeps[a].lo < sweeps[b].lo; });

    std::vector<FrequencyBand> bands(taxels.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Sweep& s = sweeps[order[i]];
        bands[order[i]] = {std::max(s.lo - guard_hz, 1.0), s.hi + guard_hz};
    }
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const Sweep& a = sweeps[order[i]];
        const Sweep& b = sweeps[order[i + 1]];
        if (a.hi >= b.lo)
            throw ConfigError("assign_bands: deflection sweeps of taxels '" +
                              taxels[order[i]].id + "' and '" + taxels[order[i + 1]].id +
                              "' overlap; tube lengths are too close");
        if (bands[order[i]].hi_hz > bands[order[i + 1]].lo_hz) {
            const double mid = 0.5 * (a.hi + b.lo);
            bands[order[i]].hi_hz = mid;
            bands[order[i + 1]].lo_hz = mid;
        }
    }
    return bands;
}

double tare_unloaded(std::span<const BandPoint> window, double magnitude_floor) {
    if (window.size() < 25)
        throw TaringError("tare_unloaded: need at least 1 s of readings (25 frames)");
    std::vector<double> freqs, mags;
    freqs.reserve(window.size());
    mags.reserve(window.size());
    for (const auto& p : window) {
        freqs.push_back(p.freq_hz);
        mags.push_back(p.ridge_magnitude);
    }
    if (median(mags) <= magnitude_floor)
        throw TaringError("tare_unloaded: no ridge above the noise floor in the window");
    return median(freqs);
}

void apply_tare(LinearCalibration& cal, double measured_unloaded_hz) {
    const double shift = measured_unloaded_hz - cal.unloaded_hz;
    cal.f0_hz += shift;
    cal.unloaded_hz = measured_unloaded_hz;
}

TaxelReading estimate_force(double freq_hz, double amplitude, const TaxelSpec& spec) {
    TaxelReading r;
    r.freq_hz = freq_hz;
    r.amplitude = amplitude;

    const LinearCalibration& cal = spec.linear;
    if (amplitude < cal.amplitude_threshold) {
        r.contact = ContactState::NoContact;
        return r;
    }
    if (spec.band && !spec.band->contains(freq_hz)) {
        r.contact = ContactState::NoContact;
        r.crosstalk_warning = true;
        return r;
    }
    if (spec.model.cap.hole_diameter_mm <= 0.0 &&
        freq_hz <= transition_ambiguity_ceiling(spec.model)) {
        r.contact = ContactState::Transition;
        return r;
    }

    double force = (freq_hz - cal.f0_hz) / cal.sensitivity_hz_per_n;
    if (force >= cal.f_max_n) {
        r.force_n = cal.f_max_n;
        r.contact = ContactState::Saturated;
    } else {
        r.force_n = std::max(force, 0.0);
        r.contact = ContactState::Loaded;
    }
    return r;
}

ProcessResult process_stream(const AudioBuffer& audio, std::vector<TaxelSpec> array,
                             const ProcessOptions& options) {
    if (array.empty())
        throw ConfigError("process_stream: empty taxel array");

    // Fill in missing bands, then insist the full set is disjoint.
    bool any_missing = false;
    for (const auto& s : array) any_missing |= !s.band.has_value();
    if (any_missing) {
        const auto bands = assign_bands(array, options.guard_hz);
        for (std::size_t i = 0; i < array.size(); ++i)
            if (!array[i].band) array[i].band = bands[i];
    }
    {
        std::vector<std::size_t> order(array.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return array[a].band->lo_hz < array[b].band->lo_hz;
        });
        for (std::size_t i = 0; i + 1 < order.size(); ++i)
            if (array[order[i]].band->hi_hz > array[order[i + 1]].band->lo_hz)
                throw ConfigError("process_stream: bands of taxels '" + array[order[i]].id +
                                  "' and '" + array[order[i + 1]].id + "' overlap");
    }
    for (const auto& s : array)
        if (s.linear.sensitivity_hz_per_n <= 0.0)
            throw ConfigError("process_stream: taxel '" + s.id + "' has no calibration");

    const Spectrogram spec = spectrogram(audio, options.stft);

    ProcessResult result;
    result.frame_times = spec.frame_times;
    result.taxel_ids.reserve(array.size());
    for (const auto& s : array) result.taxel_ids.push_back(s.id);
    result.readings.resize(array.size());
    result.taxel_errors.assign(array.size(), "");
    result.tared_f0.assign(array.size(), std::numeric_limits<double>::quiet_NaN());

    for (std::size_t ti = 0; ti < array.size(); ++ti) {
        TaxelSpec& tx = array[ti];
        try {
            const auto series = band_series(spec, *tx.band, options.jump_penalty);
            if (options.tare_window_s > 0.0) {
                std::size_t count = 0;
                while (count < series.size() &&
                       series[count].time_s <= series.front().time_s + options.tare_window_s)
                    ++count;
                try {
                    const double f_meas =
                        tare_unloaded(std::span<const BandPoint>(series.data(), count));
                    apply_tare(tx.linear, f_meas);
                    result.tared_f0[ti] = tx.linear.f0_hz;
                } catch (const TaringError& e) {
                    result.taxel_errors[ti] = e.what(); // proceed untared
                }
            }
            auto& out = result.readings[ti];
            out.reserve(series.size());
            for (const auto& p : series) {
                TaxelReading r = estimate_force(p.freq_hz, p.band_amplitude, tx);
                r.time_s = p.time_s;
                out.push_back(r);
            }
        } catch (const std::exception& e) {
            result.taxel_errors[ti] = e.what();
        }
    }
    return result;
}

StreamProcessor::StreamProcessor(std::vector<TaxelSpec> array, int sample_rate,
                                 const ProcessOptions& options)
    : array_(std::move(array)), options_(options), sample_rate_(sample_rate) {
    if (array_.empty())
        throw ConfigError("StreamProcessor: empty taxel array");
    bool any_missing = false;
    for (const auto& s : array_) any_missing |= !s.band.has_value();
    if (any_missing) {
        const auto bands = assign_bands(array_, options_.guard_hz);
        for (std::size_t i = 0; i < array_.size(); ++i)
            if (!array_[i].band) array_[i].band = bands[i];
    }
    const StftLayout layout = stft_layout(sample_rate_, options_.stft);
    window_ = layout.window;
    hop_ = layout.hop;
}

std::vector<std::vector<TaxelReading>> StreamProcessor::feed(std::span<const double> chunk) {
    std::vector<std::vector<TaxelReading>> rows;
    const StftLayout layout = stft_layout(sample_rate_, options_.stft);
    const StftParams& params = options_.stft;

    for (double v : chunk) {
        buffer_.push_back(v);
        if (buffer_.size() < static_cast<std::size_t>(window_)) continue;

        std::vector<double> win(buffer_.begin(), buffer_.begin() + window_);
        const auto mags = stft_frame(win, layout, params);
        const double frame_time =
            (static_cast<double>(consumed_) + window_ / 2.0) / sample_rate_;

        Spectrogram one;
        one.frame_times = {frame_time};
        one.bin_step_hz = params.bin_hz;
        one.bin_count = mags.size();
        one.magnitudes = mags;
        one.amplitude_scale = 4.0 / layout.window;

        std::vector<TaxelReading> row;
        row.reserve(array_.size());
        for (const auto& tx : array_) {
            // Causal decision: single-frame peak instead of the batch path.
            const auto series = band_series(one, *tx.band, 0.0);
            TaxelReading r = estimate_force(series.front().freq_hz,
                                            series.front().band_amplitude, tx);
            r.time_s = frame_time;
            row.push_back(r);
        }
        rows.push_back(std::move(row));

        buffer_.erase(buffer_.begin(), buffer_.begin() + hop_);
        consumed_ += hop_;
    }
    return rows;
}

} // namespace resotact
