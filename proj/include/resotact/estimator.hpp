#pragma once

// Runtime inverse of the sensing chain: frequency-band demultiplexing of one
// microphone signal into per-taxel channels, taring, amplitude gating, and
// the linear frequency-to-force map.

#include "resotact/calibration.hpp"
#include "resotact/dsp.hpp"
#include "resotact/taxel_model.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace resotact {

struct TaxelSpec {
    std::string id;
    TaxelModel model;
    LinearCalibration linear;
    std::optional<FrequencyBand> band; // assigned automatically when absent
};

enum class ContactState { NoContact, Transition, Loaded, Saturated };

const char* to_string(ContactState state);

struct TaxelReading {
    double time_s = 0.0;
    double freq_hz = 0.0;
    double amplitude = 0.0;
    std::optional<double> force_n;     // present iff Loaded or Saturated
    ContactState contact = ContactState::NoContact;
    bool crosstalk_warning = false;    // amplitude above threshold but freq off-band
};

/// Disjoint per-taxel bands spanning each taxel's full deflection sweep plus
/// a guard margin; adjacent guards collapse to the midpoint. Throws
/// ConfigError naming the offending pair when sweeps themselves overlap.
std::vector<FrequencyBand> assign_bands(std::span<const TaxelSpec> taxels,
                                        double guard_hz = 10.0);

/// Median ridge frequency over a calibration window (>= 1 s at 25 Hz).
/// Throws TaringError when no ridge rises above the magnitude floor.
double tare_unloaded(std::span<const BandPoint> window, double magnitude_floor = 1e-6);

/// Re-anchors the conversion intercept to a freshly measured unloaded
/// frequency, preserving the calibrated intercept-to-unloaded offset.
void apply_tare(LinearCalibration& cal, double measured_unloaded_hz);

/// Classifies one frame and converts frequency to force over the linear
/// range. No-hole caps inside the transition-ambiguous frequency range
/// report Transition without a force value.
TaxelReading estimate_force(double freq_hz, double amplitude, const TaxelSpec& spec);

struct ProcessOptions {
    double jump_penalty = 0.01;
    double guard_hz = 10.0;
    double tare_window_s = 0.0; // > 0 enables taring over the leading window
    StftParams stft;
};

struct ProcessResult {
    std::vector<double> frame_times;
    std::vector<std::string> taxel_ids;
    std::vector<std::vector<TaxelReading>> readings; // per taxel; empty on failure
    std::vector<std::string> taxel_errors;           // parallel to taxel_ids, "" if ok
    std::vector<double> tared_f0;                    // applied intercepts (NaN if untared)
};

/// Full batch pipeline: spectrogram once, then per-taxel ridge, band
/// amplitude, optional tare, and force conversion on a common frame clock.
/// Per-taxel failures isolate; they do not abort the other channels.
ProcessResult process_stream(const AudioBuffer& audio, std::vector<TaxelSpec> array,
                             const ProcessOptions& options = {});

/// Chunked variant with window carry-over. Emits readings as soon as each
/// STFT window completes (latency <= window + hop). The ridge decision is
/// causal (per-frame peak), unlike the batch penalized path.
class StreamProcessor {
public:
    StreamProcessor(std::vector<TaxelSpec> array, int sample_rate,
                    const ProcessOptions& options = {});

    /// Appends samples; returns one row per completed frame, each row holding
    /// one reading per taxel (readings ordered as the array).
    std::vector<std::vector<TaxelReading>> feed(std::span<const double> chunk);

    const std::vector<TaxelSpec>& array() const { return array_; }

private:
    std::vector<TaxelSpec> array_;
    ProcessOptions options_;
    int sample_rate_;
    int window_ = 0;
    int hop_ = 0;
    std::deque<double> buffer_;
    std::int64_t consumed_ = 0; // samples dropped from the front of the stream
};

} // namespace resotact
