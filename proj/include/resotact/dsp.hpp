#pragma once

// Audio-to-readings front end: magnitude spectrogram on an exact 2.5 Hz grid
// at 25 frames/s, penalized-path ridge extraction per frequency band, and the
// block-max amplitude envelope. All transforms are stateless and
// deterministic; distinct bands of one spectrogram may be processed
// concurrently.

#include <cstddef>
#include <span>
#include <vector>

namespace resotact {

struct AudioBuffer {
    std::vector<double> samples; // normalized to [-1, 1]
    int sample_rate = 44100;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

struct FrequencyBand {
    double lo_hz;
    double hi_hz;

    bool contains(double f) const { return f >= lo_hz && f <= hi_hz; }
};

struct StftParams {
    int window_samples_ref = 8192; // at the 44.1 kHz reference rate
    double bin_hz = 2.5;           // exported grid spacing
    double out_rate_hz = 25.0;     // frame rate
};

struct Spectrogram {
    std::vector<double> frame_times; // s, window centers
    double bin_step_hz = 2.5;
    std::size_t bin_count = 0;
    std::vector<float> magnitudes;   // frames x bins, row-major, nonnegative
    double amplitude_scale = 1.0;    // 2/sum(window): maps a tone peak to its amplitude

    std::size_t frames() const { return frame_times.size(); }
    float at(std::size_t frame, std::size_t bin) const {
        return magnitudes[frame * bin_count + bin];
    }
    double bin_freq(std::size_t bin) const { return bin_step_hz * static_cast<double>(bin); }
};

/// Derived per-rate geometry: window/hop lengths and the native FFT grid.
struct StftLayout {
    int window;
    int fft;
    int hop;
    double native_df;
    std::size_t out_bins;
};

/// Window scales with the sample rate to keep its duration; the hop realizes
/// out_rate_hz exactly. Throws if the rate is not divisible by it.
StftLayout stft_layout(int sample_rate, const StftParams& params = {});

/// Hann-windowed magnitude STFT, zero-padded 2x and resampled onto the exact
/// bin_hz grid by local quadratic interpolation.
Spectrogram spectrogram(const AudioBuffer& audio, const StftParams& params = {});

/// One analysis frame (window_samples must match layout.window); returns the
/// bin_hz-grid magnitudes. Building block for the streaming path.
std::vector<float> stft_frame(std::span<const double> window_samples, const StftLayout& layout,
                              const StftParams& params = {});

struct RidgePoint {
    double time_s;
    double freq_hz;   // sub-bin refined
    double magnitude; // spectrogram magnitude at the ridge bin
    std::size_t bin;  // grid index of the ridge bin
};

/// Maximum-total-magnitude path through the band with a quadratic penalty on
/// frame-to-frame frequency jumps. jump_penalty is per Hz^2; zero reduces to
/// the per-frame argmax.
std::vector<RidgePoint> extract_ridge(const Spectrogram& spec, FrequencyBand band,
                                      double jump_penalty = 0.01);

struct EnvelopePoint {
    double time_s;
    double amplitude;
};

/// Block max over ~22.7 ms, smoothed over ~113 ms, resampled to 25 Hz.
/// Window lengths scale with the sample rate to keep the durations fixed.
std::vector<EnvelopePoint> amplitude_envelope(const AudioBuffer& audio,
                                              double out_rate_hz = 25.0);

struct BandPoint {
    double time_s;
    double freq_hz;
    double band_amplitude; // in-band signal amplitude (window-gain calibrated)
    double ridge_magnitude;
};

/// Per-band 25 Hz series on the spectrogram frame clock: ridge frequency plus
/// a band-limited amplitude taken from the scalloping-corrected ridge peak.
/// The amplitude reads only its own band, so one taxel's level never shifts
/// another's gating.
std::vector<BandPoint> band_series(const Spectrogram& spec, FrequencyBand band,
                                   double jump_penalty = 0.01);
std::vector<BandPoint> band_series(const AudioBuffer& audio, FrequencyBand band,
                                   double jump_penalty = 0.01,
                                   const StftParams& params = {});

/// Linear interpolation of an envelope at an arbitrary time (clamped ends).
double envelope_at(const std::vector<EnvelopePoint>& envelope, double time_s);

} // namespace resotact
