#include "resotact/dsp.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace resotact {

namespace {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace

StftLayout stft_layout(int sample_rate, const StftParams& params) {
    if (sample_rate <= 0)
        throw std::invalid_argument("stft_layout: sample rate must be positive");
    const double hop_exact = sample_rate / params.out_rate_hz;
    const int hop = static_cast<int>(std::llround(hop_exact));
    if (std::abs(hop_exact - hop) > 1e-9 || hop <= 0)
        throw std::invalid_argument("stft_layout: sample rate must be divisible by the output rate");

    StftLayout s;
    s.hop = hop;
    s.window = (sample_rate == 44100)
                   ? params.window_samples_ref
                   : static_cast<int>(std::llround(static_cast<double>(params.window_samples_ref) *
                                                   sample_rate / 44100.0));
    s.window = std::max(s.window, 16);
    s.fft = static_cast<int>(next_pow2(static_cast<std::size_t>(2 * s.window)));
    s.native_df = static_cast<double>(sample_rate) / s.fft;
    s.out_bins = static_cast<std::size_t>(std::floor(sample_rate / 2.0 / params.bin_hz)) + 1;
    return s;
}

std::vector<float> stft_frame(std::span<const double> window_samples, const StftLayout& layout,
                              const StftParams& params) {
    if (window_samples.size() != static_cast<std::size_t>(layout.window))
        throw std::invalid_argument("stft_frame: sample count must equal the window length");

    const std::size_t native_bins = static_cast<std::size_t>(layout.fft) / 2 + 1;
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(layout.fft),
                                          std::complex<double>(0.0, 0.0));
    for (int i = 0; i < layout.window; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / layout.window);
        buf[static_cast<std::size_t>(i)] = window_samples[static_cast<std::size_t>(i)] * w;
    }
    fft_radix2(buf);

    std::vector<double> native(native_bins);
    for (std::size_t k = 0; k < native_bins; ++k) native[k] = std::abs(buf[k]);

    // Local quadratic resampling onto the exact grid.
    std::vector<float> row(layout.out_bins);
    for (std::size_t b = 0; b < layout.out_bins; ++b) {
        const double f = params.bin_hz * static_cast<double>(b);
        const double pos = f / layout.native_df;
        std::size_t k0 = static_cast<std::size_t>(std::llround(pos));
        k0 = std::clamp<std::size_t>(k0, 1, native_bins - 2);
        const double t = pos - static_cast<double>(k0);
        const double m1 = native[k0 - 1], m2 = native[k0], m3 = native[k0 + 1];
        const double v = m2 + t * (m3 - m1) / 2.0 + t * t * (m3 - 2.0 * m2 + m1) / 2.0;
        row[b] = static_cast<float>(std::max(v, 0.0));
    }
    return row;
}

Spectrogram spectrogram(const AudioBuffer& audio, const StftParams& params) {
    const StftLayout s = stft_layout(audio.sample_rate, params);
    const std::size_t n = audio.samples.size();
    if (n < static_cast<std::size_t>(s.window))
        throw std::invalid_argument("spectrogram: audio shorter than one analysis window");

    const std::size_t frames = (n - s.window) / s.hop + 1;

    Spectrogram out;
    out.bin_step_hz = params.bin_hz;
    out.bin_count = s.out_bins;
    out.amplitude_scale = 4.0 / s.window; // sum of the periodic Hann is window/2
    out.frame_times.resize(frames);
    out.magnitudes.resize(frames * s.out_bins);

    for (std::size_t fr = 0; fr < frames; ++fr) {
        const std::size_t start = fr * s.hop;
        out.frame_times[fr] = (static_cast<double>(start) + s.window / 2.0) / audio.sample_rate;
        const auto row = stft_frame(
            std::span<const double>(audio.samples.data() + start,
                                    static_cast<std::size_t>(s.window)),
            s, params);
        std::copy(row.begin(), row.end(), out.magnitudes.begin() + fr * s.out_bins);
    }
    return out;
}

std::vector<RidgePoint> extract_ridge(const Spectrogram& spec, FrequencyBand band,
                                      double jump_penalty) {
    if (spec.bin_count == 0 || spec.frames() == 0)
        throw std::domain_error("extract_ridge: empty spectrogram");
    if (!(band.lo_hz > 0.0) || !(band.hi_hz > band.lo_hz))
        throw std::domain_error("extract_ridge: invalid band");
    const double grid_max = spec.bin_freq(spec.bin_count - 1);
    if (band.hi_hz > grid_max || band.lo_hz >= grid_max)
        throw std::domain_error("extract_ridge: band outside spectrogram grid");

    const std::size_t b_lo = static_cast<std::size_t>(std::ceil(band.lo_hz / spec.bin_step_hz));
    const std::size_t b_hi = static_cast<std::size_t>(std::floor(band.hi_hz / spec.bin_step_hz));
    if (b_lo > b_hi)
        throw std::domain_error("extract_ridge: band narrower than one bin");
    const std::size_t width = b_hi - b_lo + 1;
    const std::size_t frames = spec.frames();

    // Band-local normalization keeps the penalty scale-independent.
    float peak = 0.0f;
    for (std::size_t fr = 0; fr < frames; ++fr)
        for (std::size_t k = 0; k < width; ++k)
            peak = std::max(peak, spec.at(fr, b_lo + k));
    const double norm = peak > 0.0f ? 1.0 / peak : 0.0;

    std::vector<std::size_t> path(frames, 0);
    if (jump_penalty <= 0.0) {
        for (std::size_t fr = 0; fr < frames; ++fr) {
            std::size_t best = 0;
            float best_m = spec.at(fr, b_lo);
            for (std::size_t k = 1; k < width; ++k) {
                const float m = spec.at(fr, b_lo + k);
                if (m > best_m) {
                    best_m = m;
                    best = k;
                }
            }
            path[fr] = best;
        }
    } else {
        // Per-frame jumps beyond this window never pay off within a frame.
        const double max_jump_hz = std::max(3.0 * spec.bin_step_hz, std::sqrt(1.0 / jump_penalty));
        const std::ptrdiff_t max_jump =
            static_cast<std::ptrdiff_t>(std::ceil(max_jump_hz / spec.bin_step_hz));

        std::vector<double> score(width), prev_score(width);
        std::vector<std::size_t> from(frames * width);
        for (std::size_t k = 0; k < width; ++k) prev_score[k] = spec.at(0, b_lo + k) * norm;
        for (std::size_t fr = 1; fr < frames; ++fr) {
            for (std::size_t k = 0; k < width; ++k) {
                const std::ptrdiff_t j_lo =
                    std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(k) - max_jump);
                const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(
                    static_cast<std::ptrdiff_t>(width) - 1,
                    static_cast<std::ptrdiff_t>(k) + max_jump);
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_j = static_cast<std::size_t>(j_lo);
                for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
                    const double df =
                        (static_cast<double>(k) - static_cast<double>(j)) * spec.bin_step_hz;
                    const double cand = prev_score[static_cast<std::size_t>(j)] -
                                        jump_penalty * df * df;
                    if (cand > best) {
                        best = cand;
                        best_j = static_cast<std::size_t>(j);
                    }
                }
                score[k] = best + spec.at(fr, b_lo + k) * norm;
                from[fr * width + k] = best_j;
            }
            std::swap(score, prev_score);
        }
        std::size_t end = 0;
        for (std::size_t k = 1; k < width; ++k)
            if (prev_score[k] > prev_score[end]) end = k;
        path[frames - 1] = end;
        for (std::size_t fr = frames - 1; fr > 0; --fr)
            path[fr - 1] = from[fr * width + path[fr]];
    }

    std::vector<RidgePoint> out(frames);
    for (std::size_t fr = 0; fr < frames; ++fr) {
        const std::size_t bin = b_lo + path[fr];
        double freq = spec.bin_freq(bin);
        const double m2 = spec.at(fr, bin);
        // Parabolic sub-bin refinement on log magnitudes.
        if (bin > 0 && bin + 1 < spec.bin_count) {
            const double m1 = spec.at(fr, bin - 1);
            const double m3 = spec.at(fr, bin + 1);
            if (m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
                const double a = std::log(m1), b = std::log(m2), c = std::log(m3);
                const double den = a - 2.0 * b + c;
                if (den < 0.0) {
                    const double d = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
                    freq += d * spec.bin_step_hz;
                }
            }
        }
        out[fr] = {spec.frame_times[fr], freq, m2, bin};
    }
    return out;
}

/// Scalloping-corrected peak magnitude: the log-parabola vertex through the
/// ridge bin and its neighbours.
static double refined_peak_magnitude(const Spectrogram& spec, std::size_t frame,
                                     std::size_t bin) {
    const double m2 = spec.at(frame, bin);
    if (bin == 0 || bin + 1 >= spec.bin_count) return m2;
    const double m1 = spec.at(frame, bin - 1);
    const double m3 = spec.at(frame, bin + 1);
    if (m1 <= 0.0 || m2 <= 0.0 || m3 <= 0.0) return m2;
    const double a = std::log(m1), b = std::log(m2), c = std::log(m3);
    const double den = a - 2.0 * b + c;
    if (den >= 0.0) return m2;
    const double d = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    return std::exp(b - 0.25 * (a - c) * d);
}

std::vector<EnvelopePoint> amplitude_envelope(const AudioBuffer& audio, double out_rate_hz) {
    std::vector<EnvelopePoint> out;
    const std::size_t n = audio.samples.size();
    if (n == 0 || audio.sample_rate <= 0) return out;

    // 1000 samples / 22.7 ms at the 44.1 kHz reference rate.
    const int block = std::max(1, static_cast<int>(std::llround(audio.sample_rate * 1000.0 / 44100.0)));
    const std::size_t nblocks = n / static_cast<std::size_t>(block);
    if (nblocks == 0) {
        double peak = 0.0;
        for (double v : audio.samples) peak = std::max(peak, std::abs(v));
        out.push_back({audio.duration_s() / 2.0, peak});
        return out;
    }

    std::vector<double> block_max(nblocks, 0.0);
    std::vector<double> block_time(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) {
        double peak = 0.0;
        const std::size_t start = b * block;
        for (std::size_t i = 0; i < static_cast<std::size_t>(block); ++i)
            peak = std::max(peak, std::abs(audio.samples[start + i]));
        block_max[b] = peak;
        block_time[b] = (static_cast<double>(start) + block / 2.0) / audio.sample_rate;
    }

    // Centered 5-block smoothing (113 ms), shrinking at the edges.
    std::vector<double> smooth(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t lo = b >= 2 ? b - 2 : 0;
        const std::size_t hi = std::min(b + 2, nblocks - 1);
        double acc = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) acc += block_max[i];
        smooth[b] = acc / static_cast<double>(hi - lo + 1);
    }

    const std::size_t count =
        static_cast<std::size_t>(std::floor(audio.duration_s() * out_rate_hz));
    out.reserve(count);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / out_rate_hz;
        while (seg + 1 < nblocks && block_time[seg + 1] <= t) ++seg;
        double v;
        if (t <= block_time.front()) {
            v = smooth.front();
        } else if (seg + 1 >= nblocks) {
            v = smooth.back();
        } else {
            const double u = (t - block_time[seg]) / (block_time[seg + 1] - block_time[seg]);
            v = smooth[seg] + u * (smooth[seg + 1] - smooth[seg]);
        }
        out.push_back({t, v});
    }
    return out;
}

double envelope_at(const std::vector<EnvelopePoint>& envelope, double time_s) {
    if (envelope.empty()) return 0.0;
    if (time_s <= envelope.front().time_s) return envelope.front().amplitude;
    if (time_s >= envelope.back().time_s) return envelope.back().amplitude;
    std::size_t lo = 0, hi = envelope.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (envelope[mid].time_s <= time_s ? lo : hi) = mid;
    }
    const double u = (time_s - envelope[lo].time_s) / (envelope[hi].time_s - envelope[lo].time_s);
    return envelope[lo].amplitude + u * (envelope[hi].amplitude - envelope[lo].amplitude);
}

std::vector<BandPoint> band_series(const Spectrogram& spec, FrequencyBand band,
                                   double jump_penalty) {
    const auto ridge = extract_ridge(spec, band, jump_penalty);
    std::vector<BandPoint> out(ridge.size());
    for (std::size_t fr = 0; fr < ridge.size(); ++fr) {
        const double amp =
            refined_peak_magnitude(spec, fr, ridge[fr].bin) * spec.amplitude_scale;
        out[fr] = {ridge[fr].time_s, ridge[fr].freq_hz, amp, ridge[fr].magnitude};
    }
    return out;
}

std::vector<BandPoint> band_series(const AudioBuffer& audio, FrequencyBand band,
                                   double jump_penalty, const StftParams& params) {
    return band_series(spectrogram(audio, params), band, jump_penalty);
}

} // namespace resotact
