#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "resotact/dsp.hpp"
#include "resotact/synth.hpp"

#include <cmath>
#include <numbers>

using namespace resotact;

namespace {

ForceTrace constant_trace(const std::string& id, double force, double duration_s) {
    return {id, {{0.0, force}, {duration_s, force}}};
}

/// Independent frequency oracle: positive-going zero-crossing rate.
double zero_crossing_freq(const AudioBuffer& audio, double t0, double t1) {
    const std::size_t i0 = static_cast<std::size_t>(t0 * audio.sample_rate);
    const std::size_t i1 = static_cast<std::size_t>(t1 * audio.sample_rate);
    std::size_t crossings = 0;
    for (std::size_t i = i0 + 1; i < i1; ++i)
        if (audio.samples[i - 1] <= 0.0 && audio.samples[i] > 0.0) ++crossings;
    return static_cast<double>(crossings) / (t1 - t0);
}

double spectral_peak(const AudioBuffer& audio, double lo, double hi) {
    const auto ridge = extract_ridge(spectrogram(audio), {lo, hi});
    return ridge[ridge.size() / 2].freq_hz;
}

} // namespace

TEST_CASE("unloaded no-hole taxel emits its fitted frequency") {
    const auto spec = fixtures::make_taxel("t3h0", 59.0, 3.0);
    const TaxelSpec arr[] = {spec};
    const ForceTrace traces[] = {constant_trace("t3h0", 0.0, 2.0)};
    const auto audio = synthesize(traces, arr);

    const double expected = fitted_freq(0.059, spec.model.length_freq);
    CHECK(spectral_peak(audio, expected - 100.0, expected + 100.0) ==
          doctest::Approx(expected).epsilon(2.5 / expected));
    CHECK(zero_crossing_freq(audio, 0.5, 1.5) == doctest::Approx(expected).epsilon(0.002));
}

TEST_CASE("a linear-spring cap calibrated at 5.1 Hz/N lands 20.4 Hz up at 4 N") {
    auto spec = fixtures::make_taxel("t3h3", 59.0, 3.0, 3.0);
    // Linear spring whose small-deflection sensitivity is 5.1 Hz/N.
    const double df_dmm = (spec.model.length_freq.b1 / spec.model.length_freq.b2) /
                          (0.059 * 0.059) * 1e-3;
    spec.model.force_defl = {df_dmm / 5.1, 1.0, 0.0, DeflectionUnit::millimeters, 8.0};

    const TaxelSpec arr[] = {spec};
    const ForceTrace traces[] = {constant_trace("t3h3", 4.0, 2.0)};
    const auto audio = synthesize(traces, arr);

    const double f0 = fitted_freq(0.059, spec.model.length_freq);
    const double peak = spectral_peak(audio, f0 - 50.0, f0 + 120.0);
    CHECK(std::abs(peak - (f0 + 20.4)) <= 2.5);
}

TEST_CASE("four unloaded taxels produce four separate spectral peaks") {
    std::vector<TaxelSpec> arr;
    std::vector<ForceTrace> traces;
    for (double l : {41.0, 47.0, 59.0, 65.0}) {
        const std::string id = "L" + std::to_string(static_cast<int>(l));
        arr.push_back(fixtures::make_taxel(id, l, 3.0, 3.0, 0.0, 10.0));
        traces.push_back(constant_trace(id, 0.0, 2.0));
    }
    const auto audio = synthesize(traces, arr);
    for (const auto& spec : arr) {
        const double expected = fitted_freq(spec.model.tube.length_m, spec.model.length_freq);
        CHECK(std::abs(spectral_peak(audio, expected - 40.0, expected + 40.0) - expected) <= 2.5);
    }
}

TEST_CASE("oscillator phase is continuous across force steps") {
    const auto spec = fixtures::make_taxel("t3h0", 59.0, 3.0);
    ForceTrace tr{"t3h0",
                  {{0.0, 0.0}, {1.0, 0.0}, {1.05, 5.0}, {2.0, 5.0}, {2.05, 8.0}, {3.0, 8.0}}};
    const TaxelSpec arr[] = {spec};
    const ForceTrace traces[] = {tr};
    const auto audio = synthesize(traces, arr);

    // A continuous-phase sine cannot move faster per sample than its slew.
    const double f_hi = fitted_freq(0.059 - 2.5e-3, spec.model.length_freq) + 40.0;
    const double bound = 2.0 * std::numbers::pi * f_hi / 44100.0 * kLoadedAmplitude + 1e-3;
    double worst = 0.0;
    for (std::size_t i = 1; i < audio.samples.size(); ++i)
        worst = std::max(worst, std::abs(audio.samples[i] - audio.samples[i - 1]));
    CHECK(worst < bound);
}

TEST_CASE("separate synthesis plus summation equals the joint mix bit for bit") {
    std::vector<TaxelSpec> arr;
    std::vector<ForceTrace> traces;
    for (double l : {47.0, 59.0, 65.0}) {
        const std::string id = "L" + std::to_string(static_cast<int>(l));
        arr.push_back(fixtures::make_taxel(id, l, 3.0, 3.0, 0.0, 10.0));
        traces.push_back(constant_trace(id, 4.0, 1.0));
    }
    SynthConfig cfg;
    cfg.loudness = 0.5; // keeps the joint peak under the normalization target

    const auto joint = synthesize(traces, arr, cfg);

    AudioBuffer sum;
    sum.sample_rate = 44100;
    sum.samples.assign(joint.samples.size(), 0.0);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const TaxelSpec one_spec[] = {arr[i]};
        const ForceTrace one_trace[] = {traces[i]};
        const auto solo = synthesize(one_trace, one_spec, cfg);
        for (std::size_t n = 0; n < sum.samples.size(); ++n)
            sum.samples[n] += solo.samples[n];
    }
    REQUIRE(sum.samples.size() == joint.samples.size());
    for (std::size_t n = 0; n < sum.samples.size(); ++n)
        CHECK(sum.samples[n] == joint.samples[n]);
}

TEST_CASE("the mix is normalized only when it would clip") {
    std::vector<TaxelSpec> arr;
    std::vector<ForceTrace> traces;
    for (double l : {41.0, 47.0, 59.0, 65.0}) {
        const std::string id = "L" + std::to_string(static_cast<int>(l));
        arr.push_back(fixtures::make_taxel(id, l, 3.0)); // loud no-hole caps
        traces.push_back(constant_trace(id, 0.0, 1.0));
    }
    SynthConfig cfg;
    cfg.loudness = 1.0; // 4 x 0.30 can exceed the 0.9 target
    double gain = 0.0;
    const auto audio = synthesize(traces, arr, cfg, &gain);
    double peak = 0.0;
    for (double v : audio.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 0.9 * (1.0 + 1e-12));
    CHECK(gain < 1.0);

    cfg.loudness = 0.4;
    const auto quiet = synthesize(traces, arr, cfg, &gain);
    CHECK(gain == 1.0);
}

TEST_CASE("add_noise hits the requested SNR and is seed-deterministic") {
    const auto spec = fixtures::make_taxel("t3h0", 59.0, 3.0);
    const TaxelSpec arr[] = {spec};
    const ForceTrace traces[] = {constant_trace("t3h0", 0.0, 2.0)};
    const auto clean = synthesize(traces, arr);

    const auto noisy = add_noise(clean, 20.0, 7);
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        sig += clean.samples[i] * clean.samples[i];
        const double d = noisy.samples[i] - clean.samples[i];
        noise += d * d;
    }
    const double snr_db = 10.0 * std::log10(sig / noise);
    CHECK(std::abs(snr_db - 20.0) < 0.5);

    const auto again = add_noise(clean, 20.0, 7);
    CHECK(std::equal(noisy.samples.begin(), noisy.samples.end(), again.samples.begin()));
    const auto other = add_noise(clean, 20.0, 8);
    CHECK(!std::equal(noisy.samples.begin(), noisy.samples.end(), other.samples.begin()));
}

TEST_CASE("infinite SNR leaves the signal untouched") {
    const auto spec = fixtures::make_taxel("t3h0", 59.0, 3.0);
    const TaxelSpec arr[] = {spec};
    const ForceTrace traces[] = {constant_trace("t3h0", 1.0, 1.0)};
    const auto clean = synthesize(traces, arr);
    const auto same = add_noise(clean, std::numeric_limits<double>::infinity(), 3);
    CHECK(std::equal(clean.samples.begin(), clean.samples.end(), same.samples.begin()));
}

TEST_CASE("synthesize validates its inputs") {
    const auto spec = fixtures::make_taxel("a", 59.0, 3.0);
    const TaxelSpec arr[] = {spec};
    const ForceTrace none[] = {ForceTrace{"b", {{0.0, 0.0}, {1.0, 0.0}}}};
    CHECK_THROWS_AS(synthesize(none, arr), std::invalid_argument);
    const ForceTrace empty[] = {ForceTrace{"a", {}}};
    CHECK_THROWS_AS(synthesize(empty, arr), std::invalid_argument);
}
