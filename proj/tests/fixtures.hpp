#pragma once

// Shared test fixtures: canonical taxel builds and the synthetic palpation
// pipeline (force trace -> audio -> band series -> characterization record).

#include "resotact/calibration.hpp"
#include "resotact/dsp.hpp"
#include "resotact/estimator.hpp"
#include "resotact/synth.hpp"
#include "resotact/taxel_model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fixtures {

using namespace resotact;

/// Length-frequency constants fitted at a 5 N load.
inline LengthFreqFit length_fit_5n() { return {290.0, 4.6, 260.0}; }

/// Force-deflection rows by cap wall thickness (no-hole caps).
inline ForceDeflectionFit cap_fit(double t_mm) {
    ForceDeflectionFit f;
    f.beta3 = 0.0;
    if (t_mm <= 1.0) {
        f.beta1 = 0.94; f.beta2 = 1.36; f.f_max_n = 2.0;
    } else if (t_mm <= 2.0) {
        f.beta1 = 1.56; f.beta2 = 1.77; f.f_max_n = 6.0;
    } else if (t_mm <= 3.0) {
        f.beta1 = 2.66; f.beta2 = 1.64; f.f_max_n = 11.0;
    } else if (t_mm <= 4.0) {
        f.beta1 = 2.65; f.beta2 = 1.68; f.f_max_n = 15.0;
    } else {
        f.beta1 = 3.52; f.beta2 = 1.50; f.f_max_n = 15.0;
    }
    return f;
}

inline TaxelSpec make_taxel(const std::string& id, double length_mm, double thickness_mm,
                            double hole_mm = 0.0, double mass_mg = 0.0,
                            double f_max_override = -1.0) {
    TaxelSpec spec;
    spec.id = id;
    spec.model.tube.length_m = length_mm * 1e-3;
    spec.model.cap = {thickness_mm, hole_mm, mass_mg};
    spec.model.length_freq = length_fit_5n();
    spec.model.force_defl = cap_fit(thickness_mm);
    if (f_max_override > 0.0) spec.model.force_defl.f_max_n = f_max_override;
    spec.model.transition = TransitionModel::defaults_for(spec.model.cap);
    return spec;
}

/// Triangular palpation trace: dwell unloaded, ramp to the peak, ramp back.
inline ForceTrace palpation_trace(const std::string& id, double peak_n, double dwell_s = 3.0,
                                  double ramp_s = 12.0) {
    ForceTrace tr;
    tr.taxel_id = id;
    tr.samples = {{0.0, 0.0},
                  {dwell_s, 0.0},
                  {dwell_s + ramp_s, peak_n},
                  {dwell_s + 2.0 * ramp_s, 0.0}};
    return tr;
}

/// Characterization record for one taxel produced by the full forward
/// pipeline: synthesize audio for the trace, run the band series, and attach
/// the ground-truth force and model deflection at each frame.
inline PalpationRecord pipeline_palpation(TaxelSpec spec, const ForceTrace& trace,
                                          double loudness = 1.0, double snr_db = NAN,
                                          std::uint64_t seed = 0) {
    if (!spec.band) {
        const TaxelSpec arr[] = {spec};
        spec.band = assign_bands(arr).front();
    }
    SynthConfig cfg;
    cfg.loudness = loudness;
    if (!std::isnan(snr_db)) {
        cfg.noise_snr_db = snr_db;
        cfg.noise_seed = seed;
    }
    const TaxelSpec arr[] = {spec};
    const ForceTrace traces[] = {trace};
    const AudioBuffer audio = synthesize(traces, arr, cfg);
    const auto series = band_series(audio, *spec.band);

    PalpationRecord record;
    record.samples.reserve(series.size());
    for (const auto& p : series) {
        const double force = trace.force_at(p.time_s);
        const double clamped = std::min(force, spec.model.force_defl.f_max_n);
        record.samples.push_back({p.time_s, force,
                                  deflection_from_force(clamped, spec.model.force_defl),
                                  p.freq_hz, p.band_amplitude});
    }
    return record;
}

/// Model-only record (no audio): exact forward response sampled over a ramp.
inline PalpationRecord model_palpation(const TaxelSpec& spec, double peak_n,
                                       std::size_t samples = 800) {
    PalpationRecord record;
    record.samples.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / 25.0;
        // dwell 2 s, ramp up, ramp down
        const double ramp_s = (static_cast<double>(samples) / 25.0 - 2.0) / 2.0;
        double force = 0.0;
        if (t > 2.0 && t <= 2.0 + ramp_s)
            force = (t - 2.0) / ramp_s * peak_n;
        else if (t > 2.0 + ramp_s)
            force = std::max(0.0, peak_n * (1.0 - (t - 2.0 - ramp_s) / ramp_s));
        const auto resp = forward_response(spec.model, force);
        const double clamped = std::min(force, spec.model.force_defl.f_max_n);
        record.samples.push_back({t, force,
                                  deflection_from_force(clamped, spec.model.force_defl),
                                  resp.freq_hz, resp.amplitude});
    }
    return record;
}

} // namespace fixtures
