#include "resotact/taxel_model.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace resotact {

namespace {

double smoothstep01(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

} // namespace

TransitionModel TransitionModel::defaults_for(const CapDesign& cap) {
    TransitionModel tm;
    const double t = cap.wall_thickness_mm;
    if (t < 2.0) {
        tm.deviation_hz = 40.0;
    } else if (t < 4.0) {
        tm.deviation_hz = 20.0;
    } else {
        tm.deviation_hz = 10.0;
    }
    // 200 mg settles caps up to 3 mm; 50 mg suffices at 5 mm.
    if (t <= 3.0) {
        tm.mass_critical_mg = 200.0;
    } else if (t >= 5.0) {
        tm.mass_critical_mg = 50.0;
    } else {
        tm.mass_critical_mg = 200.0 + (t - 3.0) / 2.0 * (50.0 - 200.0);
    }
    return tm;
}

double ideal_open_closed_freq(double length_m, double speed_mps) {
    if (length_m <= 0.0 || speed_mps <= 0.0)
        throw std::domain_error("ideal_open_closed_freq: length and speed must be positive");
    return speed_mps / (4.0 * length_m);
}

double ideal_open_open_freq(double length_m, double speed_mps) {
    if (length_m <= 0.0 || speed_mps <= 0.0)
        throw std::domain_error("ideal_open_open_freq: length and speed must be positive");
    return speed_mps / (2.0 * length_m);
}

double fitted_freq(double length_m, const LengthFreqFit& fit) {
    if (length_m <= 0.0)
        throw std::domain_error("fitted_freq: length must be positive");
    return fit.b1 / (fit.b2 * length_m) + fit.b3;
}

double linearized_freq_shift(double length_m, double delta_m, double speed_mps) {
    if (length_m <= 0.0 || speed_mps <= 0.0)
        throw std::domain_error("linearized_freq_shift: length and speed must be positive");
    if (delta_m < 0.0)
        throw std::domain_error("linearized_freq_shift: compression depth must be >= 0");
    if (delta_m >= length_m)
        throw std::domain_error("linearized_freq_shift: tube fully collapsed");
    return (speed_mps / 4.0) * delta_m / (length_m * length_m);
}

double force_from_deflection(double delta_mm, const ForceDeflectionFit& fit) {
    if (delta_mm < 0.0)
        throw std::domain_error("force_from_deflection: deflection must be >= 0");
    const double f = fit.beta1 * std::pow(delta_mm, fit.beta2) + fit.beta3;
    return std::min(f, fit.f_max_n);
}

double deflection_from_force(double force_n, const ForceDeflectionFit& fit) {
    if (force_n < fit.beta3 || force_n > fit.f_max_n)
        throw std::range_error("deflection_from_force: force outside [beta3, F_max]");
    return std::pow((force_n - fit.beta3) / fit.beta1, 1.0 / fit.beta2);
}

double unloaded_amplitude(double hole_diameter_mm) {
    // Anchored just below the per-hole gating thresholds; linear in h.
    static constexpr double kH[] = {0.0, 1.0, 3.0, 5.0};
    static constexpr double kA[] = {0.30, 0.17, 0.12, 0.05};
    const double h = hole_diameter_mm;
    if (h <= kH[0]) return kA[0];
    for (std::size_t i = 1; i < 4; ++i) {
        if (h <= kH[i]) {
            const double t = (h - kH[i - 1]) / (kH[i] - kH[i - 1]);
            return kA[i - 1] + t * (kA[i] - kA[i - 1]);
        }
    }
    return kA[3];
}

double effective_deviation_hz(const CapDesign& cap, const TransitionModel& tm) {
    if (!tm.enabled) return 0.0;
    const double suppression = std::max(0.0, 1.0 - cap.added_mass_mg / tm.mass_critical_mg);
    return tm.deviation_hz * suppression;
}

double transition_deviation_hz(double force_n, const CapDesign& cap, const TransitionModel& tm) {
    if (force_n <= 0.0 || force_n >= tm.transition_force_n) return 0.0;
    const double a = effective_deviation_hz(cap, tm);
    if (a <= 0.0) return 0.0;
    return a * std::sin(2.0 * std::numbers::pi * force_n / tm.transition_force_n);
}

double seal_onset_mm(const ForceDeflectionFit& fit, const TransitionModel& tm) {
    const double f_seal = std::min(tm.transition_force_n, kSealForceFraction * fit.f_max_n);
    return deflection_from_force(std::max(f_seal, fit.beta3), fit);
}

TaxelResponse forward_response(const TaxelModel& model, double force_n) {
    if (force_n < 0.0)
        throw std::domain_error("forward_response: force must be >= 0");

    const double f_clamped = std::min(force_n, model.force_defl.f_max_n);
    const double delta_mm = deflection_from_force(f_clamped, model.force_defl);

    double freq = fitted_freq(model.tube.length_m - delta_mm * 1e-3, model.length_freq);
    freq += transition_deviation_hz(f_clamped, model.cap, model.transition);

    double amplitude;
    if (model.cap.hole_diameter_mm <= 0.0) {
        if (force_n <= 0.0) {
            amplitude = kLoadedAmplitude; // no contact: cap rings freely
        } else {
            const double z = (delta_mm - model.transition.dip_center_mm) / model.transition.dip_width_mm;
            amplitude = kLoadedAmplitude * (1.0 - model.transition.dip_depth * std::exp(-z * z));
        }
    } else {
        const double quiet = unloaded_amplitude(model.cap.hole_diameter_mm);
        const double onset = seal_onset_mm(model.force_defl, model.transition);
        const double rise = kContactRiseFraction * smoothstep01(delta_mm / kContactRiseWidthMm);
        const double seal = (1.0 - kContactRiseFraction) *
                            smoothstep01((delta_mm - onset) / kSealWidthMm);
        amplitude = quiet + (kLoadedAmplitude - quiet) * (rise + seal);
    }
    return {freq, amplitude};
}

} // namespace resotact
