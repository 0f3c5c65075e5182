#pragma once

// Forward physics of a single taxel: a rigid resonant tube capped by a
// compliant hemispherical shell. Maps geometry and applied normal force to
// the emitted resonant frequency and sound amplitude, including the
// damped-boundary transition seen at light contact. All functions are pure.

#include <cstddef>

namespace resotact {

struct TubeGeometry {
    double length_m;                     // rigid tube length L
    double inner_diameter_m = 0.006;     // D
    double cap_inner_diameter_m = 0.007; // d, constant across cap designs
};

struct CapDesign {
    double wall_thickness_mm;   // t, in (0, 10]
    double hole_diameter_mm = 0.0; // h, 0 = no hole
    double added_mass_mg = 0.0;    // m (stacked magnets)
};

struct AcousticConstants {
    double speed_of_sound_mps = 340.0;
    double flow_rate_lpm = 4.5; // recorded only; fundamental mode assumed
};

/// f = b1 / (b2 * L) + b3, the empirical refinement of the open-closed law.
struct LengthFreqFit {
    double b1; // Hz*m
    double b2; // dimensionless
    double b3; // Hz
};

enum class DeflectionUnit { millimeters };

/// F = beta1 * delta^beta2 + beta3, with delta in millimetres.
struct ForceDeflectionFit {
    double beta1;      // N/mm^beta2
    double beta2;      // dimensionless
    double beta3 = 0.0; // N
    DeflectionUnit delta_unit = DeflectionUnit::millimeters;
    double f_max_n;    // saturation bound
};

/// Shape parameters for the light-contact boundary-condition transition and
/// the contact dip in emitted amplitude.
struct TransitionModel {
    bool enabled = true;
    double transition_force_n = 3.0; // F_t: transition spans (0, F_t]
    double deviation_hz = 20.0;      // A_t: peak frequency excursion
    double dip_depth = 0.4;          // no-hole amplitude dip, fraction of loud level
    double dip_center_mm = 1.0;
    double dip_width_mm = 1.0;
    double mass_critical_mg = 200.0; // added mass that fully suppresses the deviation

    /// Defaults scaled by cap wall thickness: thin caps fluctuate more and
    /// need more mass to settle.
    static TransitionModel defaults_for(const CapDesign& cap);
};

struct TaxelModel {
    TubeGeometry tube;
    CapDesign cap;
    LengthFreqFit length_freq;
    ForceDeflectionFit force_defl;
    TransitionModel transition;
};

struct TaxelResponse {
    double freq_hz;
    double amplitude; // dimensionless, 0..1
};

// Amplitude scale anchors (arbitrary units shared by synth and estimator).
inline constexpr double kLoadedAmplitude = 0.30; // sealed cap under load
inline constexpr double kSealWidthMm = 0.5;      // deflection span of the seal ramp
inline constexpr double kSealForceFraction = 0.8; // seal completes by min(F_t, 0.8*F_max)
// Touching a holed cap lifts its amplitude a little before the hole seals;
// signals then rise above the unloaded level with enough deflection.
inline constexpr double kContactRiseFraction = 0.08;
inline constexpr double kContactRiseWidthMm = 0.3;

double ideal_open_closed_freq(double length_m, double speed_mps);
double ideal_open_open_freq(double length_m, double speed_mps);
double fitted_freq(double length_m, const LengthFreqFit& fit);

/// First-order frequency rise for a compression depth delta >= 0 (metres).
/// Underestimates the exact shift c/(4(L-delta)) - c/(4L).
double linearized_freq_shift(double length_m, double delta_m, double speed_mps);

double force_from_deflection(double delta_mm, const ForceDeflectionFit& fit);
double deflection_from_force(double force_n, const ForceDeflectionFit& fit);

/// Emitted amplitude of an unloaded cap as a function of hole diameter;
/// larger holes behave closer to an open tube and are quieter.
double unloaded_amplitude(double hole_diameter_mm);

/// Peak transition deviation after mass suppression (0 when disabled or
/// added mass >= critical mass).
double effective_deviation_hz(const CapDesign& cap, const TransitionModel& tm);

/// Frequency deviation at a given force: A_t*sin(2*pi*F/F_t) inside the
/// transition span, zero elsewhere. Continuous at both ends.
double transition_deviation_hz(double force_n, const CapDesign& cap, const TransitionModel& tm);

/// Deflection at which a holed cap seals and its amplitude starts rising
/// toward the loud (closed-boundary) level.
double seal_onset_mm(const ForceDeflectionFit& fit, const TransitionModel& tm);

TaxelResponse forward_response(const TaxelModel& model, double force_n);

} // namespace resotact
