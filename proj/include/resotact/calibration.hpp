#pragma once

// Fits the empirical taxel constants from characterization data, selects
// amplitude thresholds that restore a monotone force-frequency curve, and
// derives linear force sensitivities with 1/L^2 scaling across tube lengths.

#include "resotact/taxel_model.hpp"

#include <span>
#include <utility>
#include <vector>

namespace resotact {

struct PalpationSample {
    double time_s;
    double force_n;
    double deflection_mm;
    double freq_hz;
    double amplitude;
};

struct PalpationRecord {
    std::vector<PalpationSample> samples; // time strictly increasing
};

/// Runtime frequency-to-force map for one taxel over its usable range.
struct LinearCalibration {
    double f0_hz = 0.0;          // conversion intercept (frequency at F = 0)
    double unloaded_hz = 0.0;    // unloaded reference frequency at calibration time
    double sensitivity_hz_per_n = 0.0;
    double f_min_n = 0.0;
    double f_max_n = 0.0;
    double amplitude_threshold = 0.0;
};

struct LengthFreqFitResult {
    LengthFreqFit fit;       // b2 = 4 by convention, b1 = 4 * (b1/b2)
    double residual_rms_hz;
};

struct ForceDeflectionFitResult {
    ForceDeflectionFit fit;  // beta3 fixed at 0
    double residual_rms_n;
    int iterations;
};

struct FitOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10; // relative parameter step at convergence
};

/// Least squares of f = a/L + b3 over (length_m, freq_hz) points. The ratio
/// a = b1/b2 is the only identifiable slope; b2 is reported as 4.
LengthFreqFitResult fit_length_frequency(std::span<const std::pair<double, double>> points);

/// Damped Gauss-Newton fit of F = beta1 * delta^beta2 over
/// (deflection_mm, force_n) points, initialized at (1, 1.5).
ForceDeflectionFitResult fit_force_deflection(std::span<const std::pair<double, double>> points,
                                              const FitOptions& options = {});

struct ThresholdSelection {
    double threshold;
    std::vector<PalpationSample> retained; // amplitude >= threshold, sorted by force
};

/// Smallest observed amplitude T such that samples with amplitude >= T,
/// sorted by force, have nondecreasing frequency within the tolerance.
ThresholdSelection select_amplitude_threshold(const PalpationRecord& record,
                                              double monotonicity_tol_hz = 2.5);

/// Linear frequency-force calibration over the thresholded record. The upper
/// force bound is the saturation onset, detected where the local slope falls
/// below 25% of the mid-range slope.
LinearCalibration extract_linear_calibration(const PalpationRecord& record, double threshold);

/// S_ref * (L_ref / L)^2: shorter tubes see a larger shift per newton.
double scale_sensitivity(double s_ref_hz_per_n, double l_ref_m, double l_m);

} // namespace resotact
