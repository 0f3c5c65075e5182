#include "resotact/calibration.hpp"

#include "resotact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace resotact {

namespace {

struct LineFit {
    double slope;
    double intercept;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx <= 0.0)
        throw FitError("least_squares: degenerate abscissa (no spread)");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

} // namespace

LengthFreqFitResult fit_length_frequency(std::span<const std::pair<double, double>> points) {
    std::set<double> lengths;
    for (const auto& [l, f] : points) {
        if (l <= 0.0) throw FitError("fit_length_frequency: nonpositive length");
        lengths.insert(l);
    }
    if (lengths.size() < 3)
        throw FitError("fit_length_frequency: need at least 3 distinct lengths");

    std::vector<double> x, y;
    x.reserve(points.size());
    y.reserve(points.size());
    for (const auto& [l, f] : points) {
        x.push_back(1.0 / l);
        y.push_back(f);
    }
    const LineFit line = least_squares(x, y);

    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (line.slope * x[i] + line.intercept);
        ss += r * r;
    }
    LengthFreqFitResult out;
    out.fit = LengthFreqFit{4.0 * line.slope, 4.0, line.intercept};
    out.residual_rms_hz = std::sqrt(ss / static_cast<double>(x.size()));
    return out;
}

ForceDeflectionFitResult fit_force_deflection(std::span<const std::pair<double, double>> points,
                                              const FitOptions& options) {
    if (points.size() < 4)
        throw FitError("fit_force_deflection: need at least 4 points");
    std::set<double> deltas;
    for (const auto& [d, f] : points) {
        if (d < 0.0) throw FitError("fit_force_deflection: negative deflection");
        deltas.insert(d);
    }
    if (deltas.size() < 3)
        throw FitError("fit_force_deflection: need at least 3 distinct deflections");

    const std::size_t n = points.size();
    double b1 = 1.0, b2 = 1.5;
    double lambda = 1e-3;
    std::vector<double> history;

    auto residual_ss = [&](double p1, double p2) {
        double ss = 0.0;
        for (const auto& [d, f] : points) {
            const double r = p1 * std::pow(d, p2) - f;
            ss += r * r;
        }
        return ss;
    };

    double ss = residual_ss(b1, b2);
    history.push_back(std::sqrt(ss / static_cast<double>(n)));

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        // Normal equations for the 2-parameter power law.
        double j11 = 0, j12 = 0, j22 = 0, g1 = 0, g2 = 0;
        for (const auto& [d, f] : points) {
            const double m = b1 * std::pow(d, b2);
            const double r = m - f;
            const double d1 = std::pow(d, b2);                 // d m / d b1
            const double d2 = (d > 0.0) ? m * std::log(d) : 0; // d m / d b2
            j11 += d1 * d1;
            j12 += d1 * d2;
            j22 += d2 * d2;
            g1 += d1 * r;
            g2 += d2 * r;
        }

        bool stepped = false;
        double step_rel = 0.0;
        for (int attempt = 0; attempt < 24; ++attempt) {
            const double a11 = j11 * (1.0 + lambda);
            const double a22 = j22 * (1.0 + lambda);
            const double det = a11 * a22 - j12 * j12;
            if (det == 0.0 || !std::isfinite(det)) {
                lambda *= 10.0;
                continue;
            }
            const double s1 = (-g1 * a22 + g2 * j12) / det;
            const double s2 = (-g2 * a11 + g1 * j12) / det;
            const double c1 = std::max(b1 + s1, 1e-12);
            const double c2 = std::max(b2 + s2, 1e-12);
            const double trial = residual_ss(c1, c2);
            if (std::isfinite(trial) && trial <= ss) {
                step_rel = std::hypot(c1 - b1, c2 - b2) / std::max(1e-30, std::hypot(b1, b2));
                b1 = c1;
                b2 = c2;
                ss = trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        history.push_back(std::sqrt(ss / static_cast<double>(n)));
        if (!stepped)
            throw FitError("fit_force_deflection: no descent step found", history);
        if (step_rel < options.step_tolerance)
            break;
    }
    if (iter >= options.max_iterations)
        throw FitError("fit_force_deflection: did not converge", history);

    ForceDeflectionFitResult out;
    out.fit.beta1 = b1;
    out.fit.beta2 = b2;
    out.fit.beta3 = 0.0;
    double fmax = 0.0;
    for (const auto& [d, f] : points) fmax = std::max(fmax, f);
    out.fit.f_max_n = fmax;
    out.residual_rms_n = history.back();
    out.iterations = iter + 1;
    return out;
}

ThresholdSelection select_amplitude_threshold(const PalpationRecord& record,
                                              double monotonicity_tol_hz) {
    const auto& s = record.samples;
    if (s.size() < 5)
        throw ThresholdSelectionError("select_amplitude_threshold: record too short");

    std::vector<double> candidates;
    candidates.reserve(s.size());
    for (const auto& p : s) candidates.push_back(p.amplitude);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Pre-sort by force once; filtering preserves the order.
    std::vector<PalpationSample> by_force(s.begin(), s.end());
    std::stable_sort(by_force.begin(), by_force.end(),
                     [](const PalpationSample& a, const PalpationSample& b) {
                         return a.force_n < b.force_n;
                     });

    for (double t : candidates) {
        std::vector<PalpationSample> kept;
        kept.reserve(by_force.size());
        for (const auto& p : by_force)
            if (p.amplitude >= t) kept.push_back(p);
        if (kept.size() < 5)
            break; // higher thresholds keep even fewer samples

        bool monotone = true;
        double running_max = -std::numeric_limits<double>::infinity();
        for (const auto& p : kept) {
            if (p.freq_hz < running_max - monotonicity_tol_hz) {
                monotone = false;
                break;
            }
            running_max = std::max(running_max, p.freq_hz);
        }
        if (monotone)
            return {t, std::move(kept)};
    }
    throw ThresholdSelectionError(
        "select_amplitude_threshold: no threshold restores monotonicity");
}

LinearCalibration extract_linear_calibration(const PalpationRecord& record, double threshold) {
    std::vector<PalpationSample> kept;
    for (const auto& p : record.samples)
        if (p.amplitude >= threshold) kept.push_back(p);
    if (kept.size() < 5)
        throw FitError("extract_linear_calibration: fewer than 5 retained samples");
    std::stable_sort(kept.begin(), kept.end(),
                     [](const PalpationSample& a, const PalpationSample& b) {
                         return a.force_n < b.force_n;
                     });

    const double f_lo = kept.front().force_n;
    const double f_hi = kept.back().force_n;
    double f_max = f_hi;

    // Saturation scan: segment the force span, compare local slopes against
    // the mid-range slope.
    const int kSegments = 10;
    const double span = f_hi - f_lo;
    if (span > 0.0) {
        std::vector<double> seg_slope(kSegments, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> seg_start(kSegments, 0.0);
        for (int i = 0; i < kSegments; ++i) {
            const double lo = f_lo + span * i / kSegments;
            const double hi = f_lo + span * (i + 1) / kSegments;
            seg_start[i] = lo;
            std::vector<double> x, y;
            for (const auto& p : kept) {
                if (p.force_n >= lo && (p.force_n < hi || (i == kSegments - 1 && p.force_n <= hi))) {
                    x.push_back(p.force_n);
                    y.push_back(p.freq_hz);
                }
            }
            if (x.size() >= 3) {
                try {
                    seg_slope[i] = least_squares(x, y).slope;
                } catch (const FitError&) {
                }
            }
        }
        std::vector<double> mid;
        for (int i = 3; i <= 6; ++i)
            if (std::isfinite(seg_slope[i])) mid.push_back(seg_slope[i]);
        if (!mid.empty()) {
            std::sort(mid.begin(), mid.end());
            const double mid_slope = mid[mid.size() / 2];
            if (mid_slope > 0.0) {
                for (int i = 5; i < kSegments; ++i) {
                    if (std::isfinite(seg_slope[i]) && seg_slope[i] < 0.25 * mid_slope) {
                        f_max = seg_start[i];
                        break;
                    }
                }
            }
        }
    }

    std::vector<double> x, y;
    for (const auto& p : kept) {
        if (p.force_n <= f_max) {
            x.push_back(p.force_n);
            y.push_back(p.freq_hz);
        }
    }
    if (x.size() < 5)
        throw FitError("extract_linear_calibration: fewer than 5 samples inside linear range");
    const LineFit line = least_squares(x, y);

    LinearCalibration cal;
    cal.f0_hz = line.intercept;
    cal.unloaded_hz = line.intercept;
    cal.sensitivity_hz_per_n = line.slope;
    cal.f_min_n = f_lo;
    cal.f_max_n = f_max;
    cal.amplitude_threshold = threshold;
    return cal;
}

double scale_sensitivity(double s_ref_hz_per_n, double l_ref_m, double l_m) {
    if (s_ref_hz_per_n <= 0.0 || l_ref_m <= 0.0 || l_m <= 0.0)
        throw std::domain_error("scale_sensitivity: all arguments must be positive");
    const double ratio = l_ref_m / l_m;
    return s_ref_hz_per_n * ratio * ratio;
}

} // namespace resotact
