#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "resotact/calibration.hpp"
#include "resotact/errors.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace resotact;

namespace {

std::vector<std::pair<double, double>> length_points(const LengthFreqFit& fit) {
    std::vector<std::pair<double, double>> pts;
    for (double l_mm : {41.0, 47.0, 53.0, 59.0, 65.0})
        pts.emplace_back(l_mm * 1e-3, fitted_freq(l_mm * 1e-3, fit));
    return pts;
}

} // namespace

TEST_CASE("length-frequency fit recovers exact data exactly") {
    const LengthFreqFit truth{290.0, 4.6, 260.0};
    const auto res = fit_length_frequency(length_points(truth));
    const double a_true = truth.b1 / truth.b2;
    CHECK(res.fit.b1 / res.fit.b2 == doctest::Approx(a_true).epsilon(1e-9));
    CHECK(res.fit.b2 == 4.0);
    CHECK(res.fit.b3 == doctest::Approx(truth.b3).epsilon(1e-9));
    CHECK(res.residual_rms_hz < 1e-9);
}

TEST_CASE("length-frequency fit under 5 Hz noise: Monte Carlo recovery") {
    const LengthFreqFit truth{290.0, 4.6, 260.0};
    const double a_true = truth.b1 / truth.b2;
    std::mt19937 rng(1234);
    std::normal_distribution<double> noise(0.0, 5.0);

    double se_a = 0.0, se_b3 = 0.0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        auto pts = length_points(truth);
        for (auto& [l, f] : pts) f += noise(rng);
        const auto res = fit_length_frequency(pts);
        const double da = res.fit.b1 / res.fit.b2 - a_true;
        const double db3 = res.fit.b3 - truth.b3;
        se_a += da * da;
        se_b3 += db3 * db3;
    }
    const double rms_a = std::sqrt(se_a / trials);
    const double rms_b3 = std::sqrt(se_b3 / trials);
    CHECK(rms_a / a_true < 0.05);
    CHECK(rms_b3 < 20.0);
}

TEST_CASE("length-frequency fit of the ideal open-closed column has b3 near zero") {
    const auto res = fit_length_frequency(length_points({340.0, 4.0, 0.0}));
    CHECK(std::abs(res.fit.b3) < 1e-6);
    CHECK(res.fit.b1 / res.fit.b2 == doctest::Approx(85.0).epsilon(1e-9));
}

TEST_CASE("length-frequency fit rejects degenerate input") {
    std::vector<std::pair<double, double>> two = {{0.041, 1700.0}, {0.059, 1330.0}};
    CHECK_THROWS_AS(fit_length_frequency(two), FitError);
    std::vector<std::pair<double, double>> same = {
        {0.059, 1330.0}, {0.059, 1331.0}, {0.059, 1329.0}};
    CHECK_THROWS_AS(fit_length_frequency(same), FitError);
}

namespace {

std::vector<std::pair<double, double>> beta_points(double b1, double b2, double f_cap,
                                                   int count = 24) {
    std::vector<std::pair<double, double>> pts;
    const double d_max = std::pow(f_cap / b1, 1.0 / b2);
    for (int i = 1; i <= count; ++i) {
        const double d = d_max * i / count;
        pts.emplace_back(d, b1 * std::pow(d, b2));
    }
    return pts;
}

} // namespace

TEST_CASE("force-deflection fit recovers exact data") {
    const auto res = fit_force_deflection(beta_points(2.66, 1.64, 11.0));
    CHECK(res.fit.beta1 == doctest::Approx(2.66).epsilon(1e-4));
    CHECK(res.fit.beta2 == doctest::Approx(1.64).epsilon(1e-4));

    // Soft thin cap, data capped at 2 N.
    const auto res1 = fit_force_deflection(beta_points(0.94, 1.36, 2.0));
    CHECK(res1.fit.beta1 == doctest::Approx(0.94).epsilon(1e-3));
    CHECK(res1.fit.beta2 == doctest::Approx(1.36).epsilon(1e-3));
}

TEST_CASE("force-deflection fit under 2% multiplicative noise: Monte Carlo") {
    struct Row { double b1, b2, cap; };
    const Row rows[] = {{0.94, 1.36, 2.0},
                        {1.56, 1.77, 6.0},
                        {2.66, 1.64, 11.0},
                        {2.65, 1.68, 15.0},
                        {3.52, 1.50, 15.0}};
    std::mt19937 rng(99);
    std::normal_distribution<double> noise(0.0, 0.02);
    for (const Row& row : rows) {
        for (int trial = 0; trial < 100; ++trial) {
            auto pts = beta_points(row.b1, row.b2, row.cap);
            for (auto& [d, f] : pts) f *= 1.0 + noise(rng);
            const auto res = fit_force_deflection(pts);
            CHECK(std::abs(res.fit.beta1 - row.b1) / row.b1 < 0.05);
            CHECK(std::abs(res.fit.beta2 - row.b2) / row.b2 < 0.05);
        }
    }
}

TEST_CASE("force-deflection fit is scale-consistent in force") {
    auto pts = beta_points(2.66, 1.64, 11.0);
    const auto base = fit_force_deflection(pts);
    for (auto& [d, f] : pts) f *= 3.5;
    const auto scaled = fit_force_deflection(pts);
    CHECK(scaled.fit.beta1 == doctest::Approx(3.5 * base.fit.beta1).epsilon(1e-6));
    CHECK(scaled.fit.beta2 == doctest::Approx(base.fit.beta2).epsilon(1e-6));
}

TEST_CASE("force-deflection fit failure carries residual history") {
    auto pts = beta_points(2.66, 1.64, 11.0);
    FitOptions opts;
    opts.max_iterations = 1; // force non-convergence
    opts.step_tolerance = 1e-300;
    try {
        fit_force_deflection(pts, opts);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(!e.residual_history().empty());
    }
    std::vector<std::pair<double, double>> few = {{0.1, 0.2}, {0.2, 0.5}, {0.3, 0.9}};
    CHECK_THROWS_AS(fit_force_deflection(few), FitError);
}

TEST_CASE("threshold selection on an already monotone record returns the minimum amplitude") {
    PalpationRecord record;
    for (int i = 0; i < 100; ++i) {
        const double f = i * 0.05;
        record.samples.push_back({i * 0.04, f, f * 0.2, 1300.0 + 5.0 * f, 0.11 + 0.001 * i});
    }
    const auto sel = select_amplitude_threshold(record);
    CHECK(sel.threshold == doctest::Approx(0.11));
    CHECK(sel.retained.size() == record.samples.size());
}

TEST_CASE("threshold selection gates the transition region of a holed cap") {
    const auto spec = fixtures::make_taxel("t3h3", 59.0, 3.0, 3.0, 0.0, 10.0);
    const auto record = fixtures::model_palpation(spec, 4.8);
    const auto sel = select_amplitude_threshold(record);

    // Filtered curve is monotone within one bin.
    double run = -1e18;
    for (const auto& s : sel.retained) {
        CHECK(s.freq_hz >= run - 2.5);
        run = std::max(run, s.freq_hz);
    }
    // Gating opens where the seal ramp lifts the amplitude off its floor.
    CHECK(sel.retained.front().force_n > 2.0);
    CHECK(sel.threshold > unloaded_amplitude(3.0));
    CHECK(sel.threshold < unloaded_amplitude(3.0) + 0.03);

    // F_min sits at the loading-ramp point where amplitude first exceeds T.
    double crossing = -1.0;
    for (const auto& s : record.samples) {
        if (s.amplitude >= sel.threshold) {
            crossing = s.force_n;
            break;
        }
    }
    REQUIRE(crossing >= 0.0);
    CHECK(std::abs(sel.retained.front().force_n - crossing) <= 0.5);

    SUBCASE("minimality: every smaller observed amplitude fails the check") {
        std::vector<double> smaller;
        for (const auto& s : record.samples)
            if (s.amplitude < sel.threshold) smaller.push_back(s.amplitude);
        std::sort(smaller.begin(), smaller.end());
        smaller.erase(std::unique(smaller.begin(), smaller.end()), smaller.end());
        for (double t : smaller) {
            std::vector<PalpationSample> kept;
            for (const auto& s : record.samples)
                if (s.amplitude >= t) kept.push_back(s);
            std::stable_sort(kept.begin(), kept.end(),
                             [](const auto& a, const auto& b) { return a.force_n < b.force_n; });
            bool monotone = true;
            double peak = -1e18;
            for (const auto& s : kept) {
                if (s.freq_hz < peak - 2.5) { monotone = false; break; }
                peak = std::max(peak, s.freq_hz);
            }
            CHECK_FALSE(monotone);
        }
    }
}

TEST_CASE("threshold ordering across hole sizes matches the decreasing pattern") {
    double prev = 1.0;
    for (double h : {0.0, 1.0, 3.0, 5.0}) {
        const auto spec = fixtures::make_taxel("t3", 59.0, 3.0, h, 0.0, 10.0);
        const auto sel = select_amplitude_threshold(fixtures::model_palpation(spec, 4.8));
        CHECK(sel.threshold < prev);
        prev = sel.threshold;
    }
}

TEST_CASE("threshold selection reports failure when gating cannot help") {
    // Strong transition with a flat amplitude: no threshold removes the dip.
    PalpationRecord record;
    for (int i = 0; i < 200; ++i) {
        const double force = i * 0.04;
        const double freq = 1300.0 + 4.0 * force +
                            30.0 * std::sin(2.0 * 3.14159265358979 * std::min(force, 3.0) / 3.0);
        record.samples.push_back({i * 0.04, force, 0.0, freq, 0.25});
    }
    CHECK_THROWS_AS(select_amplitude_threshold(record), ThresholdSelectionError);
}

TEST_CASE("linear calibration on a perfectly linear record") {
    PalpationRecord record;
    for (int i = 0; i <= 200; ++i) {
        const double f = i * 0.03;
        record.samples.push_back({i * 0.04, f, 0.0, 1330.0 + 8.8 * f, 0.3});
    }
    const auto cal = extract_linear_calibration(record, 0.0);
    CHECK(cal.sensitivity_hz_per_n == doctest::Approx(8.8).epsilon(1e-6));
    CHECK(cal.f0_hz == doctest::Approx(1330.0).epsilon(1e-9));
    CHECK(cal.f_min_n == doctest::Approx(0.0));
    CHECK(cal.f_max_n == doctest::Approx(6.0));
}

TEST_CASE("linear calibration detects saturation onset (thin cap)") {
    // Thin holed cap saturating at 2.6 N; mass suppresses the transition so
    // the record is monotone from the start.
    auto spec = fixtures::make_taxel("t1h3m4", 59.0, 1.0, 3.0, 200.0, 2.6);
    PalpationRecord record;
    for (int i = 0; i <= 600; ++i) {
        const double force = 3.0 * i / 600.0;
        const auto resp = forward_response(spec.model, force);
        record.samples.push_back({i * 0.04, force, 0.0, resp.freq_hz, 0.3});
    }
    const auto cal = extract_linear_calibration(record, 0.0);
    CHECK(cal.f_max_n == doctest::Approx(2.6).epsilon(0.2)); // within 0.5 N of the clamp
    CHECK(cal.sensitivity_hz_per_n > 0.0);
}

TEST_CASE("linear calibration rejects starved input") {
    PalpationRecord record;
    for (int i = 0; i < 10; ++i)
        record.samples.push_back({i * 0.04, i * 0.1, 0.0, 1330.0 + i, i < 3 ? 0.3 : 0.01});
    CHECK_THROWS_AS(extract_linear_calibration(record, 0.2), FitError);
}

TEST_CASE("thresholded records always calibrate with positive sensitivity") {
    for (double h : {1.0, 3.0, 5.0}) {
        const auto spec = fixtures::make_taxel("t3", 59.0, 3.0, h, 0.0, 10.0);
        const auto record = fixtures::model_palpation(spec, 4.8);
        const auto sel = select_amplitude_threshold(record);
        const auto cal = extract_linear_calibration(record, sel.threshold);
        CHECK(cal.sensitivity_hz_per_n > 0.0);
        CHECK(cal.f_min_n < cal.f_max_n);
    }
}

TEST_CASE("calibrating the reference holed cap through the audio pipeline lands near "
          "its catalog sensitivity") {
    const auto spec = fixtures::make_taxel("t3h3", 59.0, 3.0, 3.0, 0.0, 10.0);
    const auto record =
        fixtures::pipeline_palpation(spec, fixtures::palpation_trace("t3h3", 4.8));
    const auto sel = select_amplitude_threshold(record);
    const auto cal = extract_linear_calibration(record, sel.threshold);
    CHECK(std::abs(cal.sensitivity_hz_per_n - 5.1) / 5.1 <= 0.30);
    CHECK(cal.f_min_n < cal.f_max_n);
    CHECK(cal.amplitude_threshold == sel.threshold);
}

TEST_CASE("sensitivity scaling follows the inverse-square length law") {
    CHECK(scale_sensitivity(5.1, 0.059, 0.059) == doctest::Approx(5.1));
    CHECK(scale_sensitivity(5.1, 0.059, 0.041) == doctest::Approx(10.561).epsilon(1e-4));
    CHECK(scale_sensitivity(7.0, 0.05, 0.10) == doctest::Approx(7.0 / 4.0));

    SUBCASE("composition is exact") {
        const double direct = scale_sensitivity(5.1, 0.059, 0.047);
        const double via = scale_sensitivity(scale_sensitivity(5.1, 0.059, 0.065), 0.065, 0.047);
        CHECK(via == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK_THROWS_AS(scale_sensitivity(-5.1, 0.059, 0.041), std::domain_error);
    CHECK_THROWS_AS(scale_sensitivity(5.1, 0.0, 0.041), std::domain_error);
}
