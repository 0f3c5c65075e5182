#pragma once

// CSV formats tying the pipeline together. Every file carries a header row;
// floating-point fields use 6 significant digits.
//
//   readings:   time_s,taxel_id,freq_hz,amplitude,force_n,contact
//   palpation:  time_s,force_n,deflection_mm,freq_hz,amplitude
//   traces:     time_s,<taxel_id>,...            (wide, one force column per taxel)
//   truth:      time_s,taxel_id,freq_hz,amplitude,force_n  (synth sidecar)

#include "resotact/calibration.hpp"
#include "resotact/estimator.hpp"
#include "resotact/synth.hpp"

#include <string>
#include <vector>

namespace resotact {

/// Per-frame ground truth emitted next to synthesized audio.
struct TruthRow {
    double time_s;
    std::string taxel_id;
    double freq_hz;
    double amplitude;
    double force_n;
};

std::string format_number(double v); // 6 significant digits

void write_readings_csv(const std::string& path, const ProcessResult& result);
void write_palpation_csv(const std::string& path, const PalpationRecord& record);
PalpationRecord read_palpation_csv(const std::string& path);
void write_traces_csv(const std::string& path, const std::vector<ForceTrace>& traces);
std::vector<ForceTrace> read_traces_csv(const std::string& path);
void write_truth_csv(const std::string& path, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth_csv(const std::string& path);

/// Spectrogram dump restricted to [lo_hz, hi_hz]: one header row of bin
/// frequencies, then one row per frame (first column is the frame time).
void write_spectrogram_csv(const std::string& path, const Spectrogram& spec, double lo_hz,
                           double hi_hz);

/// Two named numeric columns (header checked), e.g. length_mm,freq_hz.
std::vector<std::pair<double, double>> read_pairs_csv(const std::string& path,
                                                      const std::string& col_a,
                                                      const std::string& col_b);

} // namespace resotact
