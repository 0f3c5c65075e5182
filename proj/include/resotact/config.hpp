#pragma once

// Array configuration document: taxel geometry, fitted constants, linear
// calibrations, and processing knobs in one JSON file. Lengths are stored in
// millimetres and masses in milligrams, converted to canonical units on load.

#include "resotact/dsp.hpp"
#include "resotact/estimator.hpp"
#include "resotact/taxel_model.hpp"

#include <string>
#include <vector>

namespace resotact {

struct ArrayConfig {
    AcousticConstants constants;
    int sample_rate_hz = 44100;
    StftParams stft;
    double jump_penalty = 0.01;
    double guard_hz = 10.0;
    std::vector<TaxelSpec> taxels;
};

/// Throws ConfigError with the JSON field path on schema violations.
ArrayConfig load_array_config(const std::string& path);
ArrayConfig parse_array_config(const std::string& json_text);
std::string array_config_to_json(const ArrayConfig& cfg);
void save_array_config(const ArrayConfig& cfg, const std::string& path);

/// Every violated invariant, one line each, named. Empty means valid.
std::vector<std::string> validate_config(const ArrayConfig& cfg);

/// Fills in bands for taxels that do not declare one.
void resolve_bands(ArrayConfig& cfg);

} // namespace resotact
