#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace resotact {

/// Malformed input file (WAV header, CSV layout, ...).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what, long byte_offset = -1)
        : std::runtime_error(what), byte_offset_(byte_offset) {}
    long byte_offset() const { return byte_offset_; }

private:
    long byte_offset_;
};

/// Invalid array configuration (overlapping bands, bad ranges, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical fit failure; carries the residual history of the iteration.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, std::vector<double> residual_history = {})
        : std::runtime_error(what), residual_history_(std::move(residual_history)) {}
    const std::vector<double>& residual_history() const { return residual_history_; }

private:
    std::vector<double> residual_history_;
};

/// No amplitude threshold restores a monotone force-frequency curve.
class ThresholdSelectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Taring window contains no usable ridge.
class TaringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace resotact
