#pragma once

// Mono 16-bit PCM RIFF/WAVE reader and writer. Round-trips sample data
// bit-exactly; writes go through a temp file and rename.

#include "resotact/dsp.hpp"

#include <string>

namespace resotact {

/// Throws FormatError (with the offending byte offset) on malformed files.
AudioBuffer read_wav(const std::string& path);

void write_wav(const std::string& path, const AudioBuffer& audio);

} // namespace resotact
