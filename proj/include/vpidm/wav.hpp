#pragma once

#include <filesystem>
#include <optional>

#include "vpidm/types.hpp"

namespace vpidm {

/// Reads a 16-bit PCM mono WAV file. Samples are scaled by 1/32768.
/// Throws IoError when the file cannot be read, FormatError for any other
/// layout (channels, bit depth, compression) or, when `expected_rate` is
/// given, a different sample rate. No resampling is ever performed.
Waveform read_wav(const std::filesystem::path& path,
                  std::optional<int> expected_rate = std::nullopt);

/// Writes a 16-bit PCM mono WAV file. Samples are scaled by 32768, rounded
/// and clamped to the int16 range, so read_wav(write_wav(x)) reproduces any
/// already-quantized signal exactly.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Rounds samples to the 16-bit grid used by write_wav().
Waveform quantize_16bit(const Waveform& w);

}  // namespace vpidm
