#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "specgate/signal.hpp"

namespace specgate {

enum class WavFormat { Pcm16, Pcm24, Pcm32, Float32 };

const char* to_string(WavFormat f);
WavFormat wav_format_from_string(const std::string& name);

struct WavFile {
  WavFormat format = WavFormat::Pcm16;
  Signal signal;
};

// PCM samples map to floating point as v / 2^(bits-1), so the most negative code is
// exactly -1.0. Writing inverts this with rounding, which makes read -> write with the
// same format reproduce the data chunk byte for byte.

WavFile decode_wav(const std::vector<std::uint8_t>& bytes);

/// Encodes `signal`; samples outside [-1, 1] are clipped and counted in *clipped.
std::vector<std::uint8_t> encode_wav(const Signal& signal, WavFormat format, std::size_t* clipped = nullptr);

WavFile read_wav_file(const std::filesystem::path& path);
Signal read_wav(const std::filesystem::path& path);

/// Returns the number of clipped samples. Callers must not write the same path concurrently.
std::size_t write_wav(const std::filesystem::path& path, const Signal& signal,
                      WavFormat format = WavFormat::Float32);

}  // namespace specgate
