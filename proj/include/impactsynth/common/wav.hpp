#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace impactsynth {

enum class SampleFormat { Pcm16, Float32 };

struct WavAudio {
  double sample_rate = 44100.0;
  std::vector<double> samples;
};

/// Reads a mono 16-bit PCM or 32-bit float WAV file. Other channel counts,
/// encodings and malformed headers raise DataError.
WavAudio read_wav(const std::filesystem::path& path);

/// Like read_wav, but also rejects files whose rate differs from `expected_rate`
/// (no resampling is performed).
WavAudio read_wav(const std::filesystem::path& path, double expected_rate);

WavAudio decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, double sample_rate,
                                     SampleFormat format = SampleFormat::Float32);

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate, SampleFormat format = SampleFormat::Float32);

/// Scales the signal so that max |x| == peak. Silent signals are left unchanged.
void peak_normalize(std::span<double> samples, double peak = 0.9);

}  // namespace impactsynth
