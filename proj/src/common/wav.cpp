#include "impactsynth/common/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"

namespace impactsynth {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t o) {
  return static_cast<std::uint16_t>(b[o] | (b[o + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t o) {
  return static_cast<std::uint32_t>(b[o]) | (static_cast<std::uint32_t>(b[o + 1]) << 8) |
         (static_cast<std::uint32_t>(b[o + 2]) << 16) | (static_cast<std::uint32_t>(b[o + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t o, const char* tag) {
  return std::memcmp(b.data() + o, tag, 4) == 0;
}

}  // namespace

WavAudio decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw DataError("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> payload;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = get_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) throw DataError("WAV chunk overruns the file");
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw DataError("WAV fmt chunk too short");
      format = get_u16(bytes, body);
      channels = get_u16(bytes, body + 2);
      rate = get_u32(bytes, body + 4);
      bits = get_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw DataError("WAV extensible fmt chunk too short");
        format = get_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      payload = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw DataError("WAV file has no fmt chunk");
  if (!have_data) throw DataError("WAV file has no data chunk");
  if (channels != 1) {
    throw DataError("only mono WAV is supported (file has " + std::to_string(channels) + " channels)");
  }
  if (rate == 0) throw DataError("WAV sample rate is zero");

  WavAudio audio;
  audio.sample_rate = rate;
  if (format == kFormatPcm && bits == 16) {
    audio.samples.resize(payload.size() / 2);
    for (std::size_t i = 0; i < audio.samples.size(); ++i) {
      const auto v = static_cast<std::int16_t>(get_u16(payload, 2 * i));
      audio.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    audio.samples.resize(payload.size() / 4);
    for (std::size_t i = 0; i < audio.samples.size(); ++i) {
      audio.samples[i] = std::bit_cast<float>(get_u32(payload, 4 * i));
    }
  } else {
    throw DataError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bits); expected 16-bit PCM or 32-bit float");
  }
  for (double v : audio.samples) {
    if (!std::isfinite(v)) throw DataError("WAV contains non-finite samples");
  }
  return audio;
}

WavAudio read_wav(const std::filesystem::path& path) {
  try {
    return decode_wav(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

WavAudio read_wav(const std::filesystem::path& path, double expected_rate) {
  WavAudio audio = read_wav(path);
  if (audio.sample_rate != expected_rate) {
    throw DataError(path.string() + ": sample rate " + std::to_string(audio.sample_rate) +
                    " Hz is not supported (expected " + std::to_string(expected_rate) +
                    " Hz; resampling is not performed)");
  }
  return audio;
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, double sample_rate,
                                     SampleFormat format) {
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  const auto data_size = static_cast<std::uint32_t>(samples.size() * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (double v : samples) {
    if (format == SampleFormat::Pcm16) {
      const double clipped = std::clamp(v, -1.0, 1.0);
      const auto q = static_cast<std::int16_t>(std::lround(std::clamp(clipped * 32768.0, -32768.0, 32767.0)));
      put_u16(out, static_cast<std::uint16_t>(q));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate, SampleFormat format) {
  write_file_atomic(path, encode_wav(samples, sample_rate, format));
}

void peak_normalize(std::span<double> samples, double peak) {
  double max_abs = 0.0;
  for (double v : samples) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs <= 0.0) return;
  const double scale = peak / max_abs;
  for (double& v : samples) v *= scale;
}

}  // namespace impactsynth
