#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/common/rng.hpp"
#include "impactsynth/common/tensor.hpp"
#include "impactsynth/common/wav.hpp"
#include "support.hpp"

namespace impactsynth {
namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

// Canonical 16-bit PCM file with the given channel count and rate.
std::vector<std::uint8_t> pcm16_file(std::uint16_t channels, std::uint32_t rate, const std::vector<std::int16_t>& samples) {
  std::vector<std::uint8_t> b;
  const auto data_size = static_cast<std::uint32_t>(samples.size() * 2);
  put_tag(b, "RIFF");
  put_u32(b, 36 + data_size);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * 2);
  put_u16(b, static_cast<std::uint16_t>(channels * 2));
  put_u16(b, 16);
  put_tag(b, "data");
  put_u32(b, data_size);
  for (auto s : samples) put_u16(b, static_cast<std::uint16_t>(s));
  return b;
}

TEST(Wav, Float32RoundTripsAtSinglePrecision) {
  const auto x = test::gaussian_noise(1000, 1, 0.3);
  const auto audio = decode_wav(encode_wav(x, 44100.0, SampleFormat::Float32));
  EXPECT_EQ(audio.sample_rate, 44100.0);
  ASSERT_EQ(audio.samples.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(audio.samples[i], static_cast<double>(static_cast<float>(x[i])));
}

TEST(Wav, Pcm16RoundTripsWithinOneStep) {
  const auto x = test::gaussian_noise(1000, 2, 0.3);
  const auto audio = decode_wav(encode_wav(x, 44100.0, SampleFormat::Pcm16));
  ASSERT_EQ(audio.samples.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(audio.samples[i], std::clamp(x[i], -1.0, 1.0), 1.0 / 32767.0);
}

TEST(Wav, DecodesHandBuiltPcmFile) {
  const auto audio = decode_wav(pcm16_file(1, 44100, {0, 16384, -32768, 32767}));
  ASSERT_EQ(audio.samples.size(), 4u);
  EXPECT_EQ(audio.samples[0], 0.0);
  EXPECT_NEAR(audio.samples[1], 0.5, 1e-4);
  EXPECT_NEAR(audio.samples[2], -1.0, 1e-4);
  EXPECT_NEAR(audio.samples[3], 1.0, 1e-4);
}

TEST(Wav, RejectsStereoGarbageAndTruncation) {
  EXPECT_THROW(decode_wav(pcm16_file(2, 44100, {0, 0, 1, 1})), DataError);
  const std::string junk = "this is not audio at all, just text";
  EXPECT_THROW(decode_wav(std::vector<std::uint8_t>(junk.begin(), junk.end())), DataError);
  auto file = pcm16_file(1, 44100, {1, 2, 3, 4});
  file.resize(file.size() - 5);
  EXPECT_THROW(decode_wav(file), DataError);
}

TEST(Wav, ReadRejectsUnexpectedSampleRate) {
  test::TempDir dir;
  const auto path = dir / "a.wav";
  const auto bytes = pcm16_file(1, 22050, {1, 2, 3});
  write_file_atomic(path, bytes);
  EXPECT_EQ(read_wav(path).sample_rate, 22050.0);
  EXPECT_THROW(read_wav(path, 44100.0), DataError);
  EXPECT_THROW(read_wav(dir / "missing.wav"), DataError);
}

TEST(Wav, PeakNormalizeScalesToPeakAndLeavesSilenceAlone) {
  std::vector<double> x{0.1, -0.5, 0.25};
  peak_normalize(x, 0.9);
  EXPECT_DOUBLE_EQ(x[1], -0.9);
  EXPECT_DOUBLE_EQ(x[0], 0.18);
  std::vector<double> z(4, 0.0);
  peak_normalize(z, 0.9);
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(Pdt1, EncodesTheDocumentedLayout) {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6.5});
  const auto bytes = encode_pdt1(t);
  ASSERT_EQ(bytes.size(), 4u + 4u + 2 * 4u + 6 * 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PDT1");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[12], 3);
  float last = 0.0f;
  std::memcpy(&last, bytes.data() + bytes.size() - 4, 4);
  EXPECT_EQ(last, 6.5f);
}

TEST(Pdt1, RoundTripsThroughFiles) {
  test::TempDir dir;
  const Tensor t({4, 5}, test::gaussian_noise(20, 3));
  write_pdt1(dir / "t.pdt1", t);
  const Tensor back = read_pdt1(dir / "t.pdt1");
  EXPECT_EQ(back.shape, t.shape);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(back.data[i], static_cast<double>(static_cast<float>(t.data[i])));
}

TEST(Pdt1, RejectsBadMagicAndShapeMismatch) {
  auto bytes = encode_pdt1(Tensor({3}, {1, 2, 3}));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_pdt1(bad), DataError);
  bytes.pop_back();
  EXPECT_THROW(decode_pdt1(bytes), DataError);
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), InvalidArgument);
}

TEST(Rng, IsReproducibleAndRoughlyStandardNormal) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng r(7);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(Io, AtomicWriteReplacesContentAndLeavesNoTemporaries) {
  test::TempDir dir;
  write_file_atomic(dir / "f.txt", std::string_view("first"));
  write_file_atomic(dir / "f.txt", std::string_view("second"));
  EXPECT_EQ(read_file_text(dir / "f.txt"), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}

}  // namespace
}  // namespace impactsynth
