#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace impactsynth::dsp {

enum class WindowType { Hann };

/// Short-time Fourier transform layout. Defaults are 44.1 kHz, 2048-sample
/// periodic Hann frames with a 256-sample hop, centered with reflect padding.
struct StftConfig {
  double sample_rate = 44100.0;
  std::size_t window_size = 2048;
  std::size_t hop_size = 256;
  WindowType window = WindowType::Hann;
  bool centered = true;

  /// Throws InvalidArgument unless window_size is a power of two, hop_size
  /// divides it and sample_rate is positive.
  void validate() const;

  std::size_t num_bins() const { return window_size / 2 + 1; }
  /// Frames produced for a signal of `length` samples (0 if it cannot hold one).
  std::size_t num_frames(std::size_t length) const;
  /// Spacing between adjacent bins in Hz.
  double bin_resolution() const { return sample_rate / static_cast<double>(window_size); }
  double bin_frequency(std::size_t bin) const { return static_cast<double>(bin) * bin_resolution(); }
  /// Time in seconds of the centre of `frame`.
  double frame_time(std::size_t frame) const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// Complex STFT grid with D bins and N frames. Coefficients are scaled by
/// 2 / sum(window), so a unit-amplitude sinusoid centred on a bin has
/// magnitude 1 there.
struct ComplexSpectrum {
  StftConfig config;
  std::size_t num_bins = 0;
  std::size_t num_frames = 0;
  /// Length of the analysed signal; istft reproduces this many samples.
  std::size_t signal_length = 0;
  /// Frame-major storage: data[frame * num_bins + bin].
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t bin, std::size_t frame) { return data[frame * num_bins + bin]; }
  const std::complex<double>& at(std::size_t bin, std::size_t frame) const {
    return data[frame * num_bins + bin];
  }
  std::span<const std::complex<double>> frame(std::size_t f) const {
    return {data.data() + f * num_bins, num_bins};
  }
};

inline constexpr double kSilenceDb = -80.0;

/// Log-magnitude spectrogram in dB (reference amplitude 1.0), floored at floor_db.
struct Spectrogram {
  StftConfig config;
  std::size_t num_bins = 0;
  std::size_t num_frames = 0;
  double floor_db = kSilenceDb;
  /// Bin-major storage (D x N row-major): data[bin * num_frames + frame].
  std::vector<double> data;

  double& at(std::size_t bin, std::size_t frame) { return data[bin * num_frames + frame]; }
  double at(std::size_t bin, std::size_t frame) const { return data[bin * num_frames + frame]; }
  std::span<const double> bin_envelope(std::size_t bin) const {
    return {data.data() + bin * num_frames, num_frames};
  }
};

/// Throws on empty input or non-finite samples.
ComplexSpectrum stft(std::span<const double> signal, const StftConfig& config);

/// Least-squares overlap-add inverse. Throws if the window/hop pair leaves
/// output samples uncovered (constant-overlap-add violated).
std::vector<double> istft(const ComplexSpectrum& spectrum);

/// 20 log10 |c| clamped below at floor_db (which must be negative).
Spectrogram log_magnitude(const ComplexSpectrum& spectrum, double floor_db = kSilenceDb);

/// Convenience: log_magnitude(stft(signal, config), floor_db).
Spectrogram log_spectrogram(std::span<const double> signal, const StftConfig& config,
                            double floor_db = kSilenceDb);

}  // namespace impactsynth::dsp
