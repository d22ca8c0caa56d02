#include "impactsynth/dsp/stft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "dsp/stft_detail.hpp"
#include "impactsynth/common/error.hpp"

namespace impactsynth::dsp {

void StftConfig::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw InvalidArgument("STFT sample rate must be positive");
  }
  if (window_size < 2 || !std::has_single_bit(window_size)) {
    throw InvalidArgument("STFT window size must be a power of two >= 2 (got " +
                          std::to_string(window_size) + ")");
  }
  if (hop_size == 0 || window_size % hop_size != 0) {
    throw InvalidArgument("STFT hop size must divide the window size (got hop " +
                          std::to_string(hop_size) + ", window " + std::to_string(window_size) + ")");
  }
}

std::size_t StftConfig::num_frames(std::size_t length) const {
  if (centered) return length / hop_size + 1;
  if (length < window_size) return 0;
  return (length - window_size) / hop_size + 1;
}

double StftConfig::frame_time(std::size_t frame) const {
  const double offset = centered ? 0.0 : static_cast<double>(window_size) / 2.0;
  return (static_cast<double>(frame * hop_size) + offset) / sample_rate;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

namespace detail {

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(n)) r = period - r;
  return static_cast<std::size_t>(r);
}

std::vector<double> pad_for_frames(std::span<const double> signal, const StftConfig& config) {
  if (!config.centered) return {signal.begin(), signal.end()};
  const std::size_t pad = config.window_size / 2;
  std::vector<double> padded(signal.size() + 2 * pad);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    const auto src = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    padded[i] = signal[reflect_index(src, signal.size())];
  }
  return padded;
}

double amplitude_scale(std::span<const double> window) {
  return 2.0 / std::accumulate(window.begin(), window.end(), 0.0);
}

void analyze_frames(std::span<const double> padded, std::size_t num_frames, const StftConfig& config,
                    std::span<const double> window, const RealFft& fft,
                    std::span<std::complex<double>> out) {
  const std::size_t n = config.window_size;
  const std::size_t bins = config.num_bins();
  const double scale = amplitude_scale(window);
  std::vector<double> frame(n);
  for (std::size_t f = 0; f < num_frames; ++f) {
    const double* src = padded.data() + f * config.hop_size;
    for (std::size_t i = 0; i < n; ++i) frame[i] = src[i] * window[i];
    auto dst = out.subspan(f * bins, bins);
    fft.forward(frame, dst);
    for (auto& c : dst) c *= scale;
  }
}

std::vector<double> overlap_add(std::span<const std::complex<double>> frames, std::size_t num_frames,
                                const StftConfig& config, std::span<const double> window,
                                const RealFft& fft, std::vector<double>* coverage) {
  const std::size_t n = config.window_size;
  const std::size_t bins = config.num_bins();
  const double unscale = 1.0 / (amplitude_scale(window) * static_cast<double>(n));
  const std::size_t length = covered_length(config, num_frames);
  std::vector<double> out(length, 0.0);
  std::vector<double> norm(length, 0.0);
  std::vector<double> frame(n);
  for (std::size_t f = 0; f < num_frames; ++f) {
    fft.inverse(frames.subspan(f * bins, bins), frame);
    double* dst = out.data() + f * config.hop_size;
    double* nrm = norm.data() + f * config.hop_size;
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] += frame[i] * unscale * window[i];
      nrm[i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = norm[i] > 0.0 ? out[i] / norm[i] : 0.0;
  }
  if (coverage) *coverage = std::move(norm);
  return out;
}

}  // namespace detail

ComplexSpectrum stft(std::span<const double> signal, const StftConfig& config) {
  config.validate();
  if (signal.empty()) throw InvalidArgument("stft: signal is empty");
  for (double v : signal) {
    if (!std::isfinite(v)) throw InvalidArgument("stft: signal contains non-finite samples");
  }
  const std::size_t frames = config.num_frames(signal.size());
  if (frames == 0) {
    throw InvalidArgument("stft: signal of " + std::to_string(signal.size()) +
                          " samples is shorter than one frame");
  }
  ComplexSpectrum spec;
  spec.config = config;
  spec.num_bins = config.num_bins();
  spec.num_frames = frames;
  spec.signal_length = signal.size();
  spec.data.resize(spec.num_bins * frames);

  const auto window = hann_window(config.window_size);
  const detail::RealFft fft(config.window_size);
  const auto padded = detail::pad_for_frames(signal, config);
  detail::analyze_frames(padded, frames, config, window, fft, spec.data);
  return spec;
}

std::vector<double> istft(const ComplexSpectrum& spectrum) {
  const StftConfig& config = spectrum.config;
  config.validate();
  if (spectrum.num_frames == 0) throw InvalidArgument("istft: spectrum has no frames");
  if (spectrum.num_bins != config.num_bins() ||
      spectrum.data.size() != spectrum.num_bins * spectrum.num_frames) {
    throw InvalidArgument("istft: spectrum shape does not match its STFT configuration");
  }
  const auto window = hann_window(config.window_size);
  const detail::RealFft fft(config.window_size);
  std::vector<double> coverage;
  auto full = detail::overlap_add(spectrum.data, spectrum.num_frames, config, window, fft, &coverage);

  const std::size_t offset = config.centered ? config.window_size / 2 : 0;
  const std::size_t length = spectrum.signal_length;
  if (offset + length > full.size()) {
    throw InvalidArgument("istft: signal length exceeds the span covered by the frames");
  }
  const double peak = *std::max_element(coverage.begin(), coverage.end());
  for (std::size_t i = offset; i < offset + length; ++i) {
    if (coverage[i] <= 1e-10 * peak) {
      throw InvalidArgument("istft: window/hop pair violates constant overlap-add (hop " +
                            std::to_string(config.hop_size) + ", window " +
                            std::to_string(config.window_size) + ")");
    }
  }
  return {full.begin() + static_cast<std::ptrdiff_t>(offset),
          full.begin() + static_cast<std::ptrdiff_t>(offset + length)};
}

Spectrogram log_magnitude(const ComplexSpectrum& spectrum, double floor_db) {
  if (!(floor_db < 0.0)) throw InvalidArgument("log_magnitude: floor_db must be negative");
  Spectrogram out;
  out.config = spectrum.config;
  out.num_bins = spectrum.num_bins;
  out.num_frames = spectrum.num_frames;
  out.floor_db = floor_db;
  out.data.resize(spectrum.num_bins * spectrum.num_frames);
  for (std::size_t f = 0; f < spectrum.num_frames; ++f) {
    for (std::size_t b = 0; b < spectrum.num_bins; ++b) {
      const double mag = std::abs(spectrum.at(b, f));
      const double db = mag > 0.0 ? 20.0 * std::log10(mag) : floor_db;
      out.at(b, f) = std::max(db, floor_db);
    }
  }
  return out;
}

Spectrogram log_spectrogram(std::span<const double> signal, const StftConfig& config, double floor_db) {
  return log_magnitude(stft(signal, config), floor_db);
}

}  // namespace impactsynth::dsp
