#include "impactsynth/dsp/griffin_lim.hpp"

#include <cmath>
#include <numbers>

#include "dsp/stft_detail.hpp"
#include "impactsynth/common/error.hpp"
#include "impactsynth/common/rng.hpp"

namespace impactsynth::dsp {

namespace {

// Frame-major linear magnitudes; floored cells become exact zeros.
std::vector<double> linear_magnitudes(const Spectrogram& spec) {
  std::vector<double> mag(spec.num_bins * spec.num_frames);
  for (std::size_t b = 0; b < spec.num_bins; ++b) {
    for (std::size_t f = 0; f < spec.num_frames; ++f) {
      const double db = spec.at(b, f);
      if (!std::isfinite(db)) throw InvalidArgument("griffin_lim: non-finite magnitude");
      mag[f * spec.num_bins + b] = db <= spec.floor_db ? 0.0 : std::pow(10.0, db / 20.0);
    }
  }
  return mag;
}

double convergence_of(std::span<const std::complex<double>> estimate, std::span<const double> target,
                      double target_norm) {
  double num = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = std::abs(estimate[i]) - target[i];
    num += d * d;
  }
  if (target_norm == 0.0) return std::sqrt(num);
  return std::sqrt(num) / target_norm;
}

void check_shape(const Spectrogram& spec) {
  spec.config.validate();
  if (spec.num_frames == 0 || spec.num_bins != spec.config.num_bins() ||
      spec.data.size() != spec.num_bins * spec.num_frames) {
    throw InvalidArgument("griffin_lim: spectrogram shape does not match its STFT configuration");
  }
}

// The STFT of a length-L signal as a linear map, with its exact
// least-squares inverse. Every position of the padded frame span copies one
// signal sample (or is zero past the end of an uncentred signal), so the
// normal equations are diagonal: each sample is the coverage-weighted mean
// of the overlap-added values at the positions that copy it.
class Consistency {
 public:
  Consistency(const StftConfig& config, std::size_t frames, std::size_t length)
      : config_(config), frames_(frames), length_(length), source_(detail::covered_length(config, frames)) {
    const std::size_t pad = config.centered ? config.window_size / 2 : 0;
    for (std::size_t p = 0; p < source_.size(); ++p) {
      const auto i = static_cast<std::ptrdiff_t>(p) - static_cast<std::ptrdiff_t>(pad);
      if (config.centered) {
        source_[p] = static_cast<std::ptrdiff_t>(detail::reflect_index(i, length));
      } else {
        source_[p] = i < static_cast<std::ptrdiff_t>(length) ? i : -1;
      }
    }
  }

  std::vector<double> invert(std::span<const std::complex<double>> coefficients, std::span<const double> window,
                             const detail::RealFft& fft) const {
    std::vector<double> coverage;
    const auto span = detail::overlap_add(coefficients, frames_, config_, window, fft, &coverage);
    std::vector<double> sum(length_, 0.0), weight(length_, 0.0);
    for (std::size_t p = 0; p < source_.size(); ++p) {
      if (source_[p] < 0) continue;
      const auto i = static_cast<std::size_t>(source_[p]);
      sum[i] += span[p] * coverage[p];
      weight[i] += coverage[p];
    }
    for (std::size_t i = 0; i < length_; ++i) sum[i] = weight[i] > 0.0 ? sum[i] / weight[i] : 0.0;
    return sum;
  }

  void analyze(std::span<const double> signal, std::span<const double> window, const detail::RealFft& fft,
               std::span<std::complex<double>> out) const {
    std::vector<double> padded(source_.size(), 0.0);
    for (std::size_t p = 0; p < source_.size(); ++p) {
      if (source_[p] >= 0) padded[p] = signal[static_cast<std::size_t>(source_[p])];
    }
    detail::analyze_frames(padded, frames_, config_, window, fft, out);
  }

 private:
  StftConfig config_;
  std::size_t frames_;
  std::size_t length_;
  std::vector<std::ptrdiff_t> source_;
};

}  // namespace

GriffinLimResult griffin_lim(const Spectrogram& magnitude, const GriffinLimOptions& options) {
  if (options.iterations < 1) throw InvalidArgument("griffin_lim: iterations must be >= 1");
  check_shape(magnitude);
  const StftConfig& config = magnitude.config;
  const std::size_t frames = magnitude.num_frames;
  const auto target = linear_magnitudes(magnitude);
  double target_norm = 0.0;
  for (double m : target) target_norm += m * m;
  target_norm = std::sqrt(target_norm);

  const auto window = hann_window(config.window_size);
  const detail::RealFft fft(config.window_size);
  const std::size_t length = options.length.value_or((frames - 1) * config.hop_size);
  if (length == 0) throw InvalidArgument("griffin_lim: output length must be positive");
  const Consistency consistency(config, frames, length);

  std::vector<std::complex<double>> estimate(target.size());
  Rng rng(options.seed);
  for (std::size_t i = 0; i < target.size(); ++i) {
    estimate[i] = std::polar(target[i], 2.0 * std::numbers::pi * rng.uniform());
  }

  GriffinLimResult result;
  result.convergence.reserve(options.iterations);
  std::vector<std::complex<double>> rebuilt(target.size());
  for (std::size_t it = 0; it < options.iterations; ++it) {
    result.signal = consistency.invert(estimate, window, fft);
    consistency.analyze(result.signal, window, fft, rebuilt);
    result.convergence.push_back(convergence_of(rebuilt, target, target_norm));
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double a = std::abs(rebuilt[i]);
      estimate[i] = a > 0.0 ? rebuilt[i] * (target[i] / a) : std::complex<double>(target[i], 0.0);
    }
  }
  result.signal = consistency.invert(estimate, window, fft);
  return result;
}

GriffinLimResult griffin_lim(const Spectrogram& magnitude, std::size_t iterations) {
  GriffinLimOptions options;
  options.iterations = iterations;
  return griffin_lim(magnitude, options);
}

double spectral_convergence(std::span<const double> signal, const Spectrogram& target) {
  check_shape(target);
  const auto mag = linear_magnitudes(target);
  const auto spec = stft(signal, target.config);
  if (spec.num_frames != target.num_frames) {
    throw InvalidArgument("spectral_convergence: frame count mismatch");
  }
  double norm = 0.0;
  for (double m : mag) norm += m * m;
  return convergence_of(spec.data, mag, std::sqrt(norm));
}

}  // namespace impactsynth::dsp
