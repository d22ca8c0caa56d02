#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "dsp/fft.hpp"
#include "impactsynth/common/error.hpp"
#include "impactsynth/modal/modes.hpp"

namespace impactsynth::modal {

namespace {

constexpr double kSilence = dsp::kSilenceDb;
constexpr double kTinyMagnitude = 1e-15;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

// Whole-clip magnitude spectrum in dB, zero-padded to a power of two at
// least twice the clip length. The clip is faded out with a falling half
// Hann window; cutting a ringing mode off at the clip end would otherwise
// put ripple peaks into the neighbouring bins.
struct ClipSpectrum {
  std::vector<double> db;
  double spacing = 0.0;  // Hz between entries
};

ClipSpectrum clip_spectrum(std::span<const double> clip, double sample_rate) {
  const std::size_t nfft = std::bit_ceil(clip.size()) * 2;
  std::vector<double> padded(nfft, 0.0);
  const double n = static_cast<double>(clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) {
    padded[i] = clip[i] * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(i) / n));
  }
  const dsp::detail::RealFft fft(nfft);
  std::vector<std::complex<double>> spectrum(fft.num_bins());
  fft.forward(padded, spectrum);
  ClipSpectrum out;
  out.spacing = sample_rate / static_cast<double>(nfft);
  out.db.resize(spectrum.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    out.db[k] = 20.0 * std::log10(std::max(std::abs(spectrum[k]), 1e-300));
  }
  return out;
}

struct Peak {
  double frequency = 0.0;
  /// False when the refined peak lies in a neighbouring bin: the energy in
  /// this bin is leakage from a mode there.
  bool local = true;
};

// Strongest FFT peak inside the bin's frequency range, refined by fitting a
// parabola through the log magnitudes around it.
Peak peak_frequency(const ClipSpectrum& spec, const dsp::StftConfig& config, std::size_t bin) {
  const double nyquist = config.sample_rate / 2.0;
  const BinRange range = bin_range(config, bin);
  const double low = std::max(range.low, 0.0);
  const double high = std::min(range.high, nyquist);
  const double res = config.bin_resolution();
  const double f_min = std::max(low, 1e-3 * res);
  const double f_max = high - 1e-9 * res;

  const auto last = static_cast<std::ptrdiff_t>(spec.db.size()) - 1;
  const auto k_lo = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(low / spec.spacing)), 0, last);
  const auto k_hi = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(high / spec.spacing)) - 1, 0, last);
  if (k_lo > k_hi) return {std::clamp(config.bin_frequency(bin), f_min, f_max), true};

  std::ptrdiff_t best = k_lo;
  for (std::ptrdiff_t k = k_lo + 1; k <= k_hi; ++k) {
    if (spec.db[static_cast<std::size_t>(k)] > spec.db[static_cast<std::size_t>(best)]) best = k;
  }
  const auto db = [&](std::ptrdiff_t k) { return spec.db[static_cast<std::size_t>(k)]; };
  // A maximum on the range edge may belong to a peak just outside it.
  if (best == k_lo) {
    while (best > 0 && db(best - 1) > db(best)) --best;
  }
  if (best == k_hi) {
    while (best < last && db(best + 1) > db(best)) ++best;
  }
  double offset = 0.0;
  if (best > 0 && best < last) {
    const double a = db(best - 1), b = db(best), c = db(best + 1);
    const double curvature = a - 2.0 * b + c;
    if (curvature < 0.0) offset = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
  }
  const double f = (static_cast<double>(best) + offset) * spec.spacing;
  return {std::clamp(f, f_min, f_max), f >= low && f < high};
}

// Gain (dB) the analysis window applies to a decaying sinusoid that sits
// `offset_bins` away from the bin centre: the frame magnitude equals the
// envelope at the frame centre times this gain.
double window_gain_db(std::span<const double> window, double sample_rate, double offset_bins, double decay) {
  const std::size_t n = window.size();
  const double rate = decay * std::numbers::ln10 / 20.0 / sample_rate;
  const std::complex<double> step =
      std::exp(std::complex<double>(-rate, 2.0 * std::numbers::pi * offset_bins / static_cast<double>(n)));
  std::complex<double> term = std::exp(rate * static_cast<double>(n) / 2.0);
  std::complex<double> acc{};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += window[i] * term;
    term *= step;
    sum += window[i];
  }
  return 20.0 * std::log10(std::abs(acc) / sum);
}

}  // namespace

ModeSet estimate_modes(std::span<const double> clip, const dsp::StftConfig& config) {
  config.validate();
  if (clip.size() < config.window_size) {
    throw InvalidArgument("estimate_modes: clip of " + std::to_string(clip.size()) +
                          " samples is shorter than one analysis window (" +
                          std::to_string(config.window_size) + ")");
  }
  const auto spec = dsp::stft(clip, config);
  const ClipSpectrum whole = clip_spectrum(clip, config.sample_rate);
  const auto window = dsp::hann_window(config.window_size);
  const std::size_t frames = spec.num_frames;
  const double res = config.bin_resolution();

  // Frames whose window lies entirely inside the clip; the reflect-padded
  // edge frames mix in a mirrored copy of the onset and are not used for the
  // envelope fit.
  std::size_t first_clean = 0;
  std::size_t last_clean = frames - 1;
  if (config.centered) {
    const std::size_t half = config.window_size / 2;
    first_clean = (half + config.hop_size - 1) / config.hop_size;
    last_clean = clip.size() >= half ? std::min(frames - 1, (clip.size() - half) / config.hop_size) : 0;
  }

  ModeSet out;
  out.stft = config;
  out.modes.resize(spec.num_bins);
  std::vector<double> env(frames);
  std::vector<double> times(frames);
  for (std::size_t f = 0; f < frames; ++f) times[f] = config.frame_time(f);

  for (std::size_t bin = 0; bin < spec.num_bins; ++bin) {
    Mode& mode = out.modes[bin];
    const Peak peak = peak_frequency(whole, config, bin);
    mode.frequency = peak.frequency;
    if (!peak.local) {
      mode.power = kSilence;
      mode.decay = 0.0;
      continue;
    }
    const double offset = (mode.frequency - config.bin_frequency(bin)) / res;
    for (std::size_t f = 0; f < frames; ++f) {
      env[f] = 20.0 * std::log10(std::max(std::abs(spec.at(bin, f)), kTinyMagnitude));
    }

    // First clean frame at or below the silence floor.
    std::size_t silent = last_clean + 1;
    for (std::size_t f = first_clean; f <= last_clean && first_clean <= last_clean; ++f) {
      if (env[f] <= kSilence) {
        silent = f;
        break;
      }
    }
    const std::size_t fit_end = std::min(silent, last_clean + 1);
    double power = kSilence;
    double decay = 0.0;
    if (first_clean <= last_clean && fit_end >= first_clean + 2) {
      const std::span<const double> xs(times.data() + first_clean, fit_end - first_clean);
      const std::span<const double> ys(env.data() + first_clean, fit_end - first_clean);
      const LineFit line = fit_line(xs, ys);
      const double fitted_decay = std::max(0.0, -line.slope);
      const double gain = window_gain_db(window, config.sample_rate, offset, fitted_decay);
      power = line.intercept - gain;
      decay = fitted_decay;
      if (silent <= last_clean) {
        // Silence-crossing time, interpolated on the gain-corrected envelope.
        const double a = env[silent - 1] - gain;
        const double b = env[silent] - gain;
        if (a > b) {
          const double dt = times[silent] - times[silent - 1];
          const double crossing = times[silent - 1] + (a - kSilence) / (a - b) * dt;
          if (crossing > 0.0 && power > kSilence) decay = (power - kSilence) / crossing;
        }
      }
    } else {
      // Too few usable frames: take the loudest early frame as the onset
      // level and the first silent frame after it as the decay time.
      const std::size_t early = std::min(first_clean, frames - 1);
      std::size_t loudest = 0;
      for (std::size_t f = 1; f <= early; ++f) {
        if (env[f] > env[loudest]) loudest = f;
      }
      power = env[loudest] - window_gain_db(window, config.sample_rate, offset, 0.0);
      for (std::size_t f = loudest + 1; f < frames; ++f) {
        if (env[f] <= kSilence) {
          const double elapsed = std::max(times[f], config.hop_size / config.sample_rate);
          decay = std::max(0.0, (power - kSilence) / elapsed);
          break;
        }
      }
    }
    if (!std::isfinite(power) || power <= kSilence) {
      mode.power = kSilence;
      mode.decay = 0.0;
    } else {
      mode.power = std::min(power, 0.0);
      mode.decay = std::isfinite(decay) ? std::max(decay, 0.0) : 0.0;
    }
  }
  return out;
}

}  // namespace impactsynth::modal
