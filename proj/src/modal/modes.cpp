#include "impactsynth/modal/modes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "impactsynth/common/error.hpp"

namespace impactsynth::modal {

namespace {

// Modes whose initial amplitude is below 10^(-80/20) = 1e-4 are not rendered.
constexpr double kMinAmplitude = 1e-4;

}  // namespace

BinRange bin_range(const dsp::StftConfig& config, std::size_t bin) {
  const double res = config.bin_resolution();
  const double centre = config.bin_frequency(bin);
  return {centre - res / 2.0, centre + res / 2.0};
}

void ModeSet::validate() const {
  stft.validate();
  if (modes.size() != stft.num_bins()) {
    throw InvalidArgument("mode set has " + std::to_string(modes.size()) + " modes, expected " +
                          std::to_string(stft.num_bins()));
  }
  const double nyquist = stft.sample_rate / 2.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Mode& m = modes[i];
    const BinRange r = bin_range(stft, i);
    if (!(m.frequency > 0.0 && m.frequency < nyquist && m.frequency >= r.low && m.frequency < r.high)) {
      throw InvalidArgument("mode " + std::to_string(i) + " frequency " + std::to_string(m.frequency) +
                            " Hz lies outside its bin");
    }
    if (!(m.power <= 0.0 && m.power >= dsp::kSilenceDb)) {
      throw InvalidArgument("mode " + std::to_string(i) + " power must lie in [-80, 0] dB");
    }
    if (!(m.decay >= 0.0) || !std::isfinite(m.decay)) {
      throw InvalidArgument("mode " + std::to_string(i) + " decay must be non-negative");
    }
  }
}

ModeSet silent_modes(const dsp::StftConfig& config) {
  config.validate();
  ModeSet set;
  set.stft = config;
  set.modes.resize(config.num_bins());
  for (std::size_t i = 0; i < set.modes.size(); ++i) {
    double f = config.bin_frequency(i);
    if (i == 0) f = config.bin_resolution() / 4.0;
    if (i + 1 == set.modes.size()) f -= config.bin_resolution() / 4.0;
    set.modes[i] = Mode{f, dsp::kSilenceDb, 0.0};
  }
  return set;
}

bool is_silent(const ModeSet& modes) {
  return std::all_of(modes.modes.begin(), modes.modes.end(),
                     [](const Mode& m) { return m.power <= dsp::kSilenceDb; });
}

std::size_t sample_count(double duration, double sample_rate) {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidArgument("duration must be positive");
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::vector<double> synthesize_modes(const ModeSet& modes, double duration, double sample_rate) {
  const std::size_t n = sample_count(duration, sample_rate);
  std::vector<double> out(n, 0.0);
  const double db_to_ln = std::numbers::ln10 / 20.0;
  constexpr std::size_t kResync = 512;
  for (const Mode& m : modes.modes) {
    if (m.power <= dsp::kSilenceDb) continue;
    const double amplitude = std::pow(10.0, m.power / 20.0);
    if (amplitude < kMinAmplitude) continue;
    const double omega = 2.0 * std::numbers::pi * m.frequency / sample_rate;
    const double rate = m.decay * db_to_ln / sample_rate;
    // Rotate a decaying phasor; re-seed it from exp/polar every kResync
    // samples to keep rounding drift negligible.
    const std::complex<double> step = std::polar(std::exp(-rate), omega);
    for (std::size_t start = 0; start < n; start += kResync) {
      const double k0 = static_cast<double>(start);
      std::complex<double> z = std::polar(amplitude * std::exp(-rate * k0), omega * k0);
      const std::size_t stop = std::min(n, start + kResync);
      for (std::size_t i = start; i < stop; ++i) {
        out[i] += z.imag();
        z *= step;
      }
    }
  }
  return out;
}

NormalizedModeSet normalize_modes(const ModeSet& modes) {
  NormalizedModeSet out;
  const std::size_t n = modes.modes.size();
  out.frequency.resize(n);
  out.power.resize(n);
  out.decay.resize(n);
  const double half_res = modes.stft.bin_resolution() / 2.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Mode& m : modes.modes) {
    lo = std::min(lo, m.decay);
    hi = std::max(hi, m.decay);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Mode& m = modes.modes[i];
    out.frequency[i] = std::clamp((m.frequency - modes.stft.bin_frequency(i)) / half_res, -1.0, 1.0);
    out.power[i] = std::clamp(2.0 * m.power / dsp::kSilenceDb - 1.0, -1.0, 1.0);
    out.decay[i] = hi > lo ? 2.0 * (m.decay - lo) / (hi - lo) - 1.0 : 0.0;
  }
  return out;
}

}  // namespace impactsynth::modal
