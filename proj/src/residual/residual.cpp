#include "impactsynth/residual/residual.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/rng.hpp"

namespace impactsynth::residual {

void ResidualParams::validate() const {
  bank.validate();
  const std::size_t m = bank.num_bands();
  if (gamma.size() != m || weights.size() != m) {
    throw InvalidArgument("residual has " + std::to_string(gamma.size()) + " decays and " +
                          std::to_string(weights.size()) + " weights for " + std::to_string(m) + " bands");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(gamma[i] >= 0.0) || !std::isfinite(gamma[i])) {
      throw InvalidArgument("residual decay " + std::to_string(i) + " must be non-negative");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw InvalidArgument("residual weight " + std::to_string(i) + " must be non-negative");
    }
  }
}

ResidualParams ResidualParams::zeros(std::size_t num_bands, double sample_rate, std::uint64_t seed) {
  ResidualParams p;
  p.bank = dsp::FilterBank::linear(num_bands, sample_rate);
  p.gamma.assign(num_bands, 0.0);
  p.weights.assign(num_bands, 0.0);
  p.noise_seed = seed;
  return p;
}

std::vector<std::vector<double>> band_noise(const dsp::FilterBank& bank, std::uint64_t seed, std::size_t length) {
  std::vector<double> noise(length);
  Rng rng(seed);
  rng.fill_normal(noise);
  return dsp::bandpass_split(noise, bank);
}

std::vector<double> synthesize_residual(const ResidualParams& params, double duration, double sample_rate) {
  params.validate();
  if (params.bank.sample_rate != sample_rate) {
    throw InvalidArgument("residual filter bank is defined for " + std::to_string(params.bank.sample_rate) +
                          " Hz, not " + std::to_string(sample_rate) + " Hz");
  }
  const std::size_t n = modal::sample_count(duration, sample_rate);
  std::vector<double> out(n, 0.0);
  bool any = false;
  for (double w : params.weights) any = any || w != 0.0;
  if (!any) return out;

  const auto bands = band_noise(params.bank, params.noise_seed, n);
  const double db_to_ln = std::numbers::ln10 / 20.0;
  for (std::size_t m = 0; m < bands.size(); ++m) {
    const double w = params.weights[m];
    if (w == 0.0) continue;
    const double rate = params.gamma[m] * db_to_ln / sample_rate;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += w * std::exp(-rate * static_cast<double>(i)) * bands[m][i];
    }
  }
  return out;
}

}  // namespace impactsynth::residual
