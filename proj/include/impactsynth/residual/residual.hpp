#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "impactsynth/dsp/filter_bank.hpp"
#include "impactsynth/dsp/mrstft_loss.hpp"
#include "impactsynth/dsp/stft.hpp"
#include "impactsynth/modal/modes.hpp"

namespace impactsynth::residual {

/// Exponentially decaying band-filtered noise: band m contributes
/// weights[m] * 10^(-gamma[m] t / 20) * BPF_m(noise).
struct ResidualParams {
  std::vector<double> gamma;    ///< dB per second, >= 0
  std::vector<double> weights;  ///< >= 0
  dsp::FilterBank bank;
  std::uint64_t noise_seed = 0;

  std::size_t num_bands() const { return bank.num_bands(); }
  void validate() const;

  /// All-zero residual over a linear bank of `num_bands` bands.
  static ResidualParams zeros(std::size_t num_bands, double sample_rate, std::uint64_t seed = 0);

  friend bool operator==(const ResidualParams&, const ResidualParams&) = default;
};

/// Band-split unit Gaussian noise for a seed (one row per band).
std::vector<std::vector<double>> band_noise(const dsp::FilterBank& bank, std::uint64_t seed, std::size_t length);

std::vector<double> synthesize_residual(const ResidualParams& params, double duration, double sample_rate);

struct FitOptions {
  /// Coordinate-descent sweeps over all band parameters.
  std::size_t max_iterations = 200;
  /// Stop once a sweep improves the loss by less than this fraction.
  double tolerance = 1e-3;
  std::size_t num_bands = 100;
  std::uint64_t noise_seed = 0;
  std::vector<dsp::StftConfig> resolutions = dsp::default_loss_resolutions();
};

struct ResidualFit {
  ResidualParams params;
  double loss = 0.0;             ///< loss of modes + fitted residual
  double modes_only_loss = 0.0;  ///< loss with all weights zero
  double init_loss = 0.0;        ///< loss at the closed-form initialisation
  std::size_t iterations = 0;
  /// Objective after initialisation and after every sweep (non-increasing).
  std::vector<double> history;
  enum class Source { Optimized, ClosedForm, Zero } source = Source::Optimized;
};

/// Fits the residual so that synthesize_modes(modes) + residual matches
/// `target` under the multi-resolution STFT loss. Starts from `init` when
/// given, otherwise from a per-band line fit to the residual log envelope.
ResidualFit fit_residual(std::span<const double> target, const modal::ModeSet& modes,
                         const std::optional<ResidualParams>& init = std::nullopt,
                         const FitOptions& options = {});

}  // namespace impactsynth::residual
