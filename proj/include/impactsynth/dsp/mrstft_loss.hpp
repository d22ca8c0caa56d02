#pragma once

#include <memory>
#include <span>
#include <vector>

#include "impactsynth/dsp/stft.hpp"

namespace impactsynth::dsp {

/// Magnitudes are clamped to this value (-100 dB) before division and logs.
inline constexpr double kLossMagnitudeFloor = 1e-5;

/// Windows 512, 1024 and 2048 with hop = window / 4.
std::vector<StftConfig> default_loss_resolutions(double sample_rate = 44100.0);

struct ResolutionTerms {
  double spectral_convergence = 0.0;
  double log_magnitude = 0.0;
};

// Multi-resolution STFT loss against a fixed reference signal. Per
// resolution: spectral convergence || |R| - |C| ||_F / || |R| ||_F plus the
// mean absolute difference of natural-log magnitudes; the total is the sum
// over resolutions. Reference spectra are computed once, which makes repeated
// evaluation (as in residual fitting) cheap.
//
// Evaluation reuses internal scratch buffers: one instance must not be
// called from several threads at once.
class MultiResolutionStftLoss {
 public:
  MultiResolutionStftLoss(std::span<const double> reference, std::vector<StftConfig> resolutions);
  ~MultiResolutionStftLoss();
  MultiResolutionStftLoss(MultiResolutionStftLoss&&) noexcept;
  MultiResolutionStftLoss& operator=(MultiResolutionStftLoss&&) noexcept;

  double operator()(std::span<const double> candidate) const;
  std::vector<ResolutionTerms> terms(std::span<const double> candidate) const;

  std::size_t signal_length() const { return length_; }

 private:
  struct Resolution;
  std::size_t length_ = 0;
  std::vector<std::unique_ptr<Resolution>> resolutions_;
};

/// loss(a, b) with b as the reference. Throws on length mismatch.
double multires_stft_loss(std::span<const double> a, std::span<const double> b,
                          std::span<const StftConfig> resolutions);
double multires_stft_loss(std::span<const double> a, std::span<const double> b);

}  // namespace impactsynth::dsp
