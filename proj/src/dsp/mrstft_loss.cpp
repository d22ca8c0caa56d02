#include "impactsynth/dsp/mrstft_loss.hpp"

#include <cmath>
#include <string>

#include "dsp/stft_detail.hpp"
#include "impactsynth/common/error.hpp"

namespace impactsynth::dsp {

namespace {

constexpr double kFloorPower = kLossMagnitudeFloor * kLossMagnitudeFloor;

}  // namespace

struct MultiResolutionStftLoss::Resolution {
  StftConfig config;
  std::vector<double> window;
  detail::RealFft fft;
  std::size_t frames = 0;
  std::vector<double> ref_mag;
  std::vector<double> ref_log;
  double ref_norm = 0.0;
  mutable std::vector<double> padded;
  mutable std::vector<std::complex<double>> spectrum;

  Resolution(const StftConfig& cfg, std::size_t length)
      : config(cfg), window(hann_window(cfg.window_size)), fft(cfg.window_size),
        frames(cfg.num_frames(length)) {
    if (frames == 0) {
      throw InvalidArgument("multires_stft_loss: signal too short for window " +
                            std::to_string(cfg.window_size));
    }
    spectrum.resize(frames * cfg.num_bins());
  }

  void transform(std::span<const double> signal) const {
    padded = detail::pad_for_frames(signal, config);
    detail::analyze_frames(padded, frames, config, window, fft, spectrum);
  }
};

std::vector<StftConfig> default_loss_resolutions(double sample_rate) {
  std::vector<StftConfig> out;
  for (std::size_t w : {512, 1024, 2048}) {
    StftConfig c;
    c.sample_rate = sample_rate;
    c.window_size = w;
    c.hop_size = w / 4;
    out.push_back(c);
  }
  return out;
}

MultiResolutionStftLoss::MultiResolutionStftLoss(std::span<const double> reference,
                                                 std::vector<StftConfig> resolutions)
    : length_(reference.size()) {
  if (reference.empty()) throw InvalidArgument("multires_stft_loss: empty signal");
  if (resolutions.empty()) throw InvalidArgument("multires_stft_loss: no resolutions given");
  for (double v : reference) {
    if (!std::isfinite(v)) throw InvalidArgument("multires_stft_loss: non-finite samples");
  }
  for (const auto& cfg : resolutions) {
    cfg.validate();
    auto res = std::make_unique<Resolution>(cfg, length_);
    res->transform(reference);
    res->ref_mag.resize(res->spectrum.size());
    res->ref_log.resize(res->spectrum.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < res->spectrum.size(); ++i) {
      const double power = std::max(std::norm(res->spectrum[i]), kFloorPower);
      res->ref_mag[i] = std::sqrt(power);
      res->ref_log[i] = 0.5 * std::log(power);
      norm += power;
    }
    res->ref_norm = std::sqrt(norm);
    resolutions_.push_back(std::move(res));
  }
}

MultiResolutionStftLoss::~MultiResolutionStftLoss() = default;
MultiResolutionStftLoss::MultiResolutionStftLoss(MultiResolutionStftLoss&&) noexcept = default;
MultiResolutionStftLoss& MultiResolutionStftLoss::operator=(MultiResolutionStftLoss&&) noexcept = default;

std::vector<ResolutionTerms> MultiResolutionStftLoss::terms(std::span<const double> candidate) const {
  if (candidate.size() != length_) {
    throw InvalidArgument("multires_stft_loss: length mismatch (" + std::to_string(candidate.size()) +
                          " vs " + std::to_string(length_) + ")");
  }
  std::vector<ResolutionTerms> out;
  out.reserve(resolutions_.size());
  for (const auto& res : resolutions_) {
    res->transform(candidate);
    double diff_sq = 0.0;
    double log_abs = 0.0;
    const std::size_t count = res->spectrum.size();
    for (std::size_t i = 0; i < count; ++i) {
      const double power = std::max(std::norm(res->spectrum[i]), kFloorPower);
      const double d = res->ref_mag[i] - std::sqrt(power);
      diff_sq += d * d;
      log_abs += std::abs(res->ref_log[i] - 0.5 * std::log(power));
    }
    out.push_back({std::sqrt(diff_sq) / res->ref_norm, log_abs / static_cast<double>(count)});
  }
  return out;
}

double MultiResolutionStftLoss::operator()(std::span<const double> candidate) const {
  double total = 0.0;
  for (const auto& t : terms(candidate)) total += t.spectral_convergence + t.log_magnitude;
  return total;
}

double multires_stft_loss(std::span<const double> a, std::span<const double> b,
                          std::span<const StftConfig> resolutions) {
  if (a.size() != b.size()) {
    throw InvalidArgument("multires_stft_loss: length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  return MultiResolutionStftLoss(b, {resolutions.begin(), resolutions.end()})(a);
}

double multires_stft_loss(std::span<const double> a, std::span<const double> b) {
  const auto res = default_loss_resolutions();
  return multires_stft_loss(a, b, res);
}

}  // namespace impactsynth::dsp
