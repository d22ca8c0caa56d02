#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace impactsynth::dsp::detail {

struct FftPlans;

// Real-input FFT of a fixed length backed by FFTW. Plans are created once per
// length behind a mutex and shared; execution goes through per-thread aligned
// scratch buffers, so a RealFft may be used from several threads at once.
// FFTW_ESTIMATE planning keeps results bit-identical from run to run.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t num_bins() const { return n_ / 2 + 1; }

  /// out must hold size()/2 + 1 values. Unnormalized.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;

  /// Inverse of forward() without the 1/n factor. `in` is not modified.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  std::shared_ptr<const FftPlans> plans_;
};

}  // namespace impactsynth::dsp::detail
