#include "dsp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <unordered_map>

#include "impactsynth/common/error.hpp"

namespace impactsynth::dsp::detail {

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
};

namespace {

struct Scratch {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  explicit Scratch(std::size_t n)
      : real(fftw_alloc_real(n)), spectrum(fftw_alloc_complex(n / 2 + 1)) {}
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
  ~Scratch() {
    fftw_free(real);
    fftw_free(spectrum);
  }
};

Scratch& scratch_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<Scratch>> buffers;
  auto& slot = buffers[n];
  if (!slot) slot = std::make_unique<Scratch>(n);
  return *slot;
}

std::shared_ptr<const FftPlans> plans_for(std::size_t n) {
  // Constructed before the cache so it outlives the cached plans at exit.
  FftPlans::planner_mutex();
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::shared_ptr<const FftPlans>> cache;
  std::lock_guard cache_lock(cache_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  auto plans = std::make_shared<FftPlans>();
  {
    std::lock_guard lock(FftPlans::planner_mutex());
    Scratch tmp(n);
    const int size = static_cast<int>(n);
    plans->forward = fftw_plan_dft_r2c_1d(size, tmp.real, tmp.spectrum, FFTW_ESTIMATE);
    plans->inverse = fftw_plan_dft_c2r_1d(size, tmp.spectrum, tmp.real, FFTW_ESTIMATE);
  }
  if (!plans->forward || !plans->inverse) throw Error("FFTW failed to create a plan");
  cache.emplace(n, plans);
  return plans;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw InvalidArgument("FFT length must be positive");
  plans_ = plans_for(n);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  Scratch& s = scratch_for(n_);
  std::copy_n(in.begin(), n_, s.real);
  fftw_execute_dft_r2c(plans_->forward, s.real, s.spectrum);
  std::memcpy(static_cast<void*>(out.data()), s.spectrum, sizeof(fftw_complex) * num_bins());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  Scratch& s = scratch_for(n_);
  std::memcpy(s.spectrum, in.data(), sizeof(fftw_complex) * num_bins());
  fftw_execute_dft_c2r(plans_->inverse, s.spectrum, s.real);
  std::copy_n(s.real, n_, out.begin());
}

}  // namespace impactsynth::dsp::detail
