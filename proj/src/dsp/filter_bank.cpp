#include "impactsynth/dsp/filter_bank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "dsp/fft.hpp"
#include "impactsynth/common/error.hpp"

namespace impactsynth::dsp {

FilterBank FilterBank::linear(std::size_t num_bands, double sample_rate) {
  if (num_bands == 0) throw InvalidArgument("filter bank needs at least one band");
  if (!(sample_rate > 0.0)) throw InvalidArgument("filter bank sample rate must be positive");
  FilterBank bank;
  bank.sample_rate = sample_rate;
  bank.edges.resize(num_bands + 1);
  const double nyquist = sample_rate / 2.0;
  for (std::size_t m = 0; m <= num_bands; ++m) {
    bank.edges[m] = nyquist * static_cast<double>(m) / static_cast<double>(num_bands);
  }
  bank.edges.back() = nyquist;
  return bank;
}

void FilterBank::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidArgument("filter bank sample rate must be positive");
  if (edges.size() < 2) throw InvalidArgument("filter bank needs at least two band edges");
  const double nyquist = sample_rate / 2.0;
  if (edges.front() != 0.0) throw InvalidArgument("filter bank must start at 0 Hz");
  if (std::abs(edges.back() - nyquist) > 1e-9 * nyquist) {
    throw InvalidArgument("filter bank must end at the Nyquist frequency (" + std::to_string(nyquist) +
                          " Hz)");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw InvalidArgument("filter bank edges must be strictly increasing (edge " + std::to_string(i) + ")");
    }
  }
}

std::size_t FilterBank::band_of(double frequency) const {
  const auto it = std::upper_bound(edges.begin(), edges.end(), frequency);
  const auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(num_bands()) - 1));
}

std::vector<std::vector<double>> bandpass_split(std::span<const double> signal, const FilterBank& bank) {
  bank.validate();
  const std::size_t bands = bank.num_bands();
  std::vector<std::vector<double>> out(bands, std::vector<double>(signal.size(), 0.0));
  if (signal.empty()) return out;

  const std::size_t n = signal.size();
  const detail::RealFft fft(n);
  std::vector<std::complex<double>> spectrum(fft.num_bins());
  fft.forward(signal, spectrum);

  // Contiguous bin ranges per band.
  std::vector<std::size_t> first(bands + 1, fft.num_bins());
  for (std::size_t k = fft.num_bins(); k-- > 0;) {
    const double freq = static_cast<double>(k) * bank.sample_rate / static_cast<double>(n);
    first[bank.band_of(freq)] = k;
  }
  for (std::size_t m = bands; m-- > 0;) first[m] = std::min(first[m], first[m + 1]);

  std::vector<std::complex<double>> masked(fft.num_bins());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t m = 0; m < bands; ++m) {
    if (first[m] == first[m + 1]) continue;
    std::fill(masked.begin(), masked.end(), std::complex<double>{});
    std::copy(spectrum.begin() + static_cast<std::ptrdiff_t>(first[m]),
              spectrum.begin() + static_cast<std::ptrdiff_t>(first[m + 1]),
              masked.begin() + static_cast<std::ptrdiff_t>(first[m]));
    fft.inverse(masked, out[m]);
    for (double& v : out[m]) v *= inv_n;
  }
  return out;
}

}  // namespace impactsynth::dsp
