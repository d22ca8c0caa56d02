#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace impactsynth::dsp {

/// Brickwall band partition of [0, sample_rate/2]. Band m covers
/// [edges[m], edges[m+1]); the last band also owns the Nyquist frequency.
struct FilterBank {
  double sample_rate = 44100.0;
  std::vector<double> edges;

  std::size_t num_bands() const { return edges.empty() ? 0 : edges.size() - 1; }

  /// M equal-width bands spanning 0 .. sample_rate/2.
  static FilterBank linear(std::size_t num_bands, double sample_rate);

  /// Edges must start at 0, end at sample_rate/2 and be strictly increasing.
  void validate() const;

  /// Band index owning `frequency` (clamped to the covered range).
  std::size_t band_of(double frequency) const;

  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

/// Splits `signal` into num_bands() band signals by masking its full-length
/// FFT. The bands are disjoint in frequency, so they sum back to the input
/// and their energies add up to the input energy.
std::vector<std::vector<double>> bandpass_split(std::span<const double> signal, const FilterBank& bank);

}  // namespace impactsynth::dsp
