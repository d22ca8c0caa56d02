#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "impactsynth/dsp/stft.hpp"

namespace impactsynth::dsp {

struct GriffinLimOptions {
  std::size_t iterations = 60;
  /// Seed for the initial random phase.
  std::uint64_t seed = 0;
  /// Output length in samples; defaults to (frames - 1) * hop.
  std::optional<std::size_t> length;
};

struct GriffinLimResult {
  std::vector<double> signal;
  /// Spectral convergence || |STFT(x_k)| - M ||_F / ||M||_F after each iteration.
  std::vector<double> convergence;
};

/// Recovers a waveform whose STFT magnitude approximates `magnitude`. Values
/// at or below the spectrogram floor are treated as silence (zero magnitude).
/// Each iteration inverts with the exact least-squares inverse of the
/// (reflect-padded) STFT of a signal of the output length, so the
/// convergence trace is non-increasing and its last entry is the spectral
/// convergence of the returned signal.
GriffinLimResult griffin_lim(const Spectrogram& magnitude, const GriffinLimOptions& options = {});

/// Same as above with a plain iteration count.
GriffinLimResult griffin_lim(const Spectrogram& magnitude, std::size_t iterations);

/// Spectral convergence of `signal` against a target spectrogram (same floor rule).
double spectral_convergence(std::span<const double> signal, const Spectrogram& target);

}  // namespace impactsynth::dsp
