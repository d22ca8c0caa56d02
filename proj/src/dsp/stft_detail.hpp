#pragma once

#include <complex>
#include <span>
#include <vector>

#include "dsp/fft.hpp"
#include "impactsynth/dsp/stft.hpp"

namespace impactsynth::dsp::detail {

/// Maps an arbitrary index onto [0, n) by repeated mirror reflection
/// (numpy "reflect" semantics: the edge sample is not repeated).
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// Signal as seen by the framing step: reflect-padded by window/2 on both
/// sides when centered, unchanged otherwise.
std::vector<double> pad_for_frames(std::span<const double> signal, const StftConfig& config);

/// Length of the padded signal covered by `num_frames` frames.
inline std::size_t covered_length(const StftConfig& config, std::size_t num_frames) {
  return (num_frames - 1) * config.hop_size + config.window_size;
}

/// Windowed, amplitude-normalised FFT of each frame of an already padded
/// signal. `out` is frame-major, num_frames * num_bins.
void analyze_frames(std::span<const double> padded, std::size_t num_frames, const StftConfig& config,
                    std::span<const double> window, const RealFft& fft,
                    std::span<std::complex<double>> out);

/// Least-squares overlap-add of frame-major coefficients into a signal of
/// covered_length() samples. Samples with zero window coverage are set to 0.
/// The per-sample sum of squared windows is returned through `coverage`.
std::vector<double> overlap_add(std::span<const std::complex<double>> frames, std::size_t num_frames,
                                const StftConfig& config, std::span<const double> window,
                                const RealFft& fft, std::vector<double>* coverage = nullptr);

/// 2 / sum(window): the factor that maps a unit sinusoid to unit magnitude.
double amplitude_scale(std::span<const double> window);

}  // namespace impactsynth::dsp::detail
