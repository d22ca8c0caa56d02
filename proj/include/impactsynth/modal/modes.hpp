#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "impactsynth/dsp/stft.hpp"

namespace impactsynth::modal {

/// One damped sinusoid: 10^((power - decay * t) / 20) * sin(2 pi frequency t).
struct Mode {
  double frequency = 0.0;  ///< Hz, inside its bin's range and below Nyquist
  double power = dsp::kSilenceDb;  ///< initial level in dB re unit amplitude, in [-80, 0]
  double decay = 0.0;  ///< dB per second, >= 0

  friend bool operator==(const Mode&, const Mode&) = default;
};

/// One mode per STFT frequency bin, ordered by bin index.
struct ModeSet {
  std::vector<Mode> modes;
  dsp::StftConfig stft;

  std::size_t size() const { return modes.size(); }

  /// Checks the count against the bin count and every mode against its bin range.
  void validate() const;

  friend bool operator==(const ModeSet&, const ModeSet&) = default;
};

/// Lower and upper frequency of bin i: [centre - res/2, centre + res/2).
struct BinRange {
  double low = 0.0;
  double high = 0.0;
};
BinRange bin_range(const dsp::StftConfig& config, std::size_t bin);

/// A ModeSet of silent modes, each sitting on its bin centre (bin 0 at a
/// quarter bin above DC so that the frequency stays positive).
ModeSet silent_modes(const dsp::StftConfig& config);

/// True when every mode is at the silence floor.
bool is_silent(const ModeSet& modes);

struct NormalizedModeSet {
  std::vector<double> frequency;  ///< offset from bin centre in half-bin units
  std::vector<double> power;      ///< 2p / (-80) - 1
  std::vector<double> decay;      ///< min-max over the set, mapped to [-1, 1]
};

/// Clip-level estimation. `clip` starts at the impact; the returned set has
/// config.num_bins() modes. Frequencies come from the whole-clip spectrum
/// peak inside each bin, power and decay from a line fit to the bin's dB
/// envelope. A bin whose only energy is the skirt of a peak in a
/// neighbouring bin is left at the floor. Throws InvalidArgument if the clip
/// is shorter than one analysis window.
ModeSet estimate_modes(std::span<const double> clip, const dsp::StftConfig& config);

/// Sum of all modes, sample_rate * duration samples long. Modes at the
/// silence floor are skipped.
std::vector<double> synthesize_modes(const ModeSet& modes, double duration, double sample_rate);

/// Number of samples synthesize_* produce for a duration.
std::size_t sample_count(double duration, double sample_rate);

NormalizedModeSet normalize_modes(const ModeSet& modes);

}  // namespace impactsynth::modal
