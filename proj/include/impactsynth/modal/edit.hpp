#pragma once

#include <cstddef>

#include "impactsynth/residual/priors.hpp"

namespace impactsynth::modal {

struct ModeEdit {
  /// Half-open bin range [begin, end).
  std::size_t begin = 0;
  std::size_t end = 0;
  double power_delta = 0.0;  ///< dB added to p, result clamped to [-80, 0]
  double decay_scale = 1.0;  ///< multiplies lambda
  bool zero_residual = false;
};

/// Applies `edit` to the modes in its range; every other field is copied.
/// Throws InvalidArgument for an empty or out-of-range bin range or a
/// negative decay scale.
residual::PhysicsPriors edit_modes(const residual::PhysicsPriors& priors, const ModeEdit& edit);

}  // namespace impactsynth::modal
