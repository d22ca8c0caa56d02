#include "impactsynth/modal/edit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impactsynth/common/error.hpp"

namespace impactsynth::modal {

residual::PhysicsPriors edit_modes(const residual::PhysicsPriors& priors, const ModeEdit& edit) {
  const std::size_t count = priors.modes.size();
  if (edit.begin >= edit.end) throw InvalidArgument("edit: empty bin range");
  if (edit.end > count) {
    throw InvalidArgument("edit: bin range ends at " + std::to_string(edit.end) + " but there are only " +
                          std::to_string(count) + " modes");
  }
  if (!std::isfinite(edit.power_delta)) throw InvalidArgument("edit: power delta must be finite");
  if (!(edit.decay_scale >= 0.0) || !std::isfinite(edit.decay_scale)) {
    throw InvalidArgument("edit: decay scale must be finite and non-negative");
  }

  residual::PhysicsPriors out = priors;
  for (std::size_t i = edit.begin; i < edit.end; ++i) {
    Mode& m = out.modes.modes[i];
    if (edit.power_delta != 0.0) m.power = std::clamp(m.power + edit.power_delta, dsp::kSilenceDb, 0.0);
    if (edit.decay_scale != 1.0) m.decay *= edit.decay_scale;
  }
  if (edit.zero_residual) std::fill(out.residual.weights.begin(), out.residual.weights.end(), 0.0);
  return out;
}

}  // namespace impactsynth::modal
