#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "impactsynth/modal/modes.hpp"
#include "impactsynth/residual/residual.hpp"

namespace impactsynth::residual {

/// Everything needed to re-synthesize, edit and encode one impact sound.
struct PhysicsPriors {
  modal::ModeSet modes;
  ResidualParams residual;
  /// Clip length in seconds; resynthesis uses it when no duration is given.
  double duration = 0.25;

  void validate() const;
  friend bool operator==(const PhysicsPriors&, const PhysicsPriors&) = default;
};

inline constexpr int kPriorsVersion = 1;

nlohmann::json to_json(const PhysicsPriors& priors);
/// Throws DataError on schema violations.
PhysicsPriors priors_from_json(const nlohmann::json& doc);

void write_priors(const std::filesystem::path& path, const PhysicsPriors& priors);
PhysicsPriors read_priors(const std::filesystem::path& path);

/// Modes plus (optionally) residual, sample_rate * duration samples long.
std::vector<double> synthesize_priors(const PhysicsPriors& priors, bool include_residual = true,
                                      std::optional<double> duration = std::nullopt);

nlohmann::json stft_to_json(const dsp::StftConfig& config);
dsp::StftConfig stft_from_json(const nlohmann::json& doc);

}  // namespace impactsynth::residual
