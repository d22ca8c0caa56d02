#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "impactsynth/diffusion/schedule.hpp"
#include "impactsynth/dsp/stft.hpp"
#include "impactsynth/residual/residual.hpp"

namespace impactsynth::cli {

struct Config {
  dsp::StftConfig stft;
  double clip_duration = 0.25;

  std::size_t residual_bands = 100;
  std::size_t fit_max_iterations = 200;
  double fit_tolerance = 1e-3;
  std::vector<std::size_t> loss_windows{512, 1024, 2048};
  std::uint64_t noise_seed = 0;

  diffusion::ScheduleKind schedule = diffusion::ScheduleKind::Cosine;
  std::size_t diffusion_steps = 1000;
  std::size_t toy_hidden = 256;
  std::size_t toy_grid_rows = 8;
  std::size_t toy_grid_cols = 8;
  std::size_t toy_epochs = 2000;
  std::size_t toy_batch_size = 16;
  double toy_learning_rate = 1e-3;

  std::size_t griffin_lim_iterations = 60;
  std::uint64_t encoder_seed = 0;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// Throws InvalidArgument when a value violates a module constraint.
  void validate() const;

  residual::FitOptions fit_options() const;
  std::vector<dsp::StftConfig> loss_resolutions() const;
};

/// Current values in the nested layout accepted by apply_json.
nlohmann::json to_json(const Config& config);

/// Overlays the fields present in `doc` (nested objects such as
/// {"stft": {"hop_size": 256}, "residual": {"bands": 100}}). Unknown keys are
/// rejected so that typos do not pass silently.
void apply_json(Config& config, const nlohmann::json& doc);

/// Applies one "dotted.path=value" override; the value is parsed as JSON and
/// falls back to a plain string.
void apply_override(Config& config, const std::string& assignment);

/// Defaults, then the optional config file, then the overrides, then validate().
Config load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

}  // namespace impactsynth::cli
