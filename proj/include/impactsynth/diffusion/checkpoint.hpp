#pragma once

#include <cstddef>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "impactsynth/diffusion/schedule.hpp"
#include "impactsynth/diffusion/toy_denoiser.hpp"

namespace impactsynth::diffusion {

/// A trained ToyDenoiser plus what is needed to sample with it.
struct ToyCheckpoint {
  ToyConfig config;
  ScheduleKind schedule = ScheduleKind::Cosine;
  std::size_t steps = 1000;
  std::size_t grid_rows = 8;  ///< the data vector is a rows x cols grid
  std::size_t grid_cols = 8;
  std::vector<double> parameters;
  /// Free-form extra fields (spectrogram shape, encoder settings, ...).
  nlohmann::json metadata = nlohmann::json::object();
};

/// Writes a JSON manifest at `path` and one PDT1 file per parameter block
/// next to it (`<path>.w1.pdt1`, ...). PDT1 stores float32, so parameters
/// are rounded to single precision on disk.
void save_checkpoint(const std::filesystem::path& path, const ToyCheckpoint& checkpoint);

/// Throws DataError on a malformed manifest or missing/mis-shaped tensors.
ToyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace impactsynth::diffusion
