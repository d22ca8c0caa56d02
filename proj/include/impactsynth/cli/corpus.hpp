#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace impactsynth::cli {

struct ClipEntry {
  std::string id;
  std::filesystem::path wav;
  std::optional<std::filesystem::path> visual;
  std::optional<std::filesystem::path> priors;
  std::optional<int> label;
};

/// {"clips": [{"id", "wav", "visual"?, "priors"?, "label"?}, ...]}; relative
/// paths are resolved against the manifest's directory.
struct ClipManifest {
  std::vector<ClipEntry> clips;

  const ClipEntry* find(const std::string& id) const;
};

/// Throws DataError on malformed JSON, missing fields or duplicate ids.
ClipManifest read_manifest(const std::filesystem::path& path);
/// Paths below the manifest's directory are written relative to it.
void write_manifest(const std::filesystem::path& path, const ClipManifest& manifest);

struct CorpusOptions {
  std::size_t materials = 2;
  std::size_t clips_per_material = 4;
  std::size_t visual_dim = 2048;
  double duration = 0.25;
  double sample_rate = 44100.0;
  std::uint64_t seed = 0;
};

/// Writes synthetic impact clips (a few damped modes per clip with
/// material-specific frequencies and decays, plus a faint decaying noise
/// floor), one visual latent per clip clustered by material, and
/// `manifest.json` into `dir`. Returns the manifest.
ClipManifest synthesize_corpus(const std::filesystem::path& dir, const CorpusOptions& options);

}  // namespace impactsynth::cli
