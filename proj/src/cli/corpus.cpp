#include "impactsynth/cli/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/common/rng.hpp"
#include "impactsynth/common/tensor.hpp"
#include "impactsynth/common/wav.hpp"
#include "impactsynth/modal/modes.hpp"
#include "impactsynth/residual/residual.hpp"

namespace impactsynth::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : fs::absolute(base) / path).lexically_normal();
}

std::string relative_to(const fs::path& base, const fs::path& p) {
  const fs::path full = fs::absolute(p).lexically_normal();
  const auto rel = full.lexically_relative(fs::absolute(base).lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return full.generic_string();
}

// Ratios of a free bar's first partials, used to make each material's
// modes inharmonic in a recognisable way.
constexpr double kPartials[] = {1.0, 2.756, 5.404, 8.933, 13.34, 18.64};

}  // namespace

const ClipEntry* ClipManifest::find(const std::string& id) const {
  for (const auto& c : clips) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

ClipManifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  ClipManifest manifest;
  std::set<std::string> ids;
  try {
    for (const auto& c : doc.at("clips")) {
      ClipEntry e;
      e.id = c.at("id").get<std::string>();
      if (e.id.empty()) throw DataError(path.string() + ": empty clip id");
      if (!ids.insert(e.id).second) throw DataError(path.string() + ": duplicate clip id '" + e.id + "'");
      e.wav = resolve(base, c.at("wav").get<std::string>());
      if (c.contains("visual") && !c["visual"].is_null()) e.visual = resolve(base, c["visual"].get<std::string>());
      if (c.contains("priors") && !c["priors"].is_null()) e.priors = resolve(base, c["priors"].get<std::string>());
      if (c.contains("label") && !c["label"].is_null()) e.label = c["label"].get<int>();
      manifest.clips.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return manifest;
}

void write_manifest(const fs::path& path, const ClipManifest& manifest) {
  const fs::path base = path.parent_path();
  json clips = json::array();
  for (const auto& c : manifest.clips) {
    json e = {{"id", c.id}, {"wav", relative_to(base, c.wav)}};
    if (c.visual) e["visual"] = relative_to(base, *c.visual);
    if (c.priors) e["priors"] = relative_to(base, *c.priors);
    if (c.label) e["label"] = *c.label;
    clips.push_back(std::move(e));
  }
  write_file_atomic(path, json{{"clips", std::move(clips)}}.dump(1) + "\n");
}

ClipManifest synthesize_corpus(const fs::path& dir, const CorpusOptions& o) {
  if (o.materials == 0 || o.clips_per_material == 0) throw InvalidArgument("corpus: need at least one clip");
  if (o.visual_dim == 0) throw InvalidArgument("corpus: visual dimension must be positive");
  fs::create_directories(dir);
  dsp::StftConfig stft;
  stft.sample_rate = o.sample_rate;
  stft.validate();

  Rng rng(o.seed);
  ClipManifest manifest;
  for (std::size_t k = 0; k < o.materials; ++k) {
    Rng material(rng.split());
    const double fundamental = 250.0 * std::pow(2.0, 3.0 * material.uniform());
    const double decay = 60.0 + 240.0 * material.uniform();
    std::vector<double> centroid(o.visual_dim);
    material.fill_normal(centroid);

    for (std::size_t j = 0; j < o.clips_per_material; ++j) {
      Rng clip(material.split());
      auto modes = modal::silent_modes(stft);
      const std::size_t count = 3 + clip.below(4);
      const double pitch = fundamental * (0.9 + 0.2 * clip.uniform());
      for (std::size_t i = 0; i < count && i < std::size(kPartials); ++i) {
        const double f = pitch * kPartials[i] * (1.0 + 0.01 * clip.normal());
        if (f >= o.sample_rate / 2.0 - stft.bin_resolution()) break;
        const auto bin = static_cast<std::size_t>(std::lround(f / stft.bin_resolution()));
        auto& m = modes.modes[bin];
        const double power = -6.0 * static_cast<double>(i) - 6.0 * clip.uniform();
        if (power <= m.power) continue;
        const auto range = modal::bin_range(stft, bin);
        m.frequency = std::clamp(f, std::max(range.low, 1e-3), range.high - 1e-6);
        m.power = power;
        m.decay = decay * (1.0 + 0.3 * static_cast<double>(i)) * (0.85 + 0.3 * clip.uniform());
      }
      auto signal = modal::synthesize_modes(modes, o.duration, o.sample_rate);

      auto floor = residual::ResidualParams::zeros(20, o.sample_rate, clip.split());
      for (std::size_t b = 0; b < floor.num_bands(); ++b) {
        floor.weights[b] = 0.01 * clip.uniform();
        floor.gamma[b] = 100.0 + 200.0 * clip.uniform();
      }
      const auto noise = residual::synthesize_residual(floor, o.duration, o.sample_rate);
      for (std::size_t i = 0; i < signal.size(); ++i) signal[i] += noise[i];
      peak_normalize(signal, 0.9);

      ClipEntry e;
      e.id = "m" + std::to_string(k) + "_c" + std::to_string(j);
      e.wav = dir / (e.id + ".wav");
      e.visual = dir / (e.id + ".visual.pdt1");
      e.label = static_cast<int>(k);
      write_wav(e.wav, signal, o.sample_rate, SampleFormat::Float32);
      std::vector<double> latent(o.visual_dim);
      clip.fill_normal(latent);
      for (std::size_t i = 0; i < latent.size(); ++i) latent[i] = centroid[i] + 0.25 * latent[i];
      write_pdt1(*e.visual, Tensor({o.visual_dim}, std::move(latent)));
      manifest.clips.push_back(std::move(e));
    }
  }
  write_manifest(dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace impactsynth::cli
