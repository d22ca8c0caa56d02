#include "impactsynth/diffusion/checkpoint.hpp"

#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/common/tensor.hpp"

namespace impactsynth::diffusion {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "impactsynth-toy-denoiser";
constexpr int kVersion = 1;

std::filesystem::path block_path(const std::filesystem::path& manifest, const std::string& name) {
  return std::filesystem::path(manifest.string() + "." + name + ".pdt1");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ToyCheckpoint& ckpt) {
  ckpt.config.validate();
  if (ckpt.grid_rows * ckpt.grid_cols != ckpt.config.data_size) {
    throw InvalidArgument("checkpoint: grid shape does not match the data size");
  }
  const ToyDenoiser model(ckpt.config, ckpt.parameters);
  json blocks = json::array();
  for (const auto& [name, b] : model.blocks()) {
    Tensor t(b.cols == 1 ? std::vector<std::size_t>{b.rows} : std::vector<std::size_t>{b.rows, b.cols});
    std::copy_n(ckpt.parameters.begin() + static_cast<std::ptrdiff_t>(b.offset), t.size(), t.data.begin());
    const auto file = block_path(path, name);
    write_pdt1(file, t);
    blocks.push_back({{"name", name}, {"file", file.filename().string()}, {"shape", t.shape}});
  }
  const auto& c = ckpt.config;
  json doc = {{"format", kFormat},
              {"version", kVersion},
              {"schedule", {{"kind", to_string(ckpt.schedule)}, {"steps", ckpt.steps}}},
              {"dims",
               {{"data_size", c.data_size},
                {"grid", {ckpt.grid_rows, ckpt.grid_cols}},
                {"hidden", c.hidden},
                {"time_dim", c.time_dim},
                {"physics_dim", c.physics_dim},
                {"visual_dim", c.visual_dim}}},
              {"init_seed", c.seed},
              {"parameters", std::move(blocks)},
              {"metadata", ckpt.metadata}};
  write_file_atomic(path, doc.dump(1) + "\n");
}

ToyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  ToyCheckpoint ckpt;
  try {
    const json doc = json::parse(read_file_text(path));
    if (doc.at("format").get<std::string>() != kFormat || doc.at("version").get<int>() != kVersion) {
      throw DataError(path.string() + ": not a toy denoiser checkpoint");
    }
    ckpt.schedule = parse_schedule_kind(doc.at("schedule").at("kind").get<std::string>());
    ckpt.steps = doc.at("schedule").at("steps").get<std::size_t>();
    const json& dims = doc.at("dims");
    ckpt.config.data_size = dims.at("data_size").get<std::size_t>();
    ckpt.grid_rows = dims.at("grid").at(0).get<std::size_t>();
    ckpt.grid_cols = dims.at("grid").at(1).get<std::size_t>();
    ckpt.config.hidden = dims.at("hidden").get<std::size_t>();
    ckpt.config.time_dim = dims.at("time_dim").get<std::size_t>();
    ckpt.config.physics_dim = dims.at("physics_dim").get<std::size_t>();
    ckpt.config.visual_dim = dims.at("visual_dim").get<std::size_t>();
    ckpt.config.seed = doc.value("init_seed", std::uint64_t{0});
    ckpt.config.validate();
    if (ckpt.steps < 1) throw DataError("schedule needs at least one step");
    if (ckpt.grid_rows * ckpt.grid_cols != ckpt.config.data_size) throw DataError("grid shape does not match data size");
    ckpt.metadata = doc.value("metadata", json::object());

    ckpt.parameters.assign(ToyDenoiser::parameter_count(ckpt.config), 0.0);
    const ToyDenoiser layout(ckpt.config, ckpt.parameters);
    const json& blocks = doc.at("parameters");
    for (const auto& [name, b] : layout.blocks()) {
      const json* entry = nullptr;
      for (const auto& e : blocks) {
        if (e.at("name").get<std::string>() == name) entry = &e;
      }
      if (entry == nullptr) throw DataError(std::string("missing parameter block ") + name);
      const auto file = path.parent_path() / entry->at("file").get<std::string>();
      const Tensor t = read_pdt1(file);
      if (t.size() != b.rows * b.cols) throw DataError(std::string("parameter block ") + name + " has the wrong size");
      std::copy(t.data.begin(), t.data.end(), ckpt.parameters.begin() + static_cast<std::ptrdiff_t>(b.offset));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace impactsynth::diffusion
