#include "impactsynth/cli/config.hpp"

#include <cmath>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/residual/priors.hpp"

namespace impactsynth::cli {

using nlohmann::json;

void Config::validate() const {
  stft.validate();
  if (!(clip_duration > 0.0) || !std::isfinite(clip_duration)) throw InvalidArgument("config: clip_duration must be positive");
  if (residual_bands == 0) throw InvalidArgument("config: residual.bands must be positive");
  if (!(fit_tolerance >= 0.0)) throw InvalidArgument("config: residual.tolerance must be >= 0");
  if (loss_windows.empty()) throw InvalidArgument("config: residual.loss_windows must not be empty");
  for (const auto& r : loss_resolutions()) r.validate();
  if (diffusion_steps == 0) throw InvalidArgument("config: diffusion.steps must be positive");
  if (toy_hidden == 0 || toy_grid_rows == 0 || toy_grid_cols == 0 || toy_batch_size == 0) {
    throw InvalidArgument("config: diffusion sizes must be positive");
  }
  if (!(toy_learning_rate >= 0.0)) throw InvalidArgument("config: diffusion.learning_rate must be >= 0");
  if (griffin_lim_iterations == 0) throw InvalidArgument("config: griffin_lim.iterations must be positive");
  if (jobs == 0) throw InvalidArgument("config: jobs must be positive");
}

residual::FitOptions Config::fit_options() const {
  residual::FitOptions o;
  o.max_iterations = fit_max_iterations;
  o.tolerance = fit_tolerance;
  o.num_bands = residual_bands;
  o.noise_seed = noise_seed;
  o.resolutions = loss_resolutions();
  return o;
}

std::vector<dsp::StftConfig> Config::loss_resolutions() const {
  std::vector<dsp::StftConfig> out;
  for (std::size_t w : loss_windows) {
    dsp::StftConfig c;
    c.sample_rate = stft.sample_rate;
    c.window_size = w;
    c.hop_size = w / 4;
    out.push_back(c);
  }
  return out;
}

json to_json(const Config& c) {
  return {{"stft", residual::stft_to_json(c.stft)},
          {"clip_duration", c.clip_duration},
          {"residual",
           {{"bands", c.residual_bands},
            {"max_iterations", c.fit_max_iterations},
            {"tolerance", c.fit_tolerance},
            {"loss_windows", c.loss_windows},
            {"noise_seed", c.noise_seed}}},
          {"diffusion",
           {{"schedule", diffusion::to_string(c.schedule)},
            {"steps", c.diffusion_steps},
            {"hidden", c.toy_hidden},
            {"grid", {c.toy_grid_rows, c.toy_grid_cols}},
            {"epochs", c.toy_epochs},
            {"batch_size", c.toy_batch_size},
            {"learning_rate", c.toy_learning_rate}}},
          {"griffin_lim", {{"iterations", c.griffin_lim_iterations}}},
          {"encoder", {{"seed", c.encoder_seed}}},
          {"seed", c.seed},
          {"jobs", c.jobs}};
}

void apply_json(Config& config, const json& doc) {
  // Merge onto the current values and read everything back, so a partial
  // document only changes what it names.
  json merged = to_json(config);
  if (!doc.is_object()) throw InvalidArgument("config: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!merged.contains(key)) throw InvalidArgument("config: unknown key '" + key + "'");
    if (merged[key].is_object()) {
      if (!value.is_object()) throw InvalidArgument("config: '" + key + "' must be an object");
      for (const auto& [sub, v] : value.items()) {
        if (!merged[key].contains(sub)) throw InvalidArgument("config: unknown key '" + key + "." + sub + "'");
        merged[key][sub] = v;
      }
    } else {
      merged[key] = value;
    }
  }

  try {
    Config c;
    c.stft = residual::stft_from_json(merged["stft"]);
    c.clip_duration = merged["clip_duration"].get<double>();
    const json& r = merged["residual"];
    c.residual_bands = r["bands"].get<std::size_t>();
    c.fit_max_iterations = r["max_iterations"].get<std::size_t>();
    c.fit_tolerance = r["tolerance"].get<double>();
    c.loss_windows = r["loss_windows"].get<std::vector<std::size_t>>();
    c.noise_seed = r["noise_seed"].get<std::uint64_t>();
    const json& d = merged["diffusion"];
    c.schedule = diffusion::parse_schedule_kind(d["schedule"].get<std::string>());
    c.diffusion_steps = d["steps"].get<std::size_t>();
    c.toy_hidden = d["hidden"].get<std::size_t>();
    c.toy_grid_rows = d["grid"].at(0).get<std::size_t>();
    c.toy_grid_cols = d["grid"].at(1).get<std::size_t>();
    c.toy_epochs = d["epochs"].get<std::size_t>();
    c.toy_batch_size = d["batch_size"].get<std::size_t>();
    c.toy_learning_rate = d["learning_rate"].get<double>();
    c.griffin_lim_iterations = merged["griffin_lim"]["iterations"].get<std::size_t>();
    c.encoder_seed = merged["encoder"]["seed"].get<std::uint64_t>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.jobs = merged["jobs"].get<std::size_t>();
    config = c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidArgument("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json doc = json::object();
  json* cursor = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InvalidArgument("override '" + assignment + "' has an empty key");
    if (dot == std::string::npos) {
      (*cursor)[part] = value;
      break;
    }
    cursor = &(*cursor)[part];
    start = dot + 1;
  }
  apply_json(config, doc);
}

Config load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  Config config;
  if (!file.empty()) {
    json doc;
    try {
      doc = json::parse(read_file_text(file));
    } catch (const json::parse_error& e) {
      throw DataError(file.string() + ": " + e.what());
    }
    apply_json(config, doc);
  }
  for (const auto& o : overrides) apply_override(config, o);
  config.validate();
  return config;
}

}  // namespace impactsynth::cli
