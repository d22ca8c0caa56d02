#include "impactsynth/residual/priors.hpp"

#include <cmath>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"

namespace impactsynth::residual {

using nlohmann::json;

namespace {

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw DataError(std::string("priors: missing field '") + key + "'");
  }
  return doc.at(key);
}

double number(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_number()) throw DataError(std::string("priors: field '") + key + "' is not a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_array()) throw DataError(std::string("priors: field '") + key + "' is not an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw DataError(std::string("priors: non-numeric entry in '") + key + "'");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

void PhysicsPriors::validate() const {
  modes.validate();
  residual.validate();
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidArgument("priors: duration must be positive");
  if (residual.bank.sample_rate != modes.stft.sample_rate) {
    throw InvalidArgument("priors: residual bank and STFT sample rates differ");
  }
}

json stft_to_json(const dsp::StftConfig& config) {
  return {{"sample_rate", config.sample_rate},
          {"window_size", config.window_size},
          {"hop_size", config.hop_size},
          {"window", "hann"},
          {"centered", config.centered}};
}

dsp::StftConfig stft_from_json(const json& doc) {
  dsp::StftConfig config;
  try {
    if (!doc.is_object()) throw DataError("stft: expected an object");
    config.sample_rate = doc.value("sample_rate", config.sample_rate);
    config.window_size = doc.value("window_size", config.window_size);
    config.hop_size = doc.value("hop_size", config.hop_size);
    config.centered = doc.value("centered", config.centered);
    if (doc.value("window", std::string("hann")) != "hann") throw DataError("stft: only the hann window is supported");
  } catch (const json::exception& e) {
    throw DataError(std::string("stft: ") + e.what());
  }
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return config;
}

json to_json(const PhysicsPriors& priors) {
  json modes = json::array();
  for (const auto& m : priors.modes.modes) {
    modes.push_back({{"f", m.frequency}, {"p", m.power}, {"lambda", m.decay}});
  }
  const auto& r = priors.residual;
  return {{"version", kPriorsVersion},
          {"stft", stft_to_json(priors.modes.stft)},
          {"duration", priors.duration},
          {"modes", std::move(modes)},
          {"residual",
           {{"gamma", r.gamma}, {"weights", r.weights}, {"band_edges", r.bank.edges}, {"noise_seed", r.noise_seed}}}};
}

PhysicsPriors priors_from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("priors: expected a JSON object");
  const json& version = require(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kPriorsVersion) {
    throw DataError("priors: unsupported version");
  }
  PhysicsPriors priors;
  priors.modes.stft = stft_from_json(require(doc, "stft"));
  if (doc.contains("duration")) priors.duration = number(doc, "duration");

  const json& modes = require(doc, "modes");
  if (!modes.is_array()) throw DataError("priors: 'modes' is not an array");
  priors.modes.modes.reserve(modes.size());
  for (const auto& m : modes) {
    priors.modes.modes.push_back({number(m, "f"), number(m, "p"), number(m, "lambda")});
  }

  const json& r = require(doc, "residual");
  priors.residual.gamma = numbers(r, "gamma");
  priors.residual.weights = numbers(r, "weights");
  priors.residual.bank.sample_rate = priors.modes.stft.sample_rate;
  priors.residual.bank.edges = numbers(r, "band_edges");
  if (r.contains("noise_seed")) {
    const json& seed = r.at("noise_seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      throw DataError("priors: 'noise_seed' must be a non-negative integer");
    }
    priors.residual.noise_seed = seed.get<std::uint64_t>();
  }

  try {
    priors.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return priors;
}

void write_priors(const std::filesystem::path& path, const PhysicsPriors& priors) {
  write_file_atomic(path, to_json(priors).dump(1) + "\n");
}

PhysicsPriors read_priors(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return priors_from_json(doc);
}

std::vector<double> synthesize_priors(const PhysicsPriors& priors, bool include_residual,
                                      std::optional<double> duration) {
  const double d = duration.value_or(priors.duration);
  const double sr = priors.modes.stft.sample_rate;
  auto out = modal::synthesize_modes(priors.modes, d, sr);
  if (include_residual) {
    const auto r = synthesize_residual(priors.residual, d, sr);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
  }
  return out;
}

}  // namespace impactsynth::residual
