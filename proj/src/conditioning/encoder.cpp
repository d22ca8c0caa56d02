#include "impactsynth/conditioning/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/rng.hpp"

namespace impactsynth::conditioning {

using nlohmann::json;

namespace {

double to_unit_range(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

}  // namespace

void EncoderConfig::validate() const {
  if (num_modes == 0 || num_bands == 0) throw InvalidArgument("encoder: mode and band counts must be positive");
  if (!std::isfinite(gamma_min) || !std::isfinite(gamma_max) || gamma_max < gamma_min) {
    throw InvalidArgument("encoder: invalid gamma range");
  }
  if (!std::isfinite(weight_max) || weight_max < 0.0) throw InvalidArgument("encoder: invalid weight maximum");
}

json to_json(const EncoderConfig& c) {
  return {{"seed", c.seed},           {"num_modes", c.num_modes}, {"num_bands", c.num_bands},
          {"gamma_min", c.gamma_min}, {"gamma_max", c.gamma_max}, {"weight_max", c.weight_max}};
}

EncoderConfig encoder_config_from_json(const json& doc) {
  EncoderConfig c;
  try {
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.num_modes = doc.at("num_modes").get<std::size_t>();
    c.num_bands = doc.at("num_bands").get<std::size_t>();
    c.gamma_min = doc.at("gamma_min").get<double>();
    c.gamma_max = doc.at("gamma_max").get<double>();
    c.weight_max = doc.at("weight_max").get<double>();
    c.validate();
  } catch (const json::exception& e) {
    throw DataError(std::string("encoder config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return c;
}

EncoderConfig fit_scaling(std::span<const residual::PhysicsPriors> corpus, EncoderConfig base) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double wmax = 0.0;
  for (const auto& p : corpus) {
    for (double g : p.residual.gamma) {
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
    for (double w : p.residual.weights) wmax = std::max(wmax, w);
  }
  if (lo <= hi) {
    base.gamma_min = lo;
    base.gamma_max = hi;
  }
  base.weight_max = wmax;
  return base;
}

PhysicsEncoder::PhysicsEncoder(const EncoderConfig& config) : config_(config) {
  config_.validate();
  const std::array<std::size_t, 5> inputs{config_.num_modes, config_.num_modes, config_.num_modes,
                                          config_.num_bands, config_.num_bands};
  Rng rng(config_.seed);
  for (std::size_t g = 0; g < maps_.size(); ++g) {
    Affine& a = maps_[g];
    a.in = inputs[g];
    a.out = kGroupDims[g];
    a.weight.resize(a.in * a.out);
    a.bias.resize(a.out);
    const double scale = 1.0 / std::sqrt(static_cast<double>(a.in));
    for (double& w : a.weight) w = scale * rng.normal();
    for (double& b : a.bias) b = 0.1 * rng.normal();
  }
}

std::vector<double> PhysicsEncoder::encode_groups(std::span<const std::vector<double>> groups) const {
  if (groups.size() != maps_.size()) throw InvalidArgument("encoder: expected five input groups");
  std::vector<double> out;
  out.reserve(kPhysicsLatentDim);
  for (std::size_t g = 0; g < maps_.size(); ++g) {
    const Affine& a = maps_[g];
    if (groups[g].size() != a.in) {
      throw InvalidArgument("encoder: group " + std::to_string(g) + " has " + std::to_string(groups[g].size()) +
                            " values, expected " + std::to_string(a.in));
    }
    for (std::size_t o = 0; o < a.out; ++o) {
      double acc = a.bias[o];
      const double* row = a.weight.data() + o * a.in;
      for (std::size_t i = 0; i < a.in; ++i) acc += row[i] * groups[g][i];
      out.push_back(std::tanh(acc));
    }
  }
  return out;
}

std::vector<double> PhysicsEncoder::encode(const residual::PhysicsPriors& priors) const {
  if (priors.modes.size() != config_.num_modes) {
    throw InvalidArgument("encoder: priors have " + std::to_string(priors.modes.size()) + " modes, encoder expects " +
                          std::to_string(config_.num_modes));
  }
  if (priors.residual.num_bands() != config_.num_bands) {
    throw InvalidArgument("encoder: priors have " + std::to_string(priors.residual.num_bands()) +
                          " residual bands, encoder expects " + std::to_string(config_.num_bands));
  }
  const auto norm = modal::normalize_modes(priors.modes);
  std::vector<std::vector<double>> groups{norm.frequency, norm.power, norm.decay, {}, {}};
  for (double g : priors.residual.gamma) groups[3].push_back(to_unit_range(g, config_.gamma_min, config_.gamma_max));
  for (double w : priors.residual.weights) {
    groups[4].push_back(config_.weight_max > 0.0 ? to_unit_range(w, 0.0, config_.weight_max) : -1.0);
  }
  return encode_groups(groups);
}

}  // namespace impactsynth::conditioning
