#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "impactsynth/residual/priors.hpp"

namespace impactsynth::conditioning {

/// Output widths of the five groups: frequency, power, decay, gamma, weights.
inline constexpr std::array<std::size_t, 5> kGroupDims{64, 64, 64, 32, 32};
inline constexpr std::size_t kPhysicsLatentDim = 256;

struct EncoderConfig {
  std::uint64_t seed = 0;
  std::size_t num_modes = 1025;
  std::size_t num_bands = 100;
  /// gamma is mapped from [gamma_min, gamma_max] onto [-1, 1].
  double gamma_min = 0.0;
  double gamma_max = 1.0;
  /// weights are mapped from [0, weight_max] onto [-1, 1].
  double weight_max = 1.0;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& doc);

/// Sets the gamma range and weight maximum from a corpus of priors, keeping
/// the other fields of `base`.
EncoderConfig fit_scaling(std::span<const residual::PhysicsPriors> corpus, EncoderConfig base);

/// Five fixed random affine maps, one per parameter group, concatenated and
/// squashed with tanh into the 256-d physics latent. Weights are N(0, 1/in),
/// biases N(0, 0.1^2), all drawn from the seed.
class PhysicsEncoder {
 public:
  explicit PhysicsEncoder(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }

  /// Throws InvalidArgument if the mode or band count differs from the config.
  std::vector<double> encode(const residual::PhysicsPriors& priors) const;

  /// The five already-normalised input groups, in order.
  std::vector<double> encode_groups(std::span<const std::vector<double>> groups) const;

 private:
  struct Affine {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;  // out x in
    std::vector<double> bias;
  };
  EncoderConfig config_;
  std::array<Affine, 5> maps_;
};

}  // namespace impactsynth::conditioning
