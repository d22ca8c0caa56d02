#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "impactsynth/diffusion/process.hpp"

namespace impactsynth::diffusion {

struct ToyConfig {
  std::size_t data_size = 64;
  std::size_t hidden = 256;
  std::size_t time_dim = 32;
  std::size_t physics_dim = 256;
  std::size_t visual_dim = 2048;
  std::uint64_t seed = 0;

  std::size_t input_size() const { return data_size + time_dim + physics_dim + visual_dim; }
  void validate() const;
  friend bool operator==(const ToyConfig&, const ToyConfig&) = default;
};

/// Sinusoidal embedding of a diffusion step: [sin(t w_k), cos(t w_k)] with
/// w_k = 10000^(-k / (dim/2)). `dim` must be even.
std::vector<double> time_embedding(std::size_t t, std::size_t dim);

/// Two-layer perceptron eps_hat = W2 silu(W1 [x; emb(t); mu/sqrt(|mu|); nu/sqrt(|nu|)] + b1) + b2,
/// where |v| is the vector's dimension.
/// Parameters live in one flat vector laid out as W1 (hidden x input, row
/// major), b1, W2 (data x hidden), b2.
class ToyDenoiser : public TrainableDenoiser {
 public:
  /// Seeded Gaussian initialisation (W ~ N(0, 1/fan_in), b = 0).
  explicit ToyDenoiser(const ToyConfig& config);
  /// Wraps existing parameters; throws InvalidArgument on a size mismatch.
  ToyDenoiser(const ToyConfig& config, std::vector<double> parameters);

  const ToyConfig& config() const { return config_; }
  static std::size_t parameter_count(const ToyConfig& config);

  std::vector<double> predict(std::span<const double> x, std::size_t t, const ConditionPair& cond) const override;
  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  double l1_backward(std::span<const double> x, std::size_t t, const ConditionPair& cond,
                     std::span<const double> target, std::span<double> grad) const override;

  struct Block {
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;  // 1 for biases
  };
  /// Parameter blocks in storage order: w1, b1, w2, b2.
  std::vector<std::pair<const char*, Block>> blocks() const;

 private:
  std::vector<double> assemble_input(std::span<const double> x, std::size_t t, const ConditionPair& cond) const;
  void hidden_layer(std::span<const double> input, std::vector<double>& pre, std::vector<double>& act) const;

  ToyConfig config_;
  std::vector<double> params_;
};

}  // namespace impactsynth::diffusion
