#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "impactsynth/diffusion/process.hpp"
#include "impactsynth/diffusion/toy_denoiser.hpp"

namespace impactsynth::diffusion {

struct TrainingExample {
  std::vector<double> x0;  ///< values scaled to [-1, 1]
  ConditionPair cond;
};

/// Minibatch AdamW on the L1 noise-prediction loss.
struct TrainOptions {
  std::size_t epochs = 2000;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> epoch_loss;  ///< mean minibatch loss per epoch
};

struct TrainResult {
  ToyDenoiser model;
  TrainReport report;
};

/// Trains a freshly initialised ToyDenoiser. Throws InvalidArgument for an
/// empty dataset or examples that do not match `config`, and Error when the
/// loss stops being finite.
TrainResult train_toy(const std::vector<TrainingExample>& dataset, const NoiseSchedule& schedule,
                      const ToyConfig& config, const TrainOptions& options);

/// Mean L1 loss over `draws` seeded (t, eps) draws per example. The draws
/// depend only on the seed and the dataset shape, so two denoisers evaluated
/// with the same seed see identical noise.
double evaluate_loss(const Denoiser& denoiser, const std::vector<TrainingExample>& dataset,
                     const NoiseSchedule& schedule, std::size_t draws, std::uint64_t seed);

/// Predicts zero noise; its loss is E|eps| = sqrt(2/pi) per element.
class ZeroDenoiser : public Denoiser {
 public:
  std::vector<double> predict(std::span<const double> x, std::size_t, const ConditionPair&) const override {
    return std::vector<double>(x.size(), 0.0);
  }
};

}  // namespace impactsynth::diffusion
