#include "impactsynth/diffusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/rng.hpp"

namespace impactsynth::diffusion {

namespace {

void check_dataset(const std::vector<TrainingExample>& dataset, const ToyConfig& config) {
  if (dataset.empty()) throw InvalidArgument("train_toy: empty dataset");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset[i];
    if (ex.x0.size() != config.data_size || ex.cond.physics.size() != config.physics_dim ||
        ex.cond.visual.size() != config.visual_dim) {
      throw InvalidArgument("train_toy: example " + std::to_string(i) + " does not match the denoiser dimensions");
    }
    for (double v : ex.x0) {
      if (!std::isfinite(v)) throw InvalidArgument("train_toy: example " + std::to_string(i) + " has non-finite values");
    }
  }
}

}  // namespace

TrainResult train_toy(const std::vector<TrainingExample>& dataset, const NoiseSchedule& schedule,
                      const ToyConfig& config, const TrainOptions& options) {
  check_dataset(dataset, config);
  if (options.batch_size == 0) throw InvalidArgument("train_toy: batch size must be positive");
  if (!(options.learning_rate >= 0.0)) throw InvalidArgument("train_toy: learning rate must be >= 0");

  TrainResult result{ToyDenoiser(config), {}};
  ToyDenoiser& model = result.model;
  auto params = model.parameters();
  const std::size_t n = params.size();
  std::vector<double> grad(n), m(n, 0.0), v(n, 0.0);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> eps;

  Rng rng(options.seed);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& ex = dataset[order[k]];
        const std::size_t t = 1 + rng.below(schedule.steps());
        eps.resize(ex.x0.size());
        rng.fill_normal(eps);
        batch_loss += training_loss_at(model, ex.x0, ex.cond, schedule, t, eps, grad);
      }
      const double count = static_cast<double>(end - begin);
      batch_loss /= count;
      if (!std::isfinite(batch_loss)) {
        throw Error("train_toy: loss diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                    " (learning rate " + std::to_string(options.learning_rate) + ")");
      }

      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      const double lr = options.learning_rate;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] / count;
        m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
        v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
        const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + options.epsilon);
        params[i] -= lr * (update + options.weight_decay * params[i]);
      }
      epoch_sum += batch_loss;
      ++batches;
    }
    result.report.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }
  for (double p : params) {
    if (!std::isfinite(p)) throw Error("train_toy: parameters became non-finite");
  }
  return result;
}

double evaluate_loss(const Denoiser& denoiser, const std::vector<TrainingExample>& dataset,
                     const NoiseSchedule& schedule, std::size_t draws, std::uint64_t seed) {
  if (dataset.empty() || draws == 0) throw InvalidArgument("evaluate_loss: nothing to evaluate");
  Rng rng(seed);
  double sum = 0.0;
  std::vector<double> eps;
  for (const auto& ex : dataset) {
    eps.resize(ex.x0.size());
    for (std::size_t d = 0; d < draws; ++d) {
      const std::size_t t = 1 + rng.below(schedule.steps());
      rng.fill_normal(eps);
      sum += training_loss_at(denoiser, ex.x0, ex.cond, schedule, t, eps);
    }
  }
  return sum / static_cast<double>(dataset.size() * draws);
}

}  // namespace impactsynth::diffusion
