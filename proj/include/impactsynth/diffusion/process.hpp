#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "impactsynth/common/rng.hpp"
#include "impactsynth/diffusion/schedule.hpp"

namespace impactsynth::diffusion {

/// Physics latent mu and visual latent nu conditioning one sample.
struct ConditionPair {
  std::vector<double> physics;
  std::vector<double> visual;
};

/// Noise predictor eps(x_t, t, cond). Implementations must be deterministic
/// and return a vector of the same size as x.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual std::vector<double> predict(std::span<const double> x, std::size_t t, const ConditionPair& cond) const = 0;
};

/// A denoiser whose parameters can be trained on the L1 noise objective.
class TrainableDenoiser : public Denoiser {
 public:
  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;
  /// Returns mean |target - predict(x, t, cond)| and adds its gradient with
  /// respect to parameters() into `grad`.
  virtual double l1_backward(std::span<const double> x, std::size_t t, const ConditionPair& cond,
                             std::span<const double> target, std::span<double> grad) const = 0;
};

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, for t in 0..T.
std::vector<double> forward_sample(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                                   const NoiseSchedule& schedule);

/// One Markov transition q(x_t | x_{t-1}): sqrt(alpha_t) x_prev + sqrt(beta_t) eps, t in 1..T.
std::vector<double> forward_step(std::span<const double> x_prev, std::size_t t, std::span<const double> eps,
                                 const NoiseSchedule& schedule);

/// Mean absolute error between eps and the denoiser's prediction at a
/// uniformly drawn t in 1..T with eps ~ N(0, I), both drawn from `rng`.
/// With `grad` set, the denoiser must be trainable and the parameter
/// gradient is accumulated into it.
double training_loss(const Denoiser& denoiser, std::span<const double> x0, const ConditionPair& cond,
                     const NoiseSchedule& schedule, Rng& rng, std::span<double> grad = {});

/// Loss at a given step and noise draw.
double training_loss_at(const Denoiser& denoiser, std::span<const double> x0, const ConditionPair& cond,
                        const NoiseSchedule& schedule, std::size_t t, std::span<const double> eps,
                        std::span<double> grad = {});

/// Ancestral sampling from x_T: for t = T..1,
///   x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t) + sigma_t z,
///   sigma_t = eta sqrt((1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) beta_t), z = 0 at t = 1.
/// Noise is drawn from `rng` only when sigma_t > 0.
std::vector<double> sample_from(const Denoiser& denoiser, const ConditionPair& cond, const NoiseSchedule& schedule,
                                double eta, Rng& rng, std::vector<double> x_T);

/// As sample_from, with x_T ~ N(0, I) of the given size drawn from `rng`.
std::vector<double> sample(const Denoiser& denoiser, const ConditionPair& cond, const NoiseSchedule& schedule,
                           double eta, Rng& rng, std::size_t size);

/// Exact noise predictor when x0 ~ N(0, I): eps_hat = sqrt(1 - alpha_bar_t) x_t.
class GaussianOptimalDenoiser : public Denoiser {
 public:
  explicit GaussianOptimalDenoiser(NoiseSchedule schedule) : schedule_(std::move(schedule)) {}
  std::vector<double> predict(std::span<const double> x, std::size_t t, const ConditionPair& cond) const override;

 private:
  NoiseSchedule schedule_;
};

}  // namespace impactsynth::diffusion
