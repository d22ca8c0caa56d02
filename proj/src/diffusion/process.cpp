#include "impactsynth/diffusion/process.hpp"

#include <cmath>
#include <string>

#include "impactsynth/common/error.hpp"

namespace impactsynth::diffusion {

namespace {

void check_step(const NoiseSchedule& schedule, std::size_t t, std::size_t lowest) {
  if (t < lowest || t > schedule.steps()) {
    throw InvalidArgument("diffusion step " + std::to_string(t) + " outside " + std::to_string(lowest) + ".." +
                          std::to_string(schedule.steps()));
  }
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " + std::to_string(b) +
                          ")");
  }
}

}  // namespace

std::vector<double> forward_sample(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                                   const NoiseSchedule& schedule) {
  check_sizes(x0.size(), eps.size(), "forward_sample");
  check_step(schedule, t, 0);
  const double ab = schedule.alpha_bar_at(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

std::vector<double> forward_step(std::span<const double> x_prev, std::size_t t, std::span<const double> eps,
                                 const NoiseSchedule& schedule) {
  check_sizes(x_prev.size(), eps.size(), "forward_step");
  check_step(schedule, t, 1);
  const double a = std::sqrt(schedule.alpha_at(t));
  const double b = std::sqrt(schedule.beta_at(t));
  std::vector<double> out(x_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x_prev[i] + b * eps[i];
  return out;
}

double training_loss_at(const Denoiser& denoiser, std::span<const double> x0, const ConditionPair& cond,
                        const NoiseSchedule& schedule, std::size_t t, std::span<const double> eps,
                        std::span<double> grad) {
  check_step(schedule, t, 1);
  const auto x_t = forward_sample(x0, t, eps, schedule);
  if (!grad.empty()) {
    const auto* trainable = dynamic_cast<const TrainableDenoiser*>(&denoiser);
    if (trainable == nullptr) throw InvalidArgument("training_loss: gradients need a trainable denoiser");
    check_sizes(grad.size(), trainable->parameters().size(), "training_loss gradient");
    return trainable->l1_backward(x_t, t, cond, eps, grad);
  }
  const auto predicted = denoiser.predict(x_t, t, cond);
  check_sizes(predicted.size(), eps.size(), "denoiser output");
  double sum = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) sum += std::abs(eps[i] - predicted[i]);
  return sum / static_cast<double>(eps.size());
}

double training_loss(const Denoiser& denoiser, std::span<const double> x0, const ConditionPair& cond,
                     const NoiseSchedule& schedule, Rng& rng, std::span<double> grad) {
  if (x0.empty()) throw InvalidArgument("training_loss: empty input");
  const std::size_t t = 1 + rng.below(schedule.steps());
  std::vector<double> eps(x0.size());
  rng.fill_normal(eps);
  return training_loss_at(denoiser, x0, cond, schedule, t, eps, grad);
}

std::vector<double> sample_from(const Denoiser& denoiser, const ConditionPair& cond, const NoiseSchedule& schedule,
                                double eta, Rng& rng, std::vector<double> x_T) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("sample: eta must be finite and >= 0");
  std::vector<double> x = std::move(x_T);
  std::vector<double> z(x.size());
  for (std::size_t t = schedule.steps(); t >= 1; --t) {
    const auto eps_hat = denoiser.predict(x, t, cond);
    check_sizes(eps_hat.size(), x.size(), "denoiser output");
    const double beta = schedule.beta_at(t);
    const double ab = schedule.alpha_bar_at(t);
    const double ab_prev = schedule.alpha_bar_at(t - 1);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha_at(t));
    const double eps_coef = beta / std::sqrt(1.0 - ab);
    const double sigma = t > 1 ? eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab) * beta) : 0.0;
    if (sigma > 0.0) rng.fill_normal(z);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = inv_sqrt_alpha * (x[i] - eps_coef * eps_hat[i]);
      if (sigma > 0.0) x[i] += sigma * z[i];
    }
  }
  return x;
}

std::vector<double> sample(const Denoiser& denoiser, const ConditionPair& cond, const NoiseSchedule& schedule,
                           double eta, Rng& rng, std::size_t size) {
  if (size == 0) throw InvalidArgument("sample: size must be positive");
  std::vector<double> x(size);
  rng.fill_normal(x);
  return sample_from(denoiser, cond, schedule, eta, rng, std::move(x));
}

std::vector<double> GaussianOptimalDenoiser::predict(std::span<const double> x, std::size_t t,
                                                     const ConditionPair&) const {
  check_step(schedule_, t, 1);
  const double c = std::sqrt(1.0 - schedule_.alpha_bar_at(t));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  return out;
}

}  // namespace impactsynth::diffusion
