#include "impactsynth/diffusion/toy_denoiser.hpp"

#include <cmath>
#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/rng.hpp"

namespace impactsynth::diffusion {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

void ToyConfig::validate() const {
  if (data_size == 0 || hidden == 0) throw InvalidArgument("toy denoiser: data size and hidden width must be positive");
  if (time_dim == 0 || time_dim % 2 != 0) throw InvalidArgument("toy denoiser: time embedding size must be even");
}

std::vector<double> time_embedding(std::size_t t, std::size_t dim) {
  if (dim % 2 != 0) throw InvalidArgument("time embedding size must be even");
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  for (std::size_t k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
    const double arg = static_cast<double>(t) * freq;
    out[k] = std::sin(arg);
    out[half + k] = std::cos(arg);
  }
  return out;
}

std::size_t ToyDenoiser::parameter_count(const ToyConfig& c) {
  return c.hidden * c.input_size() + c.hidden + c.data_size * c.hidden + c.data_size;
}

ToyDenoiser::ToyDenoiser(const ToyConfig& config) : config_(config) {
  config_.validate();
  params_.assign(parameter_count(config_), 0.0);
  Rng rng(config_.seed);
  for (const auto& [name, b] : blocks()) {
    if (b.cols == 1) continue;
    const double scale = 1.0 / std::sqrt(static_cast<double>(b.cols));
    for (std::size_t i = 0; i < b.rows * b.cols; ++i) params_[b.offset + i] = scale * rng.normal();
  }
}

ToyDenoiser::ToyDenoiser(const ToyConfig& config, std::vector<double> parameters)
    : config_(config), params_(std::move(parameters)) {
  config_.validate();
  if (params_.size() != parameter_count(config_)) {
    throw InvalidArgument("toy denoiser: expected " + std::to_string(parameter_count(config_)) + " parameters, got " +
                          std::to_string(params_.size()));
  }
}

std::vector<std::pair<const char*, ToyDenoiser::Block>> ToyDenoiser::blocks() const {
  const std::size_t in = config_.input_size();
  const std::size_t h = config_.hidden;
  const std::size_t d = config_.data_size;
  return {{"w1", {0, h, in}},
          {"b1", {h * in, h, 1}},
          {"w2", {h * in + h, d, h}},
          {"b2", {h * in + h + d * h, d, 1}}};
}

std::vector<double> ToyDenoiser::assemble_input(std::span<const double> x, std::size_t t,
                                                const ConditionPair& cond) const {
  auto mismatch = [](const char* what, std::size_t got, std::size_t want) {
    return InvalidArgument(std::string("toy denoiser: ") + what + " has " + std::to_string(got) + " values, expected " +
                           std::to_string(want));
  };
  if (x.size() != config_.data_size) throw mismatch("input", x.size(), config_.data_size);
  if (cond.physics.size() != config_.physics_dim) throw mismatch("physics latent", cond.physics.size(), config_.physics_dim);
  if (cond.visual.size() != config_.visual_dim) throw mismatch("visual latent", cond.visual.size(), config_.visual_dim);
  std::vector<double> in;
  in.reserve(config_.input_size());
  in.insert(in.end(), x.begin(), x.end());
  const auto emb = time_embedding(t, config_.time_dim);
  in.insert(in.end(), emb.begin(), emb.end());
  // Condition vectors enter with unit-scale norm so that their width does
  // not swamp the data part of the input.
  const double ps = config_.physics_dim ? 1.0 / std::sqrt(static_cast<double>(config_.physics_dim)) : 0.0;
  const double vs = config_.visual_dim ? 1.0 / std::sqrt(static_cast<double>(config_.visual_dim)) : 0.0;
  for (double v : cond.physics) in.push_back(ps * v);
  for (double v : cond.visual) in.push_back(vs * v);
  return in;
}

void ToyDenoiser::hidden_layer(std::span<const double> input, std::vector<double>& pre,
                               std::vector<double>& act) const {
  const std::size_t in = config_.input_size();
  const std::size_t h = config_.hidden;
  const double* w1 = params_.data();
  const double* b1 = w1 + h * in;
  pre.resize(h);
  act.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double* row = w1 + j * in;
    double acc = b1[j];
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * input[i];
    pre[j] = acc;
    act[j] = acc * sigmoid(acc);
  }
}

std::vector<double> ToyDenoiser::predict(std::span<const double> x, std::size_t t, const ConditionPair& cond) const {
  const auto input = assemble_input(x, t, cond);
  std::vector<double> pre, act;
  hidden_layer(input, pre, act);
  const std::size_t in = config_.input_size();
  const std::size_t h = config_.hidden;
  const double* w2 = params_.data() + h * in + h;
  const double* b2 = w2 + config_.data_size * h;
  std::vector<double> out(config_.data_size);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double* row = w2 + k * h;
    double acc = b2[k];
    for (std::size_t j = 0; j < h; ++j) acc += row[j] * act[j];
    out[k] = acc;
  }
  return out;
}

double ToyDenoiser::l1_backward(std::span<const double> x, std::size_t t, const ConditionPair& cond,
                                std::span<const double> target, std::span<double> grad) const {
  if (target.size() != config_.data_size) throw InvalidArgument("toy denoiser: target size mismatch");
  if (grad.size() != params_.size()) throw InvalidArgument("toy denoiser: gradient size mismatch");
  const auto input = assemble_input(x, t, cond);
  std::vector<double> pre, act;
  hidden_layer(input, pre, act);

  const std::size_t in = config_.input_size();
  const std::size_t h = config_.hidden;
  const std::size_t d = config_.data_size;
  const double* w2 = params_.data() + h * in + h;
  const double* b2 = w2 + d * h;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * in;
  double* g_w2 = g_b1 + h;
  double* g_b2 = g_w2 + d * h;

  // d/d out of mean |target - out| is sign(out - target) / d.
  double loss = 0.0;
  std::vector<double> g_act(h, 0.0);
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double* row = w2 + k * h;
    double out = b2[k];
    for (std::size_t j = 0; j < h; ++j) out += row[j] * act[j];
    const double err = out - target[k];
    loss += std::abs(err);
    const double g = err > 0.0 ? inv_d : (err < 0.0 ? -inv_d : 0.0);
    if (g == 0.0) continue;
    g_b2[k] += g;
    double* g_row = g_w2 + k * h;
    for (std::size_t j = 0; j < h; ++j) {
      g_row[j] += g * act[j];
      g_act[j] += g * row[j];
    }
  }

  for (std::size_t j = 0; j < h; ++j) {
    const double s = sigmoid(pre[j]);
    const double g = g_act[j] * (s + pre[j] * s * (1.0 - s));
    if (g == 0.0) continue;
    g_b1[j] += g;
    double* g_row = g_w1 + j * in;
    for (std::size_t i = 0; i < in; ++i) g_row[i] += g * input[i];
  }
  return loss * inv_d;
}

}  // namespace impactsynth::diffusion
