#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/rng.hpp"
#include "impactsynth/diffusion/checkpoint.hpp"
#include "impactsynth/diffusion/grid.hpp"
#include "impactsynth/diffusion/process.hpp"
#include "impactsynth/diffusion/schedule.hpp"
#include "impactsynth/diffusion/toy_denoiser.hpp"
#include "impactsynth/diffusion/train.hpp"
#include "support.hpp"

namespace impactsynth::diffusion {
namespace {

double cosine_f(double t, double steps) {
  constexpr double s = 0.008;
  const double c = std::cos((t / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
  return c * c;
}

TEST(Schedule, CosineMatchesClosedFormAndBounds) {
  const auto s = make_schedule(ScheduleKind::Cosine, 1000);
  ASSERT_EQ(s.steps(), 1000u);
  EXPECT_GE(s.alpha_bar_at(1), 0.999);
  EXPECT_LE(s.alpha_bar_at(1000), 1e-3);
  double product = 1.0;
  for (std::size_t t = 1; t <= 1000; ++t) {
    EXPECT_GT(s.beta_at(t), 0.0);
    EXPECT_LE(s.beta_at(t), kMaxBeta);
    EXPECT_DOUBLE_EQ(s.alpha_at(t), 1.0 - s.beta_at(t));
    if (t > 1) EXPECT_LT(s.alpha_bar_at(t), s.alpha_bar_at(t - 1));
    product *= 1.0 - s.beta_at(t);
    EXPECT_NEAR(product, s.alpha_bar_at(t), 1e-12);
    if (t < 1000) EXPECT_NEAR(s.alpha_bar_at(t), cosine_f(t, 1000) / cosine_f(0, 1000), 1e-12) << "t " << t;
  }
  EXPECT_EQ(s.alpha_bar_at(0), 1.0);
}

TEST(Schedule, LinearSpansTheStandardRange) {
  const auto s = make_schedule(ScheduleKind::Linear, 1000);
  EXPECT_NEAR(s.beta_at(1), 1e-4, 1e-15);
  EXPECT_NEAR(s.beta_at(1000), 0.02, 1e-15);
  EXPECT_NEAR(s.beta_at(500) - s.beta_at(499), (0.02 - 1e-4) / 999.0, 1e-15);
  const auto short_run = make_schedule(ScheduleKind::Linear, 100);
  EXPECT_NEAR(short_run.beta_at(1), 1e-3, 1e-15);
  EXPECT_NEAR(short_run.beta_at(100), 0.2, 1e-15);
}

TEST(Schedule, SingleStepScheduleIsValid) {
  for (auto kind : {ScheduleKind::Cosine, ScheduleKind::Linear}) {
    const auto s = make_schedule(kind, 1);
    ASSERT_EQ(s.steps(), 1u);
    EXPECT_GT(s.beta_at(1), 0.0);
    EXPECT_LT(s.beta_at(1), 1.0);
    EXPECT_NEAR(s.alpha_bar_at(1), 1.0 - s.beta_at(1), 1e-15);
  }
  EXPECT_THROW(make_schedule(ScheduleKind::Cosine, 0), InvalidArgument);
}

TEST(Schedule, KindNamesRoundTrip) {
  EXPECT_EQ(parse_schedule_kind("cosine"), ScheduleKind::Cosine);
  EXPECT_EQ(parse_schedule_kind(to_string(ScheduleKind::Linear)), ScheduleKind::Linear);
  EXPECT_THROW(parse_schedule_kind("quadratic"), InvalidArgument);
}

TEST(ForwardProcess, StepZeroIsCleanAndVanishingSignalIsNoise) {
  const auto s = make_schedule(ScheduleKind::Cosine, 100);
  const std::vector<double> x0{0.3, -1.2, 0.7}, eps{1.0, 2.0, -0.5};
  EXPECT_EQ(forward_sample(x0, 0, eps, s), x0);
  NoiseSchedule degenerate;
  degenerate.beta = {1.0};
  degenerate.alpha = {0.0};
  degenerate.alpha_bar = {0.0};
  EXPECT_EQ(forward_sample(x0, 1, eps, degenerate), eps);
  EXPECT_THROW(forward_sample(x0, 101, eps, s), InvalidArgument);
}

TEST(ForwardProcess, ChainedStepsMatchClosedFormMoments) {
  const auto s = make_schedule(ScheduleKind::Cosine, 1000);
  const std::vector<double> x0{1.0, -0.5};
  const std::size_t trials = 4000;
  for (std::size_t t : {10u, 100u}) {
    Rng rng(t);
    std::vector<double> sum_c(2, 0.0), sq_c(2, 0.0), sum_m(2, 0.0), sq_m(2, 0.0);
    std::vector<double> eps(2);
    for (std::size_t n = 0; n < trials; ++n) {
      std::vector<double> x = x0;
      for (std::size_t k = 1; k <= t; ++k) {
        rng.fill_normal(eps);
        x = forward_step(x, k, eps, s);
      }
      rng.fill_normal(eps);
      const auto m = forward_sample(x0, t, eps, s);
      for (std::size_t i = 0; i < 2; ++i) {
        sum_c[i] += x[i];
        sq_c[i] += x[i] * x[i];
        sum_m[i] += m[i];
        sq_m[i] += m[i] * m[i];
      }
    }
    const double ab = s.alpha_bar_at(t);
    for (std::size_t i = 0; i < 2; ++i) {
      const double mean_c = sum_c[i] / trials, mean_m = sum_m[i] / trials;
      const double var_c = sq_c[i] / trials - mean_c * mean_c, var_m = sq_m[i] / trials - mean_m * mean_m;
      const double var = 1.0 - ab;
      EXPECT_LT(std::abs(mean_c - mean_m), 3.0 * std::sqrt(2.0 * var / trials)) << "t " << t;
      EXPECT_LT(std::abs(var_c - var_m), 3.0 * std::sqrt(2.0 * 2.0 * var * var / trials)) << "t " << t;
      // Sanity check against the analytic mean, loose enough to never flake.
      EXPECT_NEAR(mean_m, std::sqrt(ab) * x0[i], 5.0 * std::sqrt(var / trials));
    }
  }
}

// Knows x0 and recovers the exact noise from x_t.
class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(std::vector<double> x0, NoiseSchedule s) : x0_(std::move(x0)), s_(std::move(s)) {}
  std::vector<double> predict(std::span<const double> x, std::size_t t, const ConditionPair&) const override {
    const double ab = s_.alpha_bar_at(t);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - std::sqrt(ab) * x0_[i]) / std::sqrt(1.0 - ab);
    return out;
  }

 private:
  std::vector<double> x0_;
  NoiseSchedule s_;
};

TEST(TrainingLoss, PerfectPredictorHasZeroLoss) {
  const auto s = make_schedule(ScheduleKind::Cosine, 1000);
  const std::vector<double> x0{0.2, -0.4, 0.9, 0.0};
  const OracleDenoiser oracle(x0, s);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(training_loss(oracle, x0, {}, s, rng), 0.0, 1e-9);
}

TEST(TrainingLoss, ZeroPredictorCostsMeanAbsoluteNormal) {
  const auto s = make_schedule(ScheduleKind::Cosine, 1000);
  const std::vector<double> x0(8, 0.5);
  const ZeroDenoiser zero;
  Rng rng(2);
  double total = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) total += training_loss(zero, x0, {}, s, rng);
  EXPECT_NEAR(total / n, std::sqrt(2.0 / std::numbers::pi), 0.05 * std::sqrt(2.0 / std::numbers::pi));
}

TEST(TrainingLoss, GradientsNeedATrainableDenoiser) {
  const auto s = make_schedule(ScheduleKind::Cosine, 10);
  std::vector<double> grad(3);
  Rng rng(0);
  EXPECT_THROW(training_loss(ZeroDenoiser{}, std::vector<double>(3), {}, s, rng, grad), InvalidArgument);
}

ToyConfig small_toy() {
  ToyConfig c;
  c.data_size = 16;
  c.hidden = 12;
  c.time_dim = 8;
  c.physics_dim = 6;
  c.visual_dim = 10;
  c.seed = 3;
  return c;
}

ConditionPair random_cond(const ToyConfig& c, std::uint64_t seed) {
  return {test::gaussian_noise(c.physics_dim, seed), test::gaussian_noise(c.visual_dim, seed + 1)};
}

TEST(ToyDenoiser, GradientMatchesCentralDifferences) {
  const ToyConfig config = small_toy();
  ToyDenoiser model(config);
  // Non-zero biases so that every block is exercised.
  Rng init(5);
  for (double& p : model.parameters()) p += 0.05 * init.normal();
  const auto x = test::gaussian_noise(16, 10);
  const auto target = test::gaussian_noise(16, 11);
  const auto cond = random_cond(config, 12);
  const std::size_t t = 37;

  std::vector<double> grad(model.parameters().size(), 0.0);
  model.l1_backward(x, t, cond, target, grad);

  auto residual_signs = [&](const ToyDenoiser& m) {
    const auto pred = m.predict(x, t, cond);
    std::vector<int> signs(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) signs[i] = target[i] > pred[i] ? 1 : -1;
    return signs;
  };
  const auto base_signs = residual_signs(model);
  const double h = 1e-4;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    ToyDenoiser plus = model, minus = model;
    plus.parameters()[k] += h;
    minus.parameters()[k] -= h;
    // The L1 loss has kinks; skip coordinates where a residual changes sign.
    if (residual_signs(plus) != base_signs || residual_signs(minus) != base_signs) continue;
    std::vector<double> scratch(grad.size());
    const double lp = plus.l1_backward(x, t, cond, target, scratch);
    const double lm = minus.l1_backward(x, t, cond, target, scratch);
    const double fd = (lp - lm) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
    EXPECT_LT(std::abs(fd - grad[k]) / scale, 1e-4) << "parameter " << k;
    ++checked;
  }
  EXPECT_GT(checked, grad.size() * 9 / 10);
}

TEST(ToyDenoiser, RejectsWrongShapes) {
  const ToyConfig config = small_toy();
  const ToyDenoiser model(config);
  const auto cond = random_cond(config, 1);
  EXPECT_THROW(model.predict(std::vector<double>(15), 1, cond), InvalidArgument);
  EXPECT_THROW(model.predict(std::vector<double>(16), 1, {cond.physics, {}}), InvalidArgument);
  EXPECT_THROW(ToyDenoiser(config, std::vector<double>(3)), InvalidArgument);
  EXPECT_EQ(model.parameters().size(), ToyDenoiser::parameter_count(config));
}

TEST(TimeEmbedding, StartsAtSinZeroCosOne) {
  const auto e = time_embedding(0, 8);
  ASSERT_EQ(e.size(), 8u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(e[i], 0.0);
    EXPECT_EQ(e[4 + i], 1.0);
  }
  EXPECT_NEAR(time_embedding(3, 8)[0], std::sin(3.0), 1e-15);
  EXPECT_THROW(time_embedding(1, 7), InvalidArgument);
}

TEST(Sampler, ZeroEtaIsBitDeterministic) {
  const ToyConfig config = small_toy();
  const ToyDenoiser model(config);
  const auto s = make_schedule(ScheduleKind::Cosine, 50);
  const auto cond = random_cond(config, 4);
  const auto x_T = test::gaussian_noise(16, 5);
  Rng a(1), b(2);
  EXPECT_EQ(sample_from(model, cond, s, 0.0, a, x_T), sample_from(model, cond, s, 0.0, b, x_T));
}

TEST(Sampler, SingleStepReducesToOneDenoisingUpdate) {
  const auto s = make_schedule(ScheduleKind::Linear, 1);
  const GaussianOptimalDenoiser d(s);
  const std::vector<double> x1{0.4, -1.0, 2.0};
  Rng rng(0);
  const auto out = sample_from(d, {}, s, 1.0, rng, x1);
  const auto eps = d.predict(x1, 1, {});
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const double expected = (x1[i] - std::sqrt(1.0 - s.alpha_bar_at(1)) * eps[i]) / std::sqrt(s.alpha_at(1));
    EXPECT_NEAR(out[i], expected, 1e-12);
  }
}

TEST(Sampler, OptimalDenoiserReproducesStandardNormal) {
  const auto s = make_schedule(ScheduleKind::Cosine, 1000);
  const GaussianOptimalDenoiser d(s);
  Rng rng(123);
  const std::size_t n = 2000, dim = 4;
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = sample(d, {}, s, 1.0, rng, dim);
    for (std::size_t i = 0; i < dim; ++i) {
      sum[i] += x[i];
      sq[i] += x[i] * x[i];
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    const double mean = sum[i] / n;
    const double var = sq[i] / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.1);
    EXPECT_GE(var, 0.85);
    EXPECT_LE(var, 1.15);
  }
}

std::vector<TrainingExample> two_materials(const ToyConfig& c) {
  std::vector<TrainingExample> data;
  for (std::size_t k = 0; k < 8; ++k) {
    const std::size_t material = k % 2;
    std::vector<double> x0(c.data_size);
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = material ? 0.8 - 0.1 * (i % 4) : -0.6 + 0.05 * (i / 4);
    data.push_back({x0, random_cond(c, 100 + material)});
  }
  return data;
}

TEST(TrainToy, ZeroLearningRateLeavesParametersUntouched) {
  const ToyConfig config = small_toy();
  const auto s = make_schedule(ScheduleKind::Cosine, 100);
  TrainOptions o;
  o.epochs = 5;
  o.learning_rate = 0.0;
  const auto data = two_materials(config);
  const auto r = train_toy(data, s, config, o);
  const ToyDenoiser fresh(config);
  EXPECT_TRUE(std::equal(fresh.parameters().begin(), fresh.parameters().end(), r.model.parameters().begin()));
  EXPECT_EQ(evaluate_loss(r.model, data, s, 16, 9), evaluate_loss(fresh, data, s, 16, 9));
}

TEST(TrainToy, IsDeterministicAndBeatsZeroPredictor) {
  const ToyConfig config = small_toy();
  const auto s = make_schedule(ScheduleKind::Cosine, 100);
  TrainOptions o;
  o.epochs = 300;
  o.learning_rate = 3e-3;
  o.batch_size = 4;
  const auto data = two_materials(config);
  const auto a = train_toy(data, s, config, o);
  const auto b = train_toy(data, s, config, o);
  EXPECT_TRUE(std::equal(a.model.parameters().begin(), a.model.parameters().end(), b.model.parameters().begin()));
  ASSERT_EQ(a.report.epoch_loss.size(), 300u);
  const double trained = evaluate_loss(a.model, data, s, 64, 7);
  const double baseline = evaluate_loss(ZeroDenoiser{}, data, s, 64, 7);
  EXPECT_LT(trained, 0.8 * baseline);
}

TEST(TrainToy, RejectsMismatchedData) {
  const ToyConfig config = small_toy();
  const auto s = make_schedule(ScheduleKind::Cosine, 10);
  EXPECT_THROW(train_toy({}, s, config, {}), InvalidArgument);
  auto data = two_materials(config);
  data[3].x0.pop_back();
  EXPECT_THROW(train_toy(data, s, config, {}), InvalidArgument);
}

TEST(Checkpoint, RoundTripsAtSinglePrecision) {
  test::TempDir dir;
  ToyCheckpoint ckpt;
  ckpt.config = small_toy();
  ckpt.schedule = ScheduleKind::Linear;
  ckpt.steps = 77;
  ckpt.grid_rows = 4;
  ckpt.grid_cols = 4;
  const ToyDenoiser model(ckpt.config);
  ckpt.parameters.assign(model.parameters().begin(), model.parameters().end());
  ckpt.metadata["note"] = "hello";
  save_checkpoint(dir / "ck.json", ckpt);
  const auto back = load_checkpoint(dir / "ck.json");
  EXPECT_EQ(back.config, ckpt.config);
  EXPECT_EQ(back.schedule, ckpt.schedule);
  EXPECT_EQ(back.steps, 77u);
  EXPECT_EQ(back.grid_rows, 4u);
  EXPECT_EQ(back.metadata.at("note"), "hello");
  ASSERT_EQ(back.parameters.size(), ckpt.parameters.size());
  for (std::size_t i = 0; i < ckpt.parameters.size(); ++i) {
    EXPECT_EQ(back.parameters[i], static_cast<double>(static_cast<float>(ckpt.parameters[i])));
  }
}

TEST(Checkpoint, MissingOrDamagedFilesAreDataErrors) {
  test::TempDir dir;
  EXPECT_THROW(load_checkpoint(dir / "nothing.json"), DataError);
  ToyCheckpoint ckpt;
  ckpt.config = small_toy();
  ckpt.grid_rows = 4;
  ckpt.grid_cols = 4;
  const ToyDenoiser model(ckpt.config);
  ckpt.parameters.assign(model.parameters().begin(), model.parameters().end());
  save_checkpoint(dir / "ck.json", ckpt);
  std::filesystem::remove(dir / "ck.json.b2.pdt1");
  EXPECT_THROW(load_checkpoint(dir / "ck.json"), DataError);
}

TEST(Grid, DecibelMappingCoversSilenceToFullScale) {
  EXPECT_EQ(db_to_unit(-80.0), -1.0);
  EXPECT_EQ(db_to_unit(0.0), 1.0);
  EXPECT_EQ(db_to_unit(-40.0), 0.0);
  EXPECT_EQ(db_to_unit(-120.0), -1.0);
  EXPECT_EQ(db_to_unit(6.0), 1.0);
  EXPECT_EQ(unit_to_db(-1.0), -80.0);
  EXPECT_EQ(unit_to_db(2.0), 0.0);
  for (double db = -80.0; db <= 0.0; db += 7.3) EXPECT_NEAR(unit_to_db(db_to_unit(db)), db, 1e-12);
}

TEST(Grid, AreaDownsampleAveragesBlocks) {
  Grid g{4, 4, {}};
  for (int i = 0; i < 16; ++i) g.data.push_back(i);
  const Grid d = downsample_area(g, 2, 2);
  ASSERT_EQ(d.data.size(), 4u);
  EXPECT_DOUBLE_EQ(d.at(0, 0), (0 + 1 + 4 + 5) / 4.0);
  EXPECT_DOUBLE_EQ(d.at(1, 1), (10 + 11 + 14 + 15) / 4.0);
  // Uneven partitions keep the overall mean.
  Grid odd{1025, 44, std::vector<double>(1025 * 44)};
  Rng rng(3);
  rng.fill_normal(odd.data);
  const Grid small = downsample_area(odd, 8, 8);
  double big_mean = 0.0, small_mean = 0.0;
  for (double v : odd.data) big_mean += v / odd.data.size();
  for (double v : small.data) small_mean += v / small.data.size();
  EXPECT_NEAR(small_mean, big_mean, 1e-12);
}

TEST(Grid, BilinearUpsampleUsesCellCentres) {
  const Grid g{1, 2, {0.0, 1.0}};
  const Grid u = upsample_bilinear(g, 1, 4);
  ASSERT_EQ(u.data.size(), 4u);
  EXPECT_DOUBLE_EQ(u.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(u.at(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(u.at(0, 2), 0.75);
  EXPECT_DOUBLE_EQ(u.at(0, 3), 1.0);
  const Grid flat = upsample_bilinear(Grid{2, 2, {0.5, 0.5, 0.5, 0.5}}, 1025, 44);
  for (double v : flat.data) EXPECT_DOUBLE_EQ(v, 0.5);
  EXPECT_THROW(upsample_bilinear(Grid{2, 2, {1.0}}, 3, 3), InvalidArgument);
}

}  // namespace
}  // namespace impactsynth::diffusion
