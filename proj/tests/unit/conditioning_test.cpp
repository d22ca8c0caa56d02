#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/common/rng.hpp"
#include "impactsynth/common/tensor.hpp"
#include "impactsynth/conditioning/encoder.hpp"
#include "impactsynth/conditioning/latent_store.hpp"
#include "support.hpp"

namespace impactsynth::conditioning {
namespace {

residual::PhysicsPriors priors_with_seed(std::uint64_t seed) {
  residual::PhysicsPriors p;
  p.modes = modal::silent_modes(dsp::StftConfig{});
  Rng rng(seed);
  for (std::size_t b = 3; b < 1000; b += 50) {
    p.modes.modes[b].power = -60.0 * rng.uniform();
    p.modes.modes[b].decay = 300.0 * rng.uniform();
  }
  p.residual = residual::ResidualParams::zeros(100, 44100.0, seed);
  for (std::size_t m = 0; m < 100; ++m) {
    p.residual.weights[m] = 0.05 * rng.uniform();
    p.residual.gamma[m] = 200.0 * rng.uniform();
  }
  return p;
}

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(PhysicsEncoder, SameSeedGivesSameLatent) {
  const auto p = priors_with_seed(1);
  EncoderConfig c;
  c.seed = 5;
  const auto a = PhysicsEncoder(c).encode(p);
  ASSERT_EQ(a.size(), kPhysicsLatentDim);
  EXPECT_EQ(a, PhysicsEncoder(c).encode(p));
  for (double v : a) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  c.seed = 6;
  EXPECT_GT(l2(a, PhysicsEncoder(c).encode(p)), 0.0);
}

TEST(PhysicsEncoder, SinglePowerChangeMovesLatent) {
  auto p = priors_with_seed(2);
  const PhysicsEncoder enc(EncoderConfig{});
  const auto a = enc.encode(p);
  p.modes.modes[503].power = -10.0;
  EXPECT_GT(l2(a, enc.encode(p)), 0.0);
}

TEST(PhysicsEncoder, ZeroInputsGiveSquashedBiases) {
  EncoderConfig c;
  c.seed = 9;
  const PhysicsEncoder enc(c);
  std::vector<std::vector<double>> zeros{std::vector<double>(1025), std::vector<double>(1025), std::vector<double>(1025),
                                         std::vector<double>(100), std::vector<double>(100)};
  const auto a = enc.encode_groups(zeros);
  EXPECT_EQ(a, PhysicsEncoder(c).encode_groups(zeros));
  // Biases are N(0, 0.1^2), so tanh(bias) stays small.
  for (double v : a) EXPECT_LT(std::abs(v), 0.6);
  EXPECT_GT(l2(a, std::vector<double>(a.size(), 0.0)), 0.0);
}

TEST(PhysicsEncoder, RejectsMismatchedPriors) {
  EncoderConfig c;
  c.num_bands = 20;
  EXPECT_THROW(PhysicsEncoder(c).encode(priors_with_seed(1)), InvalidArgument);
}

TEST(PhysicsEncoder, ScalingCoversCorpusRange) {
  const std::vector<residual::PhysicsPriors> corpus{priors_with_seed(1), priors_with_seed(2)};
  const auto c = fit_scaling(corpus, EncoderConfig{});
  double lo = 1e9, hi = -1e9, wmax = 0.0;
  for (const auto& p : corpus) {
    for (double g : p.residual.gamma) lo = std::min(lo, g), hi = std::max(hi, g);
    for (double w : p.residual.weights) wmax = std::max(wmax, w);
  }
  EXPECT_EQ(c.gamma_min, lo);
  EXPECT_EQ(c.gamma_max, hi);
  EXPECT_EQ(c.weight_max, wmax);
  EXPECT_EQ(encoder_config_from_json(to_json(c)), c);
}

LatentStore two_point_store() {
  LatentStore store(2, 3);
  store.add({"first", {0.0, 0.0}, {1.0, 2.0, 3.0}});
  store.add({"second", {1.0, 1.0}, {4.0, 5.0, 6.0}});
  return store;
}

TEST(LatentStore, ReturnsGeometricNearestNeighbour) {
  const auto store = two_point_store();
  const auto r = query_nearest(store, std::vector<double>{0.1, 0.0});
  EXPECT_EQ(r.id, "first");
  EXPECT_NEAR(r.distance, 0.1, 1e-12);
  EXPECT_EQ(r.value, (std::vector<double>{1.0, 2.0, 3.0}));
  const auto exact = store.query(std::vector<double>{1.0, 1.0});
  EXPECT_EQ(exact.id, "second");
  EXPECT_EQ(exact.distance, 0.0);
}

TEST(LatentStore, TiesGoToLowestIdWhateverTheInsertionOrder) {
  LatentStore ab(1, 1), ba(1, 1);
  ab.add({"a", {-1.0}, {10.0}});
  ab.add({"b", {1.0}, {20.0}});
  ba.add({"b", {1.0}, {20.0}});
  ba.add({"a", {-1.0}, {10.0}});
  EXPECT_EQ(ab.query(std::vector<double>{0.0}).id, "a");
  EXPECT_EQ(ba.query(std::vector<double>{0.0}).id, "a");
  EXPECT_EQ(ab, ba);
}

TEST(LatentStore, EmptyStoreAndBadKeysAreErrors) {
  LatentStore store(2, 2);
  try {
    store.query(std::vector<double>{0.0, 0.0});
    FAIL() << "query on an empty store succeeded";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("empty store"), std::string::npos);
  }
  store.add({"x", {0.0, 0.0}, {0.0, 0.0}});
  EXPECT_THROW(store.query(std::vector<double>{0.0}), InvalidArgument);
  EXPECT_THROW(store.add({"x", {1.0, 1.0}, {0.0, 0.0}}), InvalidArgument);
  EXPECT_THROW(store.add({"y", {1.0}, {0.0, 0.0}}), InvalidArgument);
  EXPECT_THROW(store.add({"", {1.0, 1.0}, {0.0, 0.0}}), InvalidArgument);
}

TEST(LatentStore, SavesAndLoadsExactly) {
  test::TempDir dir;
  LatentStore store(3, 2, EncoderConfig{7, 1025, 100, 1.0, 9.0, 0.5});
  store.add({"k1", {0.1, 0.2, 0.3}, {1.0, -1.0}});
  store.add({"k0", {0.4, 0.5, 0.6}, {0.25, 0.5}});
  store.save(dir / "store.json");
  const auto back = LatentStore::load(dir / "store.json");
  EXPECT_EQ(back, store);
  EXPECT_EQ(back.encoder().seed, 7u);
  EXPECT_THROW(LatentStore::load(dir / "absent.json"), DataError);
}

std::vector<StorePair> write_pairs(const test::TempDir& dir, std::size_t n) {
  std::vector<StorePair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "clip" + std::to_string(i);
    StorePair p{id, dir / (id + ".visual.pdt1"), dir / (id + ".priors.json")};
    write_pdt1(p.visual, Tensor({16}, test::gaussian_noise(16, i)));
    residual::write_priors(p.priors, priors_with_seed(10 + i));
    pairs.push_back(p);
  }
  return pairs;
}

TEST(BuildStore, BuildsOneEntryPerPairAndPairsLatents) {
  test::TempDir dir;
  const auto pairs = write_pairs(dir, 3);
  const auto store = build_store(pairs, EncoderConfig{});
  EXPECT_EQ(store.size(), 3u);
  EXPECT_EQ(store.key_dim(), 16u);
  EXPECT_EQ(store.value_dim(), kPhysicsLatentDim);
  const auto key = read_pdt1(pairs[1].visual).data;
  const auto hit = store.query(key);
  EXPECT_EQ(hit.id, "clip1");
  EXPECT_EQ(hit.distance, 0.0);
  const PhysicsEncoder enc(store.encoder());
  const auto mu = enc.encode(residual::read_priors(pairs[1].priors));
  for (std::size_t i = 0; i < mu.size(); ++i) EXPECT_EQ(hit.value[i], static_cast<double>(static_cast<float>(mu[i])));
}

TEST(BuildStore, EmptyListIsAnError) {
  try {
    build_store({}, EncoderConfig{});
    FAIL() << "empty store was built";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("empty store"), std::string::npos);
  }
}

TEST(BuildStore, RebuildingIsByteIdentical) {
  test::TempDir dir;
  const auto pairs = write_pairs(dir, 3);
  build_store(pairs, EncoderConfig{}).save(dir / "a.json");
  build_store(pairs, EncoderConfig{}).save(dir / "b.json");
  EXPECT_EQ(read_file_bytes(dir / "a.json.keys.pdt1"), read_file_bytes(dir / "b.json.keys.pdt1"));
  EXPECT_EQ(read_file_bytes(dir / "a.json.values.pdt1"), read_file_bytes(dir / "b.json.values.pdt1"));
  // The manifests differ only in the names of their tensor files.
  auto rename = [](std::string text, const std::string& from) {
    for (auto at = text.find(from); at != std::string::npos; at = text.find(from)) text.replace(at, from.size(), "x.json");
    return text;
  };
  EXPECT_EQ(rename(read_file_text(dir / "a.json"), "a.json"), rename(read_file_text(dir / "b.json"), "b.json"));
}

TEST(BuildStore, UnreadableFilesAreDataErrors) {
  test::TempDir dir;
  auto pairs = write_pairs(dir, 2);
  pairs[1].priors = dir / "missing.json";
  EXPECT_THROW(build_store(pairs, EncoderConfig{}), DataError);
}

}  // namespace
}  // namespace impactsynth::conditioning
