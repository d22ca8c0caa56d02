#include "impactsynth/conditioning/latent_store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"
#include "impactsynth/common/tensor.hpp"

namespace impactsynth::conditioning {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "impactsynth-latent-store";
constexpr int kVersion = 1;

std::filesystem::path sibling(const std::filesystem::path& path, const char* suffix) {
  return std::filesystem::path(path.string() + suffix);
}

std::vector<double> to_float_precision(std::vector<double> v) {
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  return v;
}

}  // namespace

LatentStore::LatentStore(std::size_t key_dim, std::size_t value_dim, EncoderConfig encoder)
    : key_dim_(key_dim), value_dim_(value_dim), encoder_(encoder) {
  if (key_dim == 0 || value_dim == 0) throw InvalidArgument("latent store: dimensions must be positive");
}

void LatentStore::add(LatentEntry entry) {
  if (entry.id.empty()) throw InvalidArgument("latent store: empty clip id");
  if (entry.key.size() != key_dim_) {
    throw InvalidArgument("latent store: key for '" + entry.id + "' has " + std::to_string(entry.key.size()) +
                          " values, store keys have " + std::to_string(key_dim_));
  }
  if (entry.value.size() != value_dim_) {
    throw InvalidArgument("latent store: value for '" + entry.id + "' has " + std::to_string(entry.value.size()) +
                          " values, store values have " + std::to_string(value_dim_));
  }
  for (const auto* v : {&entry.key, &entry.value}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw InvalidArgument("latent store: non-finite values for '" + entry.id + "'");
    }
  }
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), entry.id,
                              [](const LatentEntry& e, const std::string& id) { return e.id < id; });
  if (pos != entries_.end() && pos->id == entry.id) throw InvalidArgument("latent store: duplicate clip id '" + entry.id + "'");
  entry.key = to_float_precision(std::move(entry.key));
  entry.value = to_float_precision(std::move(entry.value));
  entries_.insert(pos, std::move(entry));
}

QueryResult LatentStore::query(std::span<const double> key) const {
  if (entries_.empty()) throw InvalidArgument("latent store: empty store");
  if (key.size() != key_dim_) {
    throw InvalidArgument("latent store: query has " + std::to_string(key.size()) + " values, store keys have " +
                          std::to_string(key_dim_));
  }
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    double sq = 0.0;
    const auto& k = entries_[i].key;
    for (std::size_t j = 0; j < key_dim_; ++j) {
      const double d = k[j] - key[j];
      sq += d * d;
    }
    // Entries are sorted by id, so a strict comparison keeps the lowest id on ties.
    if (sq < best_sq) {
      best_sq = sq;
      best = i;
    }
  }
  return {entries_[best].value, entries_[best].id, std::sqrt(best_sq)};
}

void LatentStore::save(const std::filesystem::path& path) const {
  const std::size_t n = entries_.size();
  Tensor keys({n, key_dim_});
  Tensor values({n, value_dim_});
  json ids = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(entries_[i].key.begin(), entries_[i].key.end(), keys.data.begin() + static_cast<std::ptrdiff_t>(i * key_dim_));
    std::copy(entries_[i].value.begin(), entries_[i].value.end(),
              values.data.begin() + static_cast<std::ptrdiff_t>(i * value_dim_));
    ids.push_back(entries_[i].id);
  }
  const auto keys_path = sibling(path, ".keys.pdt1");
  const auto values_path = sibling(path, ".values.pdt1");
  write_pdt1(keys_path, keys);
  write_pdt1(values_path, values);
  const json doc = {{"format", kFormat},
                    {"version", kVersion},
                    {"key_dim", key_dim_},
                    {"value_dim", value_dim_},
                    {"encoder", to_json(encoder_)},
                    {"ids", std::move(ids)},
                    {"keys", keys_path.filename().string()},
                    {"values", values_path.filename().string()}};
  write_file_atomic(path, doc.dump(1) + "\n");
}

LatentStore LatentStore::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat || doc.at("version").get<int>() != kVersion) {
      throw DataError(path.string() + ": not a latent store");
    }
    const auto key_dim = doc.at("key_dim").get<std::size_t>();
    const auto value_dim = doc.at("value_dim").get<std::size_t>();
    const auto ids = doc.at("ids").get<std::vector<std::string>>();
    LatentStore store(key_dim, value_dim, encoder_config_from_json(doc.at("encoder")));
    const Tensor keys = read_pdt1(path.parent_path() / doc.at("keys").get<std::string>());
    const Tensor values = read_pdt1(path.parent_path() / doc.at("values").get<std::string>());
    if (keys.size() != ids.size() * key_dim || values.size() != ids.size() * value_dim) {
      throw DataError(path.string() + ": key/value tensors do not match the manifest");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      LatentEntry e;
      e.id = ids[i];
      e.key.assign(keys.data.begin() + static_cast<std::ptrdiff_t>(i * key_dim),
                   keys.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * key_dim));
      e.value.assign(values.data.begin() + static_cast<std::ptrdiff_t>(i * value_dim),
                     values.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * value_dim));
      store.add(std::move(e));
    }
    return store;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

LatentStore build_store(std::span<const StorePair> pairs, const EncoderConfig& base) {
  if (pairs.empty()) throw InvalidArgument("empty store: no clips given");
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (!seen.insert(p.id).second) throw InvalidArgument("duplicate clip id '" + p.id + "'");
  }
  std::vector<residual::PhysicsPriors> priors;
  std::vector<std::vector<double>> keys;
  for (const auto& p : pairs) {
    priors.push_back(residual::read_priors(p.priors));
    keys.push_back(read_pdt1(p.visual).data);
  }
  EncoderConfig config = fit_scaling(priors, base);
  config.num_modes = priors.front().modes.size();
  config.num_bands = priors.front().residual.num_bands();
  const PhysicsEncoder encoder(config);
  LatentStore store(keys.front().size(), kPhysicsLatentDim, config);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    store.add({pairs[i].id, std::move(keys[i]), encoder.encode(priors[i])});
  }
  return store;
}

}  // namespace impactsynth::conditioning
