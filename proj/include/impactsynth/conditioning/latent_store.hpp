#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "impactsynth/conditioning/encoder.hpp"

namespace impactsynth::conditioning {

struct LatentEntry {
  std::string id;
  std::vector<double> key;    ///< visual latent
  std::vector<double> value;  ///< physics latent

  friend bool operator==(const LatentEntry&, const LatentEntry&) = default;
};

struct QueryResult {
  std::vector<double> value;
  std::string id;
  double distance = 0.0;
};

/// Visual-latent -> physics-latent pairs with exact Euclidean nearest
/// neighbour lookup. Entries are kept sorted by id and stored at float32
/// precision, the precision of the file format.
class LatentStore {
 public:
  LatentStore(std::size_t key_dim, std::size_t value_dim, EncoderConfig encoder = {});

  /// Throws InvalidArgument on a dimension mismatch, an empty or duplicate id,
  /// or non-finite values.
  void add(LatentEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t key_dim() const { return key_dim_; }
  std::size_t value_dim() const { return value_dim_; }
  const EncoderConfig& encoder() const { return encoder_; }
  const std::vector<LatentEntry>& entries() const { return entries_; }

  /// Linear scan; ties go to the lowest id. Throws InvalidArgument when the
  /// store is empty or the key has the wrong dimension.
  QueryResult query(std::span<const double> key) const;

  /// Manifest JSON at `path`, keys and values in `<path>.keys.pdt1` and
  /// `<path>.values.pdt1`.
  void save(const std::filesystem::path& path) const;
  static LatentStore load(const std::filesystem::path& path);

  friend bool operator==(const LatentStore&, const LatentStore&) = default;

 private:
  std::size_t key_dim_;
  std::size_t value_dim_;
  EncoderConfig encoder_;
  std::vector<LatentEntry> entries_;
};

inline QueryResult query_nearest(const LatentStore& store, std::span<const double> key) { return store.query(key); }

/// One training clip: its id, visual latent file and priors file.
struct StorePair {
  std::string id;
  std::filesystem::path visual;
  std::filesystem::path priors;
};

/// Reads every pair, fits the encoder's gamma/weight scaling over the corpus,
/// encodes the priors and returns the store. Throws DataError on unreadable
/// files and InvalidArgument on an empty list, duplicate ids or inconsistent
/// dimensions.
LatentStore build_store(std::span<const StorePair> pairs, const EncoderConfig& base);

}  // namespace impactsynth::conditioning
