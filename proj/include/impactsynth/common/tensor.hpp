#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace impactsynth {

/// Dense row-major tensor of doubles. Persisted as f32 in the PDT1 format.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);
  Tensor(std::vector<std::size_t> dims, std::vector<double> values);

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }

  static std::size_t element_count(std::span<const std::size_t> dims);
};

// PDT1 layout: magic "PDT1", u32 LE rank, rank x u32 LE dims, f32 LE row-major payload.
std::vector<std::uint8_t> encode_pdt1(const Tensor& tensor);
Tensor decode_pdt1(std::span<const std::uint8_t> bytes);

void write_pdt1(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_pdt1(const std::filesystem::path& path);

}  // namespace impactsynth
