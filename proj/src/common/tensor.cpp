#include "impactsynth/common/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>

#include "impactsynth/common/error.hpp"
#include "impactsynth/common/io.hpp"

namespace impactsynth {

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'D', 'T', '1'};
constexpr std::size_t kMaxRank = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : shape(std::move(dims)), data(element_count(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (data.size() != element_count(shape)) {
    throw InvalidArgument("tensor data size " + std::to_string(data.size()) +
                          " does not match its shape");
  }
}

std::size_t Tensor::element_count(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::uint8_t> encode_pdt1(const Tensor& tensor) {
  if (tensor.data.size() != Tensor::element_count(tensor.shape)) {
    throw InvalidArgument("tensor data size does not match its shape");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(8 + 4 * tensor.shape.size() + 4 * tensor.data.size());
  put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
  for (std::size_t d : tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Tensor decode_pdt1(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("not a PDT1 tensor (bad magic)");
  }
  const std::uint32_t rank = get_u32(bytes, 4);
  if (rank > kMaxRank) throw DataError("PDT1 rank " + std::to_string(rank) + " is too large");
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw DataError("truncated PDT1 header");
  Tensor t;
  t.shape.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) t.shape[i] = get_u32(bytes, 8 + 4 * i);
  const std::size_t count = Tensor::element_count(t.shape);
  if (bytes.size() != header + 4 * count) {
    throw DataError("PDT1 payload size does not match shape (expected " +
                    std::to_string(4 * count) + " bytes, have " +
                    std::to_string(bytes.size() - header) + ")");
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return t;
}

void write_pdt1(const std::filesystem::path& path, const Tensor& tensor) {
  write_file_atomic(path, encode_pdt1(tensor));
}

Tensor read_pdt1(const std::filesystem::path& path) {
  try {
    return decode_pdt1(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace impactsynth
