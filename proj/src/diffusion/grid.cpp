#include "impactsynth/diffusion/grid.hpp"

#include <algorithm>
#include <cmath>

#include "impactsynth/common/error.hpp"
#include "impactsynth/dsp/stft.hpp"

namespace impactsynth::diffusion {

namespace {

void check(const Grid& g, std::size_t rows, std::size_t cols) {
  if (g.rows == 0 || g.cols == 0 || g.data.size() != g.rows * g.cols) throw InvalidArgument("grid: malformed source");
  if (rows == 0 || cols == 0) throw InvalidArgument("grid: target shape must be positive");
}

// Overlap of source cells with target cell i along one axis, as weights.
std::vector<std::vector<std::pair<std::size_t, double>>> overlaps(std::size_t from, std::size_t to) {
  std::vector<std::vector<std::pair<std::size_t, double>>> out(to);
  const double ratio = static_cast<double>(from) / static_cast<double>(to);
  for (std::size_t i = 0; i < to; ++i) {
    const double lo = static_cast<double>(i) * ratio;
    const double hi = static_cast<double>(i + 1) * ratio;
    for (auto s = static_cast<std::size_t>(std::floor(lo)); s < from && static_cast<double>(s) < hi; ++s) {
      const double w = std::min(hi, static_cast<double>(s + 1)) - std::max(lo, static_cast<double>(s));
      if (w > 0.0) out[i].emplace_back(s, w / ratio);
    }
  }
  return out;
}

}  // namespace

double db_to_unit(double db) {
  const double floor = dsp::kSilenceDb;
  return 2.0 * (std::clamp(db, floor, 0.0) - floor) / -floor - 1.0;
}

double unit_to_db(double unit) {
  const double floor = dsp::kSilenceDb;
  return floor + (std::clamp(unit, -1.0, 1.0) + 1.0) / 2.0 * -floor;
}

Grid downsample_area(const Grid& source, std::size_t rows, std::size_t cols) {
  check(source, rows, cols);
  const auto ry = overlaps(source.rows, rows);
  const auto rx = overlaps(source.cols, cols);
  Grid out{rows, cols, std::vector<double>(rows * cols, 0.0)};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (const auto& [sr, wr] : ry[r]) {
        for (const auto& [sc, wc] : rx[c]) acc += wr * wc * source.at(sr, sc);
      }
      out.data[r * cols + c] = acc;
    }
  }
  return out;
}

Grid upsample_bilinear(const Grid& source, std::size_t rows, std::size_t cols) {
  check(source, rows, cols);
  auto coords = [](std::size_t from, std::size_t to) {
    std::vector<std::pair<std::size_t, double>> out(to);
    const double ratio = static_cast<double>(from) / static_cast<double>(to);
    for (std::size_t i = 0; i < to; ++i) {
      const double pos = std::clamp((static_cast<double>(i) + 0.5) * ratio - 0.5, 0.0, static_cast<double>(from - 1));
      const auto base = std::min(static_cast<std::size_t>(pos), from - 1);
      out[i] = {base, pos - static_cast<double>(base)};
    }
    return out;
  };
  const auto cy = coords(source.rows, rows);
  const auto cx = coords(source.cols, cols);
  Grid out{rows, cols, std::vector<double>(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r) {
    const auto [y0, fy] = cy[r];
    const std::size_t y1 = std::min(y0 + 1, source.rows - 1);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto [x0, fx] = cx[c];
      const std::size_t x1 = std::min(x0 + 1, source.cols - 1);
      const double top = (1.0 - fx) * source.at(y0, x0) + fx * source.at(y0, x1);
      const double bottom = (1.0 - fx) * source.at(y1, x0) + fx * source.at(y1, x1);
      out.data[r * cols + c] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

}  // namespace impactsynth::diffusion
