#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace impactsynth::diffusion {

/// Row-major rows x cols grid of values.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// [-80, 0] dB <-> [-1, 1], the value range the denoiser works in. Values
/// outside the dB range are clamped first.
double db_to_unit(double db);
double unit_to_db(double unit);

/// Averages over the cells of a uniform partition of the source grid; each
/// target cell covers rows [r*R/rows, (r+1)*R/rows) and likewise for columns,
/// weighted by the overlap area.
Grid downsample_area(const Grid& source, std::size_t rows, std::size_t cols);

/// Bilinear interpolation with cell-centre alignment and edge clamping.
Grid upsample_bilinear(const Grid& source, std::size_t rows, std::size_t cols);

}  // namespace impactsynth::diffusion
