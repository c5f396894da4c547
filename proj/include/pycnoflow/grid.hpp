#ifndef PYCNOFLOW_GRID_HPP
#define PYCNOFLOW_GRID_HPP

#include <cstdint>
#include <vector>

#include "pycnoflow/geometry.hpp"

namespace pycnoflow {

// Regular grid of cells covering a rectangle; samples live at cell centers.
struct GridFrame {
  double x0 = 0.0;
  double y0 = 0.0;
  double cell_w = 1.0;
  double cell_h = 1.0;
  int nx = 0;
  int ny = 0;

  double width() const { return cell_w * nx; }
  double height() const { return cell_h * ny; }
  double cell_area() const { return cell_w * cell_h; }
  double center_x(int i) const { return x0 + (i + 0.5) * cell_w; }
  double center_y(int j) const { return y0 + (j + 0.5) * cell_h; }
  bool same_shape(const GridFrame &o) const
  {
    return nx == o.nx && ny == o.ny;
  }
};

GridFrame make_grid_frame(const Rect &rect, int cells);

struct DensityGrid {
  GridFrame frame;
  std::vector<double> values;  // row-major, index j * nx + i

  DensityGrid() = default;
  explicit DensityGrid(const GridFrame &f, double fill = 0.0)
    : frame(f), values(static_cast<size_t>(f.nx) * f.ny, fill)
  {
  }

  double &at(int i, int j)
  {
    return values[static_cast<size_t>(j) * frame.nx + i];
  }
  double at(int i, int j) const
  {
    return values[static_cast<size_t>(j) * frame.nx + i];
  }

  double mass() const;  // sum of value * cell area
  double min_value() const;
  double max_value() const;
};

struct LabelGrid {
  static constexpr int32_t exterior = -1;

  GridFrame frame;
  std::vector<int32_t> labels;  // region index or `exterior`

  LabelGrid() = default;
  explicit LabelGrid(const GridFrame &f)
    : frame(f), labels(static_cast<size_t>(f.nx) * f.ny, exterior)
  {
  }

  int32_t &at(int i, int j)
  {
    return labels[static_cast<size_t>(j) * frame.nx + i];
  }
  int32_t at(int i, int j) const
  {
    return labels[static_cast<size_t>(j) * frame.nx + i];
  }
};

// Bilinear resampling of cell-center values (clamped at the frame edge).
DensityGrid resample(const DensityGrid &src, const GridFrame &target);

// Maps a frame-coordinate raster back through the fitting transform:
// coordinates via the inverse affine, densities scaled so cell masses are
// preserved.
DensityGrid raster_to_input_units(const DensityGrid &raster,
                                  const AffineTransform &to_frame);

}  // namespace pycnoflow

#endif
