#include "pycnoflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pycnoflow {

GridFrame make_grid_frame(const Rect &rect, int cells)
{
  if (cells < 1 || rect.width <= 0.0 || rect.height <= 0.0) {
    throw std::runtime_error("invalid grid frame");
  }
  GridFrame f;
  f.x0 = rect.x0;
  f.y0 = rect.y0;
  f.nx = cells;
  f.ny = cells;
  f.cell_w = rect.width / cells;
  f.cell_h = rect.height / cells;
  return f;
}

double DensityGrid::mass() const
{
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  return sum * frame.cell_area();
}

double DensityGrid::min_value() const
{
  return *std::min_element(values.begin(), values.end());
}

double DensityGrid::max_value() const
{
  return *std::max_element(values.begin(), values.end());
}

DensityGrid raster_to_input_units(const DensityGrid &raster,
                                  const AffineTransform &to_frame)
{
  DensityGrid out = raster;
  const Point origin =
    to_frame.inverse({raster.frame.x0, raster.frame.y0});
  out.frame.x0 = origin.x;
  out.frame.y0 = origin.y;
  out.frame.cell_w = raster.frame.cell_w / to_frame.scale;
  out.frame.cell_h = raster.frame.cell_h / to_frame.scale;
  const double s2 = to_frame.scale * to_frame.scale;
  for (double &v : out.values) {
    v *= s2;
  }
  return out;
}

DensityGrid resample(const DensityGrid &src, const GridFrame &target)
{
  DensityGrid out(target);
  const GridFrame &s = src.frame;
  for (int j = 0; j < target.ny; ++j) {
    const double y = target.center_y(j);
    double v = (y - s.y0) / s.cell_h - 0.5;
    v = std::clamp(v, 0.0, static_cast<double>(s.ny - 1));
    const int j0 = std::min(static_cast<int>(v), s.ny - 2 >= 0 ? s.ny - 2 : 0);
    const double fy = v - j0;
    for (int i = 0; i < target.nx; ++i) {
      const double x = target.center_x(i);
      double u = (x - s.x0) / s.cell_w - 0.5;
      u = std::clamp(u, 0.0, static_cast<double>(s.nx - 1));
      const int i0 =
        std::min(static_cast<int>(u), s.nx - 2 >= 0 ? s.nx - 2 : 0);
      const double fx = u - i0;
      const double a = src.at(i0, j0);
      const double b = src.at(std::min(i0 + 1, s.nx - 1), j0);
      const double c = src.at(i0, std::min(j0 + 1, s.ny - 1));
      const double d =
        src.at(std::min(i0 + 1, s.nx - 1), std::min(j0 + 1, s.ny - 1));
      out.at(i, j) = (1 - fy) * ((1 - fx) * a + fx * b) +
                     fy * ((1 - fx) * c + fx * d);
    }
  }
  return out;
}

}  // namespace pycnoflow
