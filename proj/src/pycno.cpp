#include "pycnoflow/pycno.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pycnoflow {

double JacobianGrid::mean() const
{
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  return sum / static_cast<double>(values.size());
}

Point compose_at(const ProjectionStack &stack, const Point &p)
{
  Point q = p;
  for (size_t s = 0; s < stack.fields.size(); ++s) {
    try {
      q = apply_displacement(stack.fields[s], q);
    } catch (const std::exception &) {
      throw std::runtime_error("point left the frame at projection stage " +
                               std::to_string(s + 1));
    }
  }
  return q;
}

JacobianGrid jacobian_grid(const ProjectionStack &stack, int cells)
{
  if (cells < 2) {
    throw std::runtime_error("jacobian grid needs at least 2 cells");
  }
  const GridFrame frame = make_grid_frame(
    {stack.frame.x0, stack.frame.y0, stack.frame.width(),
     stack.frame.height()},
    cells);

  // Map the full corner lattice once, then take quadrilateral areas.
  const int n1 = cells + 1;
  std::vector<Point> corners(static_cast<size_t>(n1) * n1);
#pragma omp parallel for schedule(static)
  for (int j = 0; j <= cells; ++j) {
    for (int i = 0; i <= cells; ++i) {
      corners[static_cast<size_t>(j) * n1 + i] = compose_at(
        stack,
        {frame.x0 + i * frame.cell_w, frame.y0 + j * frame.cell_h});
    }
  }

  JacobianGrid jac;
  jac.frame = frame;
  jac.values.resize(static_cast<size_t>(cells) * cells);
  const double inv_cell = 1.0 / frame.cell_area();
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      const Point &a = corners[static_cast<size_t>(j) * n1 + i];
      const Point &b = corners[static_cast<size_t>(j) * n1 + i + 1];
      const Point &c = corners[static_cast<size_t>(j + 1) * n1 + i + 1];
      const Point &d = corners[static_cast<size_t>(j + 1) * n1 + i];
      const double area =
        0.5 * ((b.x - d.x) * (c.y - a.y) - (c.x - a.x) * (b.y - d.y));
      const double det = area * inv_cell;
      if (!(det > 0.0)) {
        throw std::runtime_error("fold detected: nonpositive mapped cell (" +
                                 std::to_string(i) + "," +
                                 std::to_string(j) + ")");
      }
      jac.values[static_cast<size_t>(j) * cells + i] = det;
    }
  }
  return jac;
}

PycnoRaster density_from_jacobian(const JacobianGrid &jacobian, double mean)
{
  if (!(mean > 0.0)) {
    throw std::runtime_error("mean density must be positive");
  }
  PycnoRaster raster(jacobian.frame);
  for (size_t c = 0; c < jacobian.values.size(); ++c) {
    raster.values[c] = mean * jacobian.values[c];
  }
  return raster;
}

std::map<std::string, double> pycno_check(const PycnoRaster &raster,
                                          const RegionMap &original_map)
{
  const LabelGrid labels = rasterize_labels(original_map, raster.frame.nx);
  const std::map<std::string, double> integrals =
    integrate_over_regions(raster, labels, original_map);

  std::map<std::string, double> errors;
  for (const auto &region : original_map.regions) {
    const double integral = integrals.at(region.id);
    if (region.population > 0.0) {
      errors[region.id] =
        std::abs(integral - region.population) / region.population;
    } else {
      // No meaningful relative scale; compare against the mean-density mass.
      const double reference = mean_density(original_map) * region.area;
      errors[region.id] = std::abs(integral) / reference;
    }
  }
  return errors;
}

}  // namespace pycnoflow
