#ifndef PYCNOFLOW_PYCNO_HPP
#define PYCNOFLOW_PYCNO_HPP

#include <map>
#include <string>
#include <vector>

#include "pycnoflow/driver.hpp"

namespace pycnoflow {

// Per-cell area expansion factor of the composed projection.
struct JacobianGrid {
  GridFrame frame;
  std::vector<double> values;  // row-major, all > 0

  double at(int i, int j) const
  {
    return values[static_cast<size_t>(j) * frame.nx + i];
  }
  double mean() const;
};

// t_l ∘ ... ∘ t_1 applied to p; throws (with the stage index) if an
// intermediate image leaves the frame.
Point compose_at(const ProjectionStack &stack, const Point &p);

// det J approximated as the shoelace area of each mapped grid cell divided
// by the cell's original area.  Throws when a mapped cell is non-positive.
JacobianGrid jacobian_grid(const ProjectionStack &stack, int cells);

using PycnoRaster = DensityGrid;

// rho(x, y) = rho_bar * det J(x, y), on the unprojected frame.
PycnoRaster density_from_jacobian(const JacobianGrid &jacobian, double mean);

// Relative deviation of the raster's integral over each region from the
// region's population, using the original (unprojected) boundaries.
std::map<std::string, double> pycno_check(const PycnoRaster &raster,
                                          const RegionMap &original_map);

}  // namespace pycnoflow

#endif
