#ifndef PYCNOFLOW_RASTERIZE_HPP
#define PYCNOFLOW_RASTERIZE_HPP

#include <map>
#include <string>

#include "pycnoflow/geometry.hpp"
#include "pycnoflow/grid.hpp"

namespace pycnoflow {

// Scanline point-in-polygon on cell centers, even-odd rule.  Cells claimed
// by more than one region keep the first-declared label (warned on stderr).
LabelGrid rasterize_labels(const RegionMap &map, int cells);

// Spatially averaged density: sum(P_i) / sum(A_i).
double mean_density(const RegionMap &map);

// P_i / A_i inside region i, the mean density outside all regions.
DensityGrid plateau_density(const RegionMap &map, const LabelGrid &labels);

// density - mean (unit Jacobian factor, the first-iteration case).
DensityGrid residual_density(const DensityGrid &density, double mean);

// density - mean * jacobian, cellwise.
DensityGrid residual_density(const DensityGrid &density, double mean,
                             const DensityGrid &jacobian_factor);

// Midpoint-rule integral of the density over each labeled region.
std::map<std::string, double> integrate_over_regions(
  const DensityGrid &density, const LabelGrid &labels, const RegionMap &map);

}  // namespace pycnoflow

#endif
