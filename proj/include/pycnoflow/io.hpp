#ifndef PYCNOFLOW_IO_HPP
#define PYCNOFLOW_IO_HPP

#include <iosfwd>
#include <string>

#include "pycnoflow/geometry.hpp"
#include "pycnoflow/grid.hpp"

namespace pycnoflow {

// GeoJSON FeatureCollection; coordinates pass through `back` (use the
// identity transform to emit frame coordinates).
std::string region_map_to_geojson(const RegionMap &map,
                                  const AffineTransform &back = {});

// ESRI ASCII grid, rows top to bottom, 9 significant digits.
void write_ascii_grid(const DensityGrid &grid, std::ostream &os);
void write_ascii_grid(const DensityGrid &grid, const std::string &path);
DensityGrid read_ascii_grid(std::istream &is);
DensityGrid read_ascii_grid_file(const std::string &path);

// One rect per raster cell on a black-to-white ramp, with the region
// boundaries overlaid.  Output bytes are deterministic for fixed inputs.
void write_svg_heatmap(const DensityGrid &raster, const RegionMap &map,
                       std::ostream &os);
void write_svg_heatmap(const DensityGrid &raster, const RegionMap &map,
                       const std::string &path);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

}  // namespace pycnoflow

#endif
