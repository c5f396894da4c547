#include "pycnoflow/rasterize.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace pycnoflow {

namespace {

// Even-odd crossings of the horizontal line y = scan_y with every ring of
// the region.  Edges are treated half-open in y so shared vertices count
// once.
void collect_crossings(const Region &region, double scan_y,
                       std::vector<double> &out)
{
  out.clear();
  auto scan_ring = [&](const Ring &ring) {
    const size_t n = ring.size();
    for (size_t i = 0; i < n; ++i) {
      const Point &a = ring[i];
      const Point &b = ring[(i + 1) % n];
      const bool down = a.y <= scan_y && b.y > scan_y;
      const bool up = b.y <= scan_y && a.y > scan_y;
      if (down || up) {
        out.push_back(a.x + (scan_y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
  };
  for (const auto &poly : region.polygons) {
    scan_ring(poly.exterior);
    for (const auto &hole : poly.holes) {
      scan_ring(hole);
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace

LabelGrid rasterize_labels(const RegionMap &map, int cells)
{
  LabelGrid grid(make_grid_frame(map.frame, cells));
  const GridFrame &f = grid.frame;
  bool warned_overlap = false;

  std::vector<double> crossings;
  for (size_t r = 0; r < map.regions.size(); ++r) {
    const Region &region = map.regions[r];
    for (int j = 0; j < f.ny; ++j) {
      collect_crossings(region, f.center_y(j), crossings);
      // Fill half-open spans [c0, c1): a center on the left boundary is
      // assigned to the region, one on the right boundary is not.
      for (size_t c = 0; c + 1 < crossings.size(); c += 2) {
        const double u0 = (crossings[c] - f.x0) / f.cell_w - 0.5;
        const double u1 = (crossings[c + 1] - f.x0) / f.cell_w - 0.5;
        const int first = std::max(0, static_cast<int>(std::ceil(u0)));
        int last = static_cast<int>(std::ceil(u1)) - 1;
        last = std::min(last, f.nx - 1);
        for (int i = first; i <= last; ++i) {
          int32_t &cell = grid.at(i, j);
          if (cell == LabelGrid::exterior) {
            cell = static_cast<int32_t>(r);
          } else if (cell != static_cast<int32_t>(r) && !warned_overlap) {
            std::cerr << "warning: overlapping regions at cell (" << i << ","
                      << j << "); keeping first-declared region\n";
            warned_overlap = true;
          }
        }
      }
    }
  }
  return grid;
}

double mean_density(const RegionMap &map)
{
  double total_pop = 0.0;
  double total_area = 0.0;
  for (const auto &region : map.regions) {
    total_pop += region.population;
    total_area += region.area;
  }
  if (!(total_area > 0.0)) {
    throw std::runtime_error("zero total area");
  }
  return total_pop / total_area;
}

DensityGrid plateau_density(const RegionMap &map, const LabelGrid &labels)
{
  const double mean = mean_density(map);
  DensityGrid grid(labels.frame);
  std::vector<double> density(map.regions.size());
  for (size_t r = 0; r < map.regions.size(); ++r) {
    density[r] = map.regions[r].population / map.regions[r].area;
  }
  for (size_t c = 0; c < labels.labels.size(); ++c) {
    const int32_t label = labels.labels[c];
    grid.values[c] = label == LabelGrid::exterior ? mean : density[label];
  }
  return grid;
}

DensityGrid residual_density(const DensityGrid &density, double mean)
{
  DensityGrid out = density;
  for (double &v : out.values) {
    v -= mean;
  }
  return out;
}

DensityGrid residual_density(const DensityGrid &density, double mean,
                             const DensityGrid &jacobian_factor)
{
  if (!density.frame.same_shape(jacobian_factor.frame)) {
    throw std::runtime_error("grid shape mismatch");
  }
  DensityGrid out = density;
  for (size_t c = 0; c < out.values.size(); ++c) {
    out.values[c] -= mean * jacobian_factor.values[c];
  }
  return out;
}

std::map<std::string, double> integrate_over_regions(
  const DensityGrid &density, const LabelGrid &labels, const RegionMap &map)
{
  if (!density.frame.same_shape(labels.frame)) {
    throw std::runtime_error("grid shape mismatch");
  }
  std::vector<double> sums(map.regions.size(), 0.0);
  for (size_t c = 0; c < labels.labels.size(); ++c) {
    const int32_t label = labels.labels[c];
    if (label != LabelGrid::exterior) {
      sums[label] += density.values[c];
    }
  }
  std::map<std::string, double> out;
  const double cell_area = density.frame.cell_area();
  for (size_t r = 0; r < map.regions.size(); ++r) {
    out[map.regions[r].id] = sums[r] * cell_area;
  }
  return out;
}

}  // namespace pycnoflow
