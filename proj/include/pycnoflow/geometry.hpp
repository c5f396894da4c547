#ifndef PYCNOFLOW_GEOMETRY_HPP
#define PYCNOFLOW_GEOMETRY_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pycnoflow {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Point &a, const Point &b)
{
  return a.x == b.x && a.y == b.y;
}

// Closed ring stored without the duplicated end vertex.
using Ring = std::vector<Point>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

struct Region {
  std::string id;
  std::vector<Polygon> polygons;
  double population = 0.0;
  double area = 0.0;
};

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;
  double height = 0.0;
};

struct RegionMap {
  std::vector<Region> regions;
  Rect frame;
};

// Uniform scale + translation: forward(p) = p * scale + (tx, ty).
struct AffineTransform {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  Point forward(const Point &p) const
  {
    return {p.x * scale + tx, p.y * scale + ty};
  }
  Point inverse(const Point &p) const
  {
    return {(p.x - tx) / scale, (p.y - ty) / scale};
  }
};

double ring_signed_area(const Ring &ring);

// Absolute exterior area minus hole area; throws on a degenerate ring.
double region_area(const Region &region);

Rect bounding_box(const RegionMap &map);

// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features.
// Populations are joined from `values` when given, otherwise read from the
// feature property named by `value_property`.
RegionMap load_regions(
  const std::string &geojson_text,
  const std::optional<std::map<std::string, double>> &values = std::nullopt,
  const std::string &value_property = "population");

// CSV with header `id,value`.
std::map<std::string, double> read_values_csv(const std::string &csv_text);

struct FitResult {
  RegionMap map;
  AffineTransform transform;
};

// Centers the map in an L x L frame, uniformly scaled so the longer bbox
// side spans L/padding cells.
FitResult fit_frame(const RegionMap &map, unsigned grid_size,
                    double padding = 1.5);

// Splits every boundary segment longer than max_segment_length.  Generated
// points are identical (bitwise) for both traversal directions of a shared
// segment, which keeps adjacent regions contiguous after projection.
void densify(RegionMap &map, double max_segment_length);

// Flattened boundary-vertex views used by the projection driver.
std::vector<Point> collect_vertices(const RegionMap &map);
void assign_vertices(RegionMap &map, std::span<const Point> vertices);

}  // namespace pycnoflow

#endif
