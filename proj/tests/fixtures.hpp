#ifndef PYCNOFLOW_TEST_FIXTURES_HPP
#define PYCNOFLOW_TEST_FIXTURES_HPP

#include <cmath>
#include <string>
#include <vector>

#include "pycnoflow/geometry.hpp"

namespace pycnoflow::test {

inline Region make_rect_region(const std::string &id, double x0, double y0,
                               double x1, double y1, double population)
{
  Region region;
  region.id = id;
  region.population = population;
  Polygon poly;
  poly.exterior = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  region.polygons.push_back(poly);
  region.area = region_area(region);
  return region;
}

// Unit square split at x = 0.5; populations default to (3, 1).
inline RegionMap half_split(double pop_left = 3.0, double pop_right = 1.0)
{
  RegionMap map;
  map.regions.push_back(make_rect_region("L", 0.0, 0.0, 0.5, 1.0, pop_left));
  map.regions.push_back(make_rect_region("R", 0.5, 0.0, 1.0, 1.0, pop_right));
  map.frame = {0.0, 0.0, 1.0, 1.0};
  return map;
}

// Unit square split into quadrants with populations 1, 2, 3, 4.
inline RegionMap quadrants()
{
  RegionMap map;
  map.regions.push_back(make_rect_region("SW", 0.0, 0.0, 0.5, 0.5, 1.0));
  map.regions.push_back(make_rect_region("SE", 0.5, 0.0, 1.0, 0.5, 2.0));
  map.regions.push_back(make_rect_region("NW", 0.0, 0.5, 0.5, 1.0, 3.0));
  map.regions.push_back(make_rect_region("NE", 0.5, 0.5, 1.0, 1.0, 4.0));
  map.frame = {0.0, 0.0, 1.0, 1.0};
  return map;
}

// Two equal halves with equal populations: zero residual everywhere.
inline RegionMap uniform_pair()
{
  RegionMap map;
  map.regions.push_back(make_rect_region("A", 0.0, 0.0, 0.5, 1.0, 2.0));
  map.regions.push_back(make_rect_region("B", 0.5, 0.0, 1.0, 1.0, 2.0));
  map.frame = {0.0, 0.0, 1.0, 1.0};
  return map;
}

// Polygonal disc inside the unit square (curved-boundary fixture); the
// remainder of the square is a second region with the disc as a hole.
inline RegionMap disc_in_square(double pop_disc = 3.0,
                                double pop_rest = 1.0)
{
  const double cx = 0.503;
  const double cy = 0.497;
  const double radius = 0.31;
  const int sides = 96;
  Ring circle;
  for (int v = 0; v < sides; ++v) {
    const double angle = 2.0 * M_PI * v / sides;
    circle.push_back(
      {cx + radius * std::cos(angle), cy + radius * std::sin(angle)});
  }

  RegionMap map;
  Region disc;
  disc.id = "disc";
  disc.population = pop_disc;
  disc.polygons.push_back({circle, {}});
  disc.area = region_area(disc);
  map.regions.push_back(disc);

  Region rest;
  rest.id = "rest";
  rest.population = pop_rest;
  Polygon outer;
  outer.exterior = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  outer.holes.push_back(circle);
  rest.polygons.push_back(outer);
  rest.area = region_area(rest);
  map.regions.push_back(rest);

  map.frame = {0.0, 0.0, 1.0, 1.0};
  return map;
}

inline std::string fixture_path(const std::string &name)
{
  return std::string(PYCNOFLOW_FIXTURE_DIR) + "/" + name;
}

}  // namespace pycnoflow::test

#endif
