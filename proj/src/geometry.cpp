#include "pycnoflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pycnoflow {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &msg)
{
  throw std::runtime_error(msg);
}

void check_finite(const Point &p, const std::string &id)
{
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    fail("non-finite coordinate in region " + id);
  }
}

Ring parse_ring(const json &coords, const std::string &id)
{
  if (!coords.is_array() || coords.size() < 4) {
    fail("ring with fewer than 3 distinct vertices in region " + id);
  }
  Ring ring;
  ring.reserve(coords.size());
  for (const auto &c : coords) {
    if (!c.is_array() || c.size() < 2) {
      fail("malformed coordinate in region " + id);
    }
    Point p{c[0].get<double>(), c[1].get<double>()};
    check_finite(p, id);
    ring.push_back(p);
  }
  // GeoJSON rings repeat the first vertex; store the open form.
  if (ring.size() > 1 && ring.front() == ring.back()) {
    ring.pop_back();
  }
  if (ring.size() < 3) {
    fail("ring with fewer than 3 distinct vertices in region " + id);
  }
  return ring;
}

Polygon parse_polygon(const json &rings, const std::string &id)
{
  Polygon poly;
  poly.exterior = parse_ring(rings.at(0), id);
  for (size_t r = 1; r < rings.size(); ++r) {
    poly.holes.push_back(parse_ring(rings[r], id));
  }
  return poly;
}

double parse_population(const json &value, const std::string &id)
{
  if (!value.is_number()) {
    fail("non-numeric value for " + id);
  }
  double pop = value.get<double>();
  if (!std::isfinite(pop)) {
    fail("non-numeric value for " + id);
  }
  if (pop < 0.0) {
    fail("negative population for " + id);
  }
  return pop;
}

std::string feature_id(const json &feature, size_t index)
{
  const json *id = nullptr;
  if (feature.contains("id")) {
    id = &feature["id"];
  } else if (feature.contains("properties") &&
             feature["properties"].is_object() &&
             feature["properties"].contains("id")) {
    id = &feature["properties"]["id"];
  }
  if (id == nullptr) {
    fail("missing id on feature " + std::to_string(index));
  }
  if (id->is_string()) {
    return id->get<std::string>();
  }
  if (id->is_number_integer()) {
    return std::to_string(id->get<long long>());
  }
  if (id->is_number()) {
    std::ostringstream os;
    os << id->get<double>();
    return os.str();
  }
  fail("missing id on feature " + std::to_string(index));
}

}  // namespace

double ring_signed_area(const Ring &ring)
{
  double twice = 0.0;
  const size_t n = ring.size();
  for (size_t i = 0; i < n; ++i) {
    const Point &a = ring[i];
    const Point &b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

double region_area(const Region &region)
{
  double area = 0.0;
  for (const auto &poly : region.polygons) {
    const double ext = std::abs(ring_signed_area(poly.exterior));
    if (ext == 0.0 || poly.exterior.size() < 3) {
      fail("degenerate ring in region " + region.id);
    }
    area += ext;
    for (const auto &hole : poly.holes) {
      const double h = std::abs(ring_signed_area(hole));
      if (h == 0.0 || hole.size() < 3) {
        fail("degenerate ring in region " + region.id);
      }
      area -= h;
    }
  }
  if (area <= 0.0) {
    fail("non-positive area for region " + region.id);
  }
  return area;
}

Rect bounding_box(const RegionMap &map)
{
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  for (const auto &region : map.regions) {
    for (const auto &poly : region.polygons) {
      auto scan = [&](const Ring &ring) {
        for (const auto &p : ring) {
          xmin = std::min(xmin, p.x);
          xmax = std::max(xmax, p.x);
          ymin = std::min(ymin, p.y);
          ymax = std::max(ymax, p.y);
        }
      };
      scan(poly.exterior);
      for (const auto &hole : poly.holes) {
        scan(hole);
      }
    }
  }
  if (!(xmin <= xmax)) {
    fail("empty map");
  }
  return {xmin, ymin, xmax - xmin, ymax - ymin};
}

RegionMap load_regions(
  const std::string &geojson_text,
  const std::optional<std::map<std::string, double>> &values,
  const std::string &value_property)
{
  json doc;
  try {
    doc = json::parse(geojson_text);
  } catch (const json::parse_error &e) {
    fail(std::string("invalid GeoJSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    fail("input is not a GeoJSON FeatureCollection");
  }

  RegionMap map;
  std::set<std::string> seen;
  for (size_t f = 0; f < doc["features"].size(); ++f) {
    const json &feature = doc["features"][f];
    Region region;
    region.id = feature_id(feature, f);
    if (!seen.insert(region.id).second) {
      fail("duplicate id " + region.id);
    }

    if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
      fail("missing geometry for " + region.id);
    }
    const json &geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (type == "Polygon") {
      region.polygons.push_back(parse_polygon(geom.at("coordinates"),
                                              region.id));
    } else if (type == "MultiPolygon") {
      for (const auto &poly : geom.at("coordinates")) {
        region.polygons.push_back(parse_polygon(poly, region.id));
      }
    } else {
      fail("unsupported geometry type '" + type + "' for " + region.id);
    }

    if (values.has_value()) {
      auto it = values->find(region.id);
      if (it == values->end()) {
        fail("no value for id " + region.id);
      }
      if (it->second < 0.0) {
        fail("negative population for " + region.id);
      }
      region.population = it->second;
    } else {
      const json &props = feature.contains("properties")
                            ? feature["properties"]
                            : json::object();
      if (!props.is_object() || !props.contains(value_property)) {
        fail("no value for id " + region.id);
      }
      region.population = parse_population(props[value_property], region.id);
    }

    region.area = region_area(region);
    map.regions.push_back(std::move(region));
  }

  if (map.regions.empty()) {
    fail("empty map");
  }
  if (values.has_value()) {
    for (const auto &[id, value] : *values) {
      if (!seen.count(id)) {
        fail("id in values table absent from geometry: " + id);
      }
      (void)value;
    }
  }
  map.frame = bounding_box(map);
  return map;
}

std::map<std::string, double> read_values_csv(const std::string &csv_text)
{
  std::istringstream is(csv_text);
  std::string line;
  auto trim = [](std::string s) {
    const char *ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) {
      return std::string();
    }
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
  };

  if (!std::getline(is, line)) {
    fail("empty values file");
  }
  std::string header = trim(line);
  if (header != "id,value") {
    fail("values file must start with header 'id,value'");
  }

  std::map<std::string, double> values;
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    std::string row = trim(line);
    if (row.empty()) {
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string::npos) {
      fail("malformed values row at line " + std::to_string(lineno));
    }
    const std::string id = trim(row.substr(0, comma));
    const std::string num = trim(row.substr(comma + 1));
    if (id.empty()) {
      fail("malformed values row at line " + std::to_string(lineno));
    }
    char *end = nullptr;
    const double v = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size() ||
        !std::isfinite(v)) {
      fail("non-numeric value for " + id);
    }
    if (!values.emplace(id, v).second) {
      fail("duplicate id " + id + " in values file");
    }
  }
  return values;
}

FitResult fit_frame(const RegionMap &map, unsigned grid_size, double padding)
{
  if (map.regions.empty()) {
    fail("empty map");
  }
  if (grid_size < 2 || (grid_size & (grid_size - 1)) != 0) {
    fail("grid size must be a power of two");
  }
  if (padding < 1.0) {
    fail("padding must be >= 1");
  }

  const Rect bbox = bounding_box(map);
  const double longest = std::max(bbox.width, bbox.height);
  if (longest <= 0.0) {
    fail("degenerate map extent");
  }
  const double L = static_cast<double>(grid_size);
  AffineTransform t;
  t.scale = L / padding / longest;
  t.tx = 0.5 * L - (bbox.x0 + 0.5 * bbox.width) * t.scale;
  t.ty = 0.5 * L - (bbox.y0 + 0.5 * bbox.height) * t.scale;

  FitResult result;
  result.transform = t;
  result.map = map;
  for (auto &region : result.map.regions) {
    for (auto &poly : region.polygons) {
      for (auto &p : poly.exterior) {
        p = t.forward(p);
      }
      for (auto &hole : poly.holes) {
        for (auto &p : hole) {
          p = t.forward(p);
        }
      }
    }
    region.area = region_area(region);
  }
  result.map.frame = {0.0, 0.0, L, L};
  return result;
}

namespace {

bool point_less(const Point &a, const Point &b)
{
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

// Interior points of segment a->b, excluding both endpoints, generated in a
// direction-independent order so shared boundaries densify identically.
void emit_interior_points(const Point &a, const Point &b, double max_len,
                          std::vector<Point> &out)
{
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (!(len > max_len)) {
    return;
  }
  const int pieces = static_cast<int>(std::ceil(len / max_len));
  const Point &lo = point_less(a, b) ? a : b;
  const Point &hi = point_less(a, b) ? b : a;
  const size_t first = out.size();
  for (int i = 1; i < pieces; ++i) {
    const double s = static_cast<double>(i) / pieces;
    out.push_back({lo.x + s * (hi.x - lo.x), lo.y + s * (hi.y - lo.y)});
  }
  if (&lo != &a) {
    std::reverse(out.begin() + first, out.end());
  }
}

Ring densify_ring(const Ring &ring, double max_len)
{
  Ring out;
  const size_t n = ring.size();
  for (size_t i = 0; i < n; ++i) {
    out.push_back(ring[i]);
    emit_interior_points(ring[i], ring[(i + 1) % n], max_len, out);
  }
  return out;
}

}  // namespace

void densify(RegionMap &map, double max_segment_length)
{
  if (!(max_segment_length > 0.0)) {
    fail("max segment length must be positive");
  }
  for (auto &region : map.regions) {
    for (auto &poly : region.polygons) {
      poly.exterior = densify_ring(poly.exterior, max_segment_length);
      for (auto &hole : poly.holes) {
        hole = densify_ring(hole, max_segment_length);
      }
    }
  }
}

std::vector<Point> collect_vertices(const RegionMap &map)
{
  std::vector<Point> out;
  for (const auto &region : map.regions) {
    for (const auto &poly : region.polygons) {
      out.insert(out.end(), poly.exterior.begin(), poly.exterior.end());
      for (const auto &hole : poly.holes) {
        out.insert(out.end(), hole.begin(), hole.end());
      }
    }
  }
  return out;
}

void assign_vertices(RegionMap &map, std::span<const Point> vertices)
{
  size_t k = 0;
  for (auto &region : map.regions) {
    for (auto &poly : region.polygons) {
      for (auto &p : poly.exterior) {
        p = vertices[k++];
      }
      for (auto &hole : poly.holes) {
        for (auto &p : hole) {
          p = vertices[k++];
        }
      }
    }
  }
  if (k != vertices.size()) {
    fail("vertex count mismatch");
  }
}

}  // namespace pycnoflow
