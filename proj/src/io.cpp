#include "pycnoflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pycnoflow {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json ring_to_json(const Ring &ring, const AffineTransform &back)
{
  ordered_json coords = ordered_json::array();
  for (const auto &p : ring) {
    const Point q = back.inverse(p);
    coords.push_back({q.x, q.y});
  }
  if (!ring.empty()) {
    const Point q = back.inverse(ring.front());
    coords.push_back({q.x, q.y});
  }
  return coords;
}

ordered_json polygon_to_json(const Polygon &poly,
                             const AffineTransform &back)
{
  ordered_json rings = ordered_json::array();
  rings.push_back(ring_to_json(poly.exterior, back));
  for (const auto &hole : poly.holes) {
    rings.push_back(ring_to_json(hole, back));
  }
  return rings;
}

std::string format_g9(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string region_map_to_geojson(const RegionMap &map,
                                  const AffineTransform &back)
{
  ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = ordered_json::array();
  for (const auto &region : map.regions) {
    ordered_json feature;
    feature["type"] = "Feature";
    feature["id"] = region.id;
    feature["properties"] = {{"id", region.id},
                             {"population", region.population}};
    ordered_json geometry;
    if (region.polygons.size() == 1) {
      geometry["type"] = "Polygon";
      geometry["coordinates"] = polygon_to_json(region.polygons[0], back);
    } else {
      geometry["type"] = "MultiPolygon";
      ordered_json polys = ordered_json::array();
      for (const auto &poly : region.polygons) {
        polys.push_back(polygon_to_json(poly, back));
      }
      geometry["coordinates"] = polys;
    }
    feature["geometry"] = geometry;
    doc["features"].push_back(feature);
  }
  return doc.dump(2) + "\n";
}

void write_ascii_grid(const DensityGrid &grid, std::ostream &os)
{
  const GridFrame &f = grid.frame;
  if (std::abs(f.cell_w - f.cell_h) >
      1e-12 * std::max(std::abs(f.cell_w), std::abs(f.cell_h))) {
    throw std::runtime_error("ASCII grid requires square cells");
  }
  os << "ncols " << f.nx << "\n";
  os << "nrows " << f.ny << "\n";
  os << "xllcorner " << format_g9(f.x0) << "\n";
  os << "yllcorner " << format_g9(f.y0) << "\n";
  os << "cellsize " << format_g9(f.cell_w) << "\n";
  os << "NODATA_value -9999\n";
  for (int j = f.ny - 1; j >= 0; --j) {
    for (int i = 0; i < f.nx; ++i) {
      if (i > 0) {
        os << ' ';
      }
      os << format_g9(grid.at(i, j));
    }
    os << "\n";
  }
}

void write_ascii_grid(const DensityGrid &grid, const std::string &path)
{
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  write_ascii_grid(grid, os);
  if (!os) {
    throw std::runtime_error("failed writing " + path);
  }
}

DensityGrid read_ascii_grid(std::istream &is)
{
  auto read_key = [&](const std::string &expected) {
    std::string key;
    double value = 0.0;
    if (!(is >> key >> value) || key != expected) {
      throw std::runtime_error("malformed ASCII grid header (expected '" +
                               expected + "')");
    }
    return value;
  };
  GridFrame f;
  f.nx = static_cast<int>(read_key("ncols"));
  f.ny = static_cast<int>(read_key("nrows"));
  f.x0 = read_key("xllcorner");
  f.y0 = read_key("yllcorner");
  f.cell_w = f.cell_h = read_key("cellsize");
  read_key("NODATA_value");
  if (f.nx < 1 || f.ny < 1) {
    throw std::runtime_error("malformed ASCII grid header");
  }
  DensityGrid grid(f);
  for (int j = f.ny - 1; j >= 0; --j) {
    for (int i = 0; i < f.nx; ++i) {
      if (!(is >> grid.at(i, j))) {
        throw std::runtime_error("truncated ASCII grid");
      }
    }
  }
  return grid;
}

DensityGrid read_ascii_grid_file(const std::string &path)
{
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open " + path);
  }
  return read_ascii_grid(is);
}

void write_svg_heatmap(const DensityGrid &raster, const RegionMap &map,
                       std::ostream &os)
{
  const GridFrame &f = raster.frame;
  const double w = f.width();
  const double h = f.height();
  const double vmax = raster.max_value();
  char buf[256];

  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return std::string(buf);
  };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w)
     << "\" height=\"" << fmt(h) << "\" viewBox=\"0 0 " << fmt(w) << " "
     << fmt(h) << "\">\n";

  // Cells on a black (0) to white (max) ramp.
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) {
      int gray = 0;
      if (vmax > 0.0) {
        const double ratio = raster.at(i, j) / vmax;
        gray = static_cast<int>(
          std::lround(255.0 * std::clamp(ratio, 0.0, 1.0)));
      }
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.8g\" y=\"%.8g\" width=\"%.8g\" "
                    "height=\"%.8g\" fill=\"#%02x%02x%02x\"/>\n",
                    i * f.cell_w, h - (j + 1) * f.cell_h, f.cell_w,
                    f.cell_h, gray, gray, gray);
      os << buf;
    }
  }

  // Region boundaries in a contrasting stroke.
  const double stroke = 0.002 * std::max(w, h);
  for (const auto &region : map.regions) {
    for (const auto &poly : region.polygons) {
      auto emit_ring = [&](const Ring &ring) {
        os << "<path d=\"";
        for (size_t v = 0; v < ring.size(); ++v) {
          os << (v == 0 ? 'M' : 'L') << fmt(ring[v].x - f.x0) << " "
             << fmt(h - (ring[v].y - f.y0));
        }
        os << "Z\" fill=\"none\" stroke=\"#e63946\" stroke-width=\""
           << fmt(stroke) << "\"/>\n";
      };
      emit_ring(poly.exterior);
      for (const auto &hole : poly.holes) {
        emit_ring(hole);
      }
    }
  }
  os << "</svg>\n";
}

void write_svg_heatmap(const DensityGrid &raster, const RegionMap &map,
                       const std::string &path)
{
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  write_svg_heatmap(raster, map, os);
  if (!os) {
    throw std::runtime_error("failed writing " + path);
  }
}

std::string read_text_file(const std::string &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string &path, const std::string &content)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  os << content;
  if (!os) {
    throw std::runtime_error("failed writing " + path);
  }
}

}  // namespace pycnoflow
