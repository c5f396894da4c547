#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>

#include "pycnoflow/baseline.hpp"
#include "pycnoflow/driver.hpp"
#include "pycnoflow/io.hpp"
#include "pycnoflow/pycno.hpp"

namespace py = pybind11;
using namespace pycnoflow;

namespace {

struct PyCartogram {
  RegionMap input;
  CartogramResult result;
};

py::array_t<double> grid_to_array(const DensityGrid &grid)
{
  py::array_t<double> array({grid.frame.ny, grid.frame.nx});
  auto view = array.mutable_unchecked<2>();
  for (int j = 0; j < grid.frame.ny; ++j) {
    for (int i = 0; i < grid.frame.nx; ++i) {
      view(j, i) = grid.at(i, j);
    }
  }
  return array;
}

py::dict grid_meta(const DensityGrid &grid)
{
  py::dict meta;
  meta["x0"] = grid.frame.x0;
  meta["y0"] = grid.frame.y0;
  meta["cellsize"] = grid.frame.cell_w;
  meta["origin"] = "lower";  // row 0 of the array is the southern edge
  return meta;
}

DensityGrid array_to_grid(const py::array_t<double> &array, double cellsize)
{
  if (array.ndim() != 2) {
    throw std::runtime_error("expected a 2-D array");
  }
  GridFrame frame;
  frame.ny = static_cast<int>(array.shape(0));
  frame.nx = static_cast<int>(array.shape(1));
  frame.cell_w = frame.cell_h = cellsize;
  DensityGrid grid(frame);
  auto view = array.unchecked<2>();
  for (int j = 0; j < frame.ny; ++j) {
    for (int i = 0; i < frame.nx; ++i) {
      grid.at(i, j) = view(j, i);
    }
  }
  return grid;
}

PycnoRaster flow_raster_of(const PyCartogram &cart, int cells)
{
  const int f = cells > 0 ? cells : cart.result.stack.frame.nx;
  const JacobianGrid jac = jacobian_grid(cart.result.stack, f);
  return density_from_jacobian(jac, cart.result.mean_density);
}

std::map<std::string, double> scaled_areas(
  const std::map<std::string, double> &areas, double scale)
{
  std::map<std::string, double> out;
  const double inv = 1.0 / (scale * scale);
  for (const auto &[id, a] : areas) {
    out[id] = a * inv;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Density-equalising cartograms and smooth pycnophylactic "
            "density rasters";

  py::class_<RegionMap>(m, "RegionMap")
    .def_property_readonly("ids",
                           [](const RegionMap &map) {
                             std::vector<std::string> ids;
                             for (const auto &r : map.regions) {
                               ids.push_back(r.id);
                             }
                             return ids;
                           })
    .def_property_readonly("populations",
                           [](const RegionMap &map) {
                             std::map<std::string, double> out;
                             for (const auto &r : map.regions) {
                               out[r.id] = r.population;
                             }
                             return out;
                           })
    .def_property_readonly("areas",
                           [](const RegionMap &map) {
                             std::map<std::string, double> out;
                             for (const auto &r : map.regions) {
                               out[r.id] = r.area;
                             }
                             return out;
                           })
    .def("__len__",
         [](const RegionMap &map) { return map.regions.size(); });

  py::class_<PyCartogram>(m, "Cartogram")
    .def_property_readonly(
      "converged",
      [](const PyCartogram &c) { return c.result.converged; })
    .def_property_readonly(
      "iterations",
      [](const PyCartogram &c) { return c.result.iterations; })
    .def_property_readonly(
      "area_error", [](const PyCartogram &c) { return area_error(c.result); })
    .def_property_readonly("target_areas",
                           [](const PyCartogram &c) {
                             return scaled_areas(c.result.target_area,
                                                 c.result.to_frame.scale);
                           })
    .def_property_readonly("achieved_areas",
                           [](const PyCartogram &c) {
                             return scaled_areas(c.result.achieved_area,
                                                 c.result.to_frame.scale);
                           })
    .def_property_readonly("sigma_log",
                           [](const PyCartogram &c) {
                             std::vector<double> log;
                             for (const auto &e : c.result.stack.log) {
                               log.push_back(e.sigma);
                             }
                             return log;
                           })
    .def_property_readonly("area_error_log",
                           [](const PyCartogram &c) {
                             std::vector<double> log;
                             for (const auto &e : c.result.stack.log) {
                               log.push_back(e.area_error);
                             }
                             return log;
                           })
    .def("projected_geojson", [](const PyCartogram &c) {
      RegionMap projected = c.result.projected;
      std::map<std::string, double> pops;
      for (const auto &r : c.input.regions) {
        pops[r.id] = r.population;
      }
      for (auto &r : projected.regions) {
        r.population = pops.at(r.id);
      }
      return region_map_to_geojson(projected, c.result.to_frame);
    });

  m.def(
    "load_regions",
    [](const std::string &geojson,
       const std::optional<std::map<std::string, double>> &values,
       const std::string &value_property) {
      return load_regions(geojson, values, value_property);
    },
    py::arg("geojson"), py::arg("values") = py::none(),
    py::arg("value_property") = "population");

  m.def(
    "run_cartogram",
    [](const RegionMap &map, int grid, double tol, int max_iters,
       double sigma0, double sigma_decay, double padding) {
      RunOptions options;
      options.grid = grid;
      options.tolerance = tol;
      options.max_iterations = max_iters;
      options.sigma0 = sigma0;
      options.sigma_decay = sigma_decay;
      options.padding = padding;
      PyCartogram cart{map, {}};
      cart.result = run(map, options);
      return cart;
    },
    py::arg("map"), py::arg("grid") = 512, py::arg("tol") = 0.01,
    py::arg("max_iters") = 20, py::arg("sigma0") = 0.0,
    py::arg("sigma_decay") = 0.5, py::arg("padding") = 1.5,
    py::call_guard<py::gil_scoped_release>());

  m.def(
    "pycno_raster",
    [](const PyCartogram &cart, int cells) {
      const PycnoRaster raster = raster_to_input_units(
        flow_raster_of(cart, cells), cart.result.to_frame);
      return py::make_tuple(grid_to_array(raster), grid_meta(raster));
    },
    py::arg("cartogram"), py::arg("cells") = 0,
    "Smooth density raster from the projection Jacobian (input units)");

  m.def(
    "pycno_errors",
    [](const PyCartogram &cart, int cells) {
      return pycno_check(flow_raster_of(cart, cells),
                         cart.result.fitted_input);
    },
    py::arg("cartogram"), py::arg("cells") = 0);

  m.def(
    "hybrid_raster",
    [](const PyCartogram &cart, int cells) {
      const PycnoRaster flow_raster = flow_raster_of(cart, cells);
      const LabelGrid labels = rasterize_labels(
        cart.result.fitted_input, flow_raster.frame.nx);
      const CAResult ca =
        ca_run(cart.result.fitted_input, labels, flow_raster);
      const PycnoRaster raster =
        raster_to_input_units(ca.density, cart.result.to_frame);
      return py::make_tuple(grid_to_array(raster), grid_meta(raster));
    },
    py::arg("cartogram"), py::arg("cells") = 0);

  m.def(
    "tobler_raster",
    [](const RegionMap &map, int cells) {
      const FitResult fit = fit_frame(map, cells);
      const LabelGrid labels = rasterize_labels(fit.map, cells);
      const DensityGrid plateau = plateau_density(fit.map, labels);
      const CAResult ca = ca_run(fit.map, labels, plateau);
      const PycnoRaster raster =
        raster_to_input_units(ca.density, fit.transform);
      return py::make_tuple(grid_to_array(raster), grid_meta(raster));
    },
    py::arg("map"), py::arg("cells") = 512);

  m.def(
    "plateau_raster",
    [](const RegionMap &map, int cells) {
      const FitResult fit = fit_frame(map, cells);
      const LabelGrid labels = rasterize_labels(fit.map, cells);
      const DensityGrid plateau = plateau_density(fit.map, labels);
      const PycnoRaster raster =
        raster_to_input_units(plateau, fit.transform);
      return py::make_tuple(grid_to_array(raster), grid_meta(raster));
    },
    py::arg("map"), py::arg("cells") = 512);

  m.def("mean_density", &mean_density, py::arg("map"));

  m.def(
    "roughness",
    [](const py::array_t<double> &array, double cellsize) {
      return roughness(array_to_grid(array, cellsize));
    },
    py::arg("raster"), py::arg("cellsize") = 1.0,
    "Integral of the squared discrete Laplacian over interior cells");

  m.attr("__version__") = "0.1.0";
}
