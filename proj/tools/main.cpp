#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "pycnoflow/baseline.hpp"
#include "pycnoflow/driver.hpp"
#include "pycnoflow/io.hpp"
#include "pycnoflow/pycno.hpp"
#include "pycnoflow/report.hpp"

namespace {

using namespace pycnoflow;

struct CommonArgs {
  std::string geojson_path;
  std::string values_path;
  std::string out_path;
  std::string report_path;
  int grid = 512;
  double tol = 0.01;
  int max_iters = 20;
  double sigma0 = 0.0;
  double sigma_decay = 0.5;
};

struct PycnoArgs {
  std::string density_out;
  std::string svg_path;
  std::string method = "flow";
  int jacobian_cells = 0;
};

void add_common_flags(CLI::App *cmd, CommonArgs &args)
{
  cmd->add_option("--geojson", args.geojson_path,
                  "Input GeoJSON FeatureCollection")
    ->required();
  cmd->add_option("--values", args.values_path, "CSV with header id,value")
    ->required();
  cmd->add_option("--out", args.out_path, "Projected boundaries (GeoJSON)")
    ->required();
  cmd->add_option("--grid", args.grid,
                  "Computational grid cells per axis (power of two)");
  cmd->add_option("--tol", args.tol, "Relative area-error tolerance");
  cmd->add_option("--max-iters", args.max_iters, "Maximum flow iterations");
  cmd->add_option("--sigma0", args.sigma0,
                  "Initial blur width in grid cells (0 = frame/20)");
  cmd->add_option("--sigma-decay", args.sigma_decay,
                  "Blur shrink factor per iteration");
  cmd->add_option("--report", args.report_path, "Write a JSON run report");
}

RunOptions to_run_options(const CommonArgs &args)
{
  RunOptions options;
  options.grid = args.grid;
  options.tolerance = args.tol;
  options.max_iterations = args.max_iters;
  options.sigma0 = args.sigma0;
  options.sigma_decay = args.sigma_decay;
  return options;
}

RegionMap load_input(const CommonArgs &args)
{
  const std::string geojson = read_text_file(args.geojson_path);
  const std::map<std::string, double> values =
    read_values_csv(read_text_file(args.values_path));
  return load_regions(geojson, values);
}

void restore_populations(RegionMap &map, const RegionMap &input)
{
  std::map<std::string, double> pops;
  for (const auto &region : input.regions) {
    pops[region.id] = region.population;
  }
  for (auto &region : map.regions) {
    region.population = pops.at(region.id);
  }
}

RunReport make_report(const RegionMap &input, const CartogramResult &result,
                      double wall_seconds)
{
  RunReport report;
  report.converged = result.converged;
  report.iterations = result.iterations;
  report.wall_time_seconds = wall_seconds;
  const double inv_scale2 =
    1.0 / (result.to_frame.scale * result.to_frame.scale);
  for (const auto &region : input.regions) {
    RegionReport r;
    r.id = region.id;
    r.population = region.population;
    r.target_area = result.target_area.at(region.id) * inv_scale2;
    r.achieved_area = result.achieved_area.at(region.id) * inv_scale2;
    r.area_error = std::abs(r.achieved_area / r.target_area - 1.0);
    report.regions.push_back(r);
  }
  for (const auto &entry : result.stack.log) {
    report.sigma_log.push_back(entry.sigma);
    report.area_error_log.push_back(entry.area_error);
    report.max_residual_log.push_back(entry.max_residual);
  }
  return report;
}

double plateau_roughness(const RegionMap &fitted, int cells)
{
  const LabelGrid labels = rasterize_labels(fitted, cells);
  return roughness(plateau_density(fitted, labels));
}

int cmd_cartogram(const CommonArgs &args)
{
  const auto start = std::chrono::steady_clock::now();
  const RegionMap input = load_input(args);
  CartogramResult result = run(input, to_run_options(args));
  const double wall =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();

  RegionMap projected = result.projected;
  restore_populations(projected, input);
  write_text_file(args.out_path,
                  region_map_to_geojson(projected, result.to_frame));

  if (!args.report_path.empty()) {
    RunReport report = make_report(input, result, wall);
    report.roughness_plateau = plateau_roughness(result.fitted_input,
                                                 args.grid);
    write_text_file(args.report_path, report.to_json());
  }
  if (!result.converged) {
    std::cerr << "did not converge below tolerance " << args.tol << " in "
              << result.iterations << " iterations (area error "
              << area_error(result) << ")\n";
    return 2;
  }
  return 0;
}

int cmd_pycno(const CommonArgs &args, const PycnoArgs &pargs)
{
  const auto start = std::chrono::steady_clock::now();
  const RegionMap input = load_input(args);
  const int raster_cells =
    pargs.jacobian_cells > 0 ? pargs.jacobian_cells : args.grid;

  RunReport report;
  DensityGrid raster;        // frame coordinates
  RegionMap original_frame;  // unprojected boundaries, frame coordinates
  AffineTransform to_frame;
  bool converged = true;

  if (pargs.method == "tobler") {
    FitResult fit = fit_frame(input, raster_cells);
    to_frame = fit.transform;
    original_frame = fit.map;
    const LabelGrid labels = rasterize_labels(fit.map, raster_cells);
    const DensityGrid plateau = plateau_density(fit.map, labels);
    const CAResult ca = ca_run(fit.map, labels, plateau);
    raster = ca.density;
    report.iterations = static_cast<int>(ca.iterations);
    report.converged = true;
    report.roughness_plateau = roughness(plateau);
    report.roughness_tobler = ca.final_roughness;
    for (const auto &region : input.regions) {
      RegionReport r;
      r.id = region.id;
      r.population = region.population;
      report.regions.push_back(r);
    }
    // No projection in this mode; the boundaries pass through unchanged.
    write_text_file(args.out_path,
                    region_map_to_geojson(input, AffineTransform{}));
  } else {
    CartogramResult result = run(input, to_run_options(args));
    to_frame = result.to_frame;
    original_frame = result.fitted_input;
    converged = result.converged;

    const JacobianGrid jacobian = jacobian_grid(result.stack, raster_cells);
    raster = density_from_jacobian(jacobian, result.mean_density);

    report = make_report(input, result, 0.0);
    report.roughness_plateau =
      plateau_roughness(result.fitted_input, raster_cells);
    report.roughness_flow = roughness(raster);

    if (pargs.method == "hybrid") {
      const LabelGrid labels =
        rasterize_labels(result.fitted_input, raster_cells);
      const CAResult ca = ca_run(result.fitted_input, labels, raster);
      raster = ca.density;
      report.roughness_hybrid = ca.final_roughness;
    }

    RegionMap projected = result.projected;
    restore_populations(projected, input);
    write_text_file(args.out_path,
                    region_map_to_geojson(projected, result.to_frame));
  }

  const std::map<std::string, double> errors =
    pycno_check(raster, original_frame);
  for (auto &r : report.regions) {
    r.pycno_error = errors.at(r.id);
  }

  const DensityGrid out_raster = raster_to_input_units(raster, to_frame);
  write_ascii_grid(out_raster, pargs.density_out);
  if (!pargs.svg_path.empty()) {
    write_svg_heatmap(out_raster, input, pargs.svg_path);
  }

  report.wall_time_seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
  if (!args.report_path.empty()) {
    write_text_file(args.report_path, report.to_json());
  }
  if (!converged) {
    std::cerr << "did not converge below tolerance " << args.tol << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Contiguous cartograms and smooth mass-preserving density "
               "rasters from aggregated regional data"};
  app.require_subcommand(1);

  CommonArgs cart_args;
  CLI::App *cartogram =
    app.add_subcommand("cartogram", "Density-equalising cartogram");
  add_common_flags(cartogram, cart_args);

  CommonArgs pycno_common;
  PycnoArgs pycno_args;
  CLI::App *pycno = app.add_subcommand(
    "pycno", "Smooth density raster from the projection Jacobian");
  add_common_flags(pycno, pycno_common);
  pycno->add_option("--density-out", pycno_args.density_out,
                    "Output raster (ESRI ASCII grid)")
    ->required();
  pycno->add_option("--jacobian-grid", pycno_args.jacobian_cells,
                    "Jacobian/raster cells per axis (default: --grid)");
  pycno->add_option("--svg", pycno_args.svg_path, "Write an SVG heatmap");
  pycno->add_option("--method", pycno_args.method, "flow | tobler | hybrid")
    ->check(CLI::IsMember({"flow", "tobler", "hybrid"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    if (cartogram->parsed()) {
      return cmd_cartogram(cart_args);
    }
    return cmd_pycno(pycno_common, pycno_args);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
