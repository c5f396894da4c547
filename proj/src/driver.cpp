#include "pycnoflow/driver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace pycnoflow {

Point apply_displacement(const DisplacementField &field, const Point &p)
{
  const GridFrame &f = field.frame;
  const double slack = 1e-9 * std::max(f.width(), f.height());
  if (p.x < f.x0 - slack || p.x > f.x0 + f.width() + slack ||
      p.y < f.y0 - slack || p.y > f.y0 + f.height() + slack) {
    throw std::runtime_error("point outside frame");
  }
  const double u =
    std::clamp((p.x - f.x0) / f.cell_w, 0.0, static_cast<double>(f.nx));
  const double v =
    std::clamp((p.y - f.y0) / f.cell_h, 0.0, static_cast<double>(f.ny));
  const int i0 = std::min(static_cast<int>(u), f.nx - 1);
  const int j0 = std::min(static_cast<int>(v), f.ny - 1);
  const double fx = u - i0;
  const double fy = v - j0;

  const Point a = field.node(i0, j0);
  const Point b = field.node(i0 + 1, j0);
  const Point c = field.node(i0, j0 + 1);
  const Point d = field.node(i0 + 1, j0 + 1);
  return {(1 - fy) * ((1 - fx) * a.x + fx * b.x) +
            fy * ((1 - fx) * c.x + fx * d.x),
          (1 - fy) * ((1 - fx) * a.y + fx * b.y) +
            fy * ((1 - fx) * c.y + fx * d.y)};
}

void replenish_exterior(DensityGrid &density, const LabelGrid &labels,
                        double mean)
{
  if (!density.frame.same_shape(labels.frame)) {
    throw std::runtime_error("grid shape mismatch");
  }
  for (size_t c = 0; c < density.values.size(); ++c) {
    if (labels.labels[c] == LabelGrid::exterior) {
      density.values[c] = mean;
    }
  }
}

namespace {

double max_relative_area_error(
  const CartogramResult &result,
  const std::map<std::string, double> &achieved)
{
  double err = 0.0;
  for (const auto &region : result.fitted_input.regions) {
    const bool floored =
      std::find(result.floored_regions.begin(),
                result.floored_regions.end(),
                region.id) != result.floored_regions.end();
    if (floored) {
      continue;
    }
    const double target = result.target_area.at(region.id);
    err = std::max(err, std::abs(achieved.at(region.id) / target - 1.0));
  }
  return err;
}

std::map<std::string, double> region_areas(const RegionMap &map)
{
  std::map<std::string, double> areas;
  for (const auto &region : map.regions) {
    areas[region.id] = region_area(region);
  }
  return areas;
}

}  // namespace

double area_error(const CartogramResult &result)
{
  return max_relative_area_error(result, result.achieved_area);
}

CartogramResult run(const RegionMap &map, const RunOptions &options)
{
  if (options.max_iterations < 1) {
    throw std::runtime_error("max iterations must be at least 1");
  }
  if (!(options.tolerance > 0.0)) {
    throw std::runtime_error("tolerance must be positive");
  }
  if (!(options.sigma_decay > 0.0 && options.sigma_decay < 1.0)) {
    throw std::runtime_error("sigma decay must lie in (0, 1)");
  }

  CartogramResult result;
  FitResult fit = fit_frame(map, options.grid, options.padding);
  result.to_frame = fit.transform;

  const GridFrame grid_frame =
    make_grid_frame(fit.map.frame, options.grid);
  if (options.densify_boundaries) {
    densify(fit.map, grid_frame.cell_w);
  }

  // Cartograms cannot represent zero area; give empty regions a floor.
  double total_pop = 0.0;
  for (const auto &region : fit.map.regions) {
    total_pop += region.population;
  }
  if (!(total_pop > 0.0)) {
    throw std::runtime_error("total population must be positive");
  }
  for (auto &region : fit.map.regions) {
    if (region.population == 0.0) {
      region.population = 1e-8 * total_pop;
      result.floored_regions.push_back(region.id);
      std::cerr << "warning: zero population for " << region.id
                << "; using a small positive floor\n";
    }
  }

  result.fitted_input = fit.map;
  result.mean_density = mean_density(fit.map);
  const double rho_bar = result.mean_density;
  for (const auto &region : fit.map.regions) {
    result.target_area[region.id] = region.population / rho_bar;
  }

  RegionMap current = fit.map;
  result.stack.frame = grid_frame;

  double sigma = options.sigma0 > 0.0 ? options.sigma0
                                      : grid_frame.width() / 20.0;
  const double sigma_floor = 0.1 * grid_frame.cell_w;

  for (int k = 1; k <= options.max_iterations; ++k) {
    for (auto &region : current.regions) {
      region.area = region_area(region);
    }
    const LabelGrid labels = rasterize_labels(current, options.grid);
    DensityGrid density = plateau_density(current, labels);
    replenish_exterior(density, labels, rho_bar);

    // Smooth until the advected density keeps a safe margin above zero.
    double sigma_eff = sigma;
    DensityGrid blurred = gaussian_blur(density, sigma_eff);
    for (int attempt = 0;
         attempt < 5 && blurred.min_value() <= 0.1 * rho_bar; ++attempt) {
      sigma_eff = std::max(sigma_eff, grid_frame.cell_w) * 1.5;
      blurred = gaussian_blur(density, sigma_eff);
    }

    double max_residual = 0.0;
    for (double v : blurred.values) {
      max_residual = std::max(max_residual, std::abs(v - rho_bar));
    }

    FlowOptions flow_options;
    flow_options.eq_threshold = options.eq_threshold;
    flow_options.step_tol_cells = options.step_tol_cells;
    const std::vector<Point> vertices = collect_vertices(current);
    FlowResult flow = integrate_flow(blurred, vertices, flow_options);
    assign_vertices(current, flow.mapped_targets);

    result.stack.fields.push_back(std::move(flow.field));
    const std::map<std::string, double> achieved = region_areas(current);
    const double err = max_relative_area_error(result, achieved);
    result.stack.log.push_back({k, sigma_eff, max_residual, err,
                                flow.accepted_steps + flow.rejected_steps,
                                flow.t_end});
    result.iterations = k;

    sigma *= options.sigma_decay;
    if (sigma < sigma_floor) {
      sigma = 0.0;
    }
    if (err < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  for (auto &region : current.regions) {
    region.area = region_area(region);
  }
  result.projected = current;
  result.achieved_area = region_areas(current);
  return result;
}

}  // namespace pycnoflow
