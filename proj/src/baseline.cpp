#include "pycnoflow/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pycnoflow/rasterize.hpp"

namespace pycnoflow {

namespace {

double kahan_sum(const std::vector<double> &values,
                 const std::vector<int32_t> &labels, int32_t wanted)
{
  double sum = 0.0;
  double comp = 0.0;
  for (size_t c = 0; c < values.size(); ++c) {
    if (labels[c] != wanted) {
      continue;
    }
    const double y = values[c] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

// Relax labeled cells toward their 4-neighbor average; neighbors outside
// the map (exterior cells or off-grid) are reflected.
void ca_sweep(DensityGrid &next, const DensityGrid &cur,
              const LabelGrid &labels, double relaxation)
{
  const int nx = cur.frame.nx;
  const int ny = cur.frame.ny;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const size_t c = static_cast<size_t>(j) * nx + i;
      if (labels.labels[c] == LabelGrid::exterior) {
        next.values[c] = cur.values[c];
        continue;
      }
      const double center = cur.values[c];
      auto neighbor = [&](int ii, int jj) {
        if (ii < 0 || ii >= nx || jj < 0 || jj >= ny ||
            labels.at(ii, jj) == LabelGrid::exterior) {
          return center;
        }
        return cur.at(ii, jj);
      };
      const double avg = 0.25 * (neighbor(i - 1, j) + neighbor(i + 1, j) +
                                 neighbor(i, j - 1) + neighbor(i, j + 1));
      next.values[c] = center + relaxation * (avg - center);
    }
  }
}

// Additive mass restoration followed by clamping, repeated until every
// region's mass matches its target to 1e-12 relative.
void restore_masses(DensityGrid &density, const LabelGrid &labels,
                    const std::vector<double> &target_mass,
                    const std::vector<size_t> &cell_count,
                    const std::vector<std::string> &ids)
{
  const double cell_area = density.frame.cell_area();
  const size_t n_regions = target_mass.size();

  for (int pass = 0; pass < 50; ++pass) {
    bool all_ok = true;
    for (size_t r = 0; r < n_regions; ++r) {
      const double target = target_mass[r];
      if (cell_count[r] == 0) {
        if (target > 0.0) {
          throw std::runtime_error("cannot restore mass for region " +
                                   ids[r] + " (no cells)");
        }
        continue;
      }
      double mass =
        kahan_sum(density.values, labels.labels, static_cast<int32_t>(r)) *
        cell_area;
      const double tol = target > 0.0 ? 1e-12 * target : 0.0;
      if (std::abs(mass - target) <= tol) {
        continue;
      }
      all_ok = false;

      const double shift = (target - mass) / (cell_count[r] * cell_area);
      double clamped = 0.0;
      for (size_t c = 0; c < density.values.size(); ++c) {
        if (labels.labels[c] != static_cast<int32_t>(r)) {
          continue;
        }
        density.values[c] += shift;
        if (density.values[c] < 0.0) {
          clamped -= density.values[c];
          density.values[c] = 0.0;
        }
      }
      if (clamped > 0.0) {
        // All remaining mass sits in nonnegative cells; rescale them so the
        // clamped surplus is removed proportionally.
        const double surplus_mass = clamped * cell_area;
        const double factor = target / (target + surplus_mass);
        for (size_t c = 0; c < density.values.size(); ++c) {
          if (labels.labels[c] == static_cast<int32_t>(r)) {
            density.values[c] *= factor;
          }
        }
      }
    }
    if (all_ok) {
      return;
    }
  }
  throw std::runtime_error("mass restoration did not converge");
}

std::vector<size_t> count_cells(const LabelGrid &labels, size_t n_regions)
{
  std::vector<size_t> counts(n_regions, 0);
  for (int32_t label : labels.labels) {
    if (label != LabelGrid::exterior) {
      ++counts[label];
    }
  }
  return counts;
}

}  // namespace

double roughness(const DensityGrid &density)
{
  const int nx = density.frame.nx;
  const int ny = density.frame.ny;
  if (nx < 3 || ny < 3) {
    throw std::runtime_error("roughness needs a grid of at least 3x3");
  }
  const double inv_w2 = 1.0 / (density.frame.cell_w * density.frame.cell_w);
  const double inv_h2 = 1.0 / (density.frame.cell_h * density.frame.cell_h);
  const double cell_area = density.frame.cell_area();

  double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (int j = 1; j < ny - 1; ++j) {
    double row = 0.0;
    for (int i = 1; i < nx - 1; ++i) {
      const double c = density.at(i, j);
      const double lap =
        (density.at(i - 1, j) + density.at(i + 1, j) - 2.0 * c) * inv_w2 +
        (density.at(i, j - 1) + density.at(i, j + 1) - 2.0 * c) * inv_h2;
      row += lap * lap;
    }
    total += row;
  }
  return total * cell_area;
}

CAState make_ca_state(const RegionMap &map, const LabelGrid &labels,
                      const DensityGrid &init)
{
  CAState state;
  state.labels = labels;
  state.density = init.frame.same_shape(labels.frame)
                    ? init
                    : resample(init, labels.frame);
  state.density.frame = labels.frame;

  const size_t n_regions = map.regions.size();
  state.target_mass.resize(n_regions);
  state.region_ids.resize(n_regions);
  for (size_t r = 0; r < n_regions; ++r) {
    state.target_mass[r] = map.regions[r].population;
    state.region_ids[r] = map.regions[r].id;
  }

  // Snap region masses exactly so the conservation invariant holds from the
  // first step.
  const std::vector<size_t> counts = count_cells(labels, n_regions);
  const double cell_area = labels.frame.cell_area();
  for (size_t r = 0; r < n_regions; ++r) {
    if (counts[r] == 0) {
      if (state.target_mass[r] > 0.0) {
        throw std::runtime_error("region " + state.region_ids[r] +
                                 " has no grid cells");
      }
      continue;
    }
    const double mass =
      kahan_sum(state.density.values, labels.labels,
                static_cast<int32_t>(r)) *
      cell_area;
    if (mass > 0.0) {
      const double factor = state.target_mass[r] / mass;
      for (size_t c = 0; c < state.density.values.size(); ++c) {
        if (labels.labels[c] == static_cast<int32_t>(r)) {
          state.density.values[c] *= factor;
        }
      }
    } else {
      const double fill = state.target_mass[r] / (counts[r] * cell_area);
      for (size_t c = 0; c < state.density.values.size(); ++c) {
        if (labels.labels[c] == static_cast<int32_t>(r)) {
          state.density.values[c] = fill;
        }
      }
    }
  }
  restore_masses(state.density, labels, state.target_mass, counts,
                 state.region_ids);
  return state;
}

CAState ca_step(const CAState &state, double relaxation)
{
  if (!(relaxation > 0.0 && relaxation <= 1.0)) {
    throw std::runtime_error("relaxation must lie in (0, 1]");
  }
  CAState next = state;
  ca_sweep(next.density, state.density, state.labels, relaxation);
  restore_masses(next.density, next.labels, next.target_mass,
                 count_cells(next.labels, next.target_mass.size()),
                 next.region_ids);
  next.iteration = state.iteration + 1;
  return next;
}

CAResult ca_run(const RegionMap &map, const LabelGrid &labels,
                const DensityGrid &init, const CAOptions &options)
{
  DensityGrid raw_init = init.frame.same_shape(labels.frame)
                           ? init
                           : resample(init, labels.frame);
  raw_init.frame = labels.frame;
  const double raw_roughness = roughness(raw_init);

  CAState state = make_ca_state(map, labels, init);
  const std::vector<size_t> counts =
    count_cells(labels, state.target_mass.size());

  const double threshold = options.change_threshold > 0.0
                             ? options.change_threshold
                             : 1e-6 * mean_density(map);
  const long max_iterations = options.max_iterations > 0
                                ? options.max_iterations
                                : 10L * labels.frame.nx;

  CAResult result;
  result.final_relaxation = options.relaxation;
  double relaxation = options.relaxation;
  double rough = roughness(state.density);

  DensityGrid next(state.density.frame);
  for (long iter = 1; iter <= max_iterations; ++iter) {
    int retries = 0;
    double candidate_roughness = 0.0;
    while (true) {
      ca_sweep(next, state.density, state.labels, relaxation);
      restore_masses(next, state.labels, state.target_mass, counts,
                     state.region_ids);
      candidate_roughness = roughness(next);
      if (candidate_roughness <= rough) {
        break;
      }
      relaxation *= 0.5;
      if (++retries > options.max_retries) {
        result.retries_exhausted = true;
        break;
      }
    }
    if (result.retries_exhausted) {
      break;
    }

    double max_change = 0.0;
    for (size_t c = 0; c < next.values.size(); ++c) {
      max_change =
        std::max(max_change, std::abs(next.values[c] -
                                      state.density.values[c]));
    }
    state.density.values.swap(next.values);
    state.iteration = iter;
    rough = candidate_roughness;
    result.final_max_change = max_change;
    if (max_change < threshold) {
      result.reached_threshold = true;
      break;
    }
  }

  if (rough > raw_roughness) {
    result.density = std::move(raw_init);
    result.declined = true;
    result.iterations = 0;
    result.final_relaxation = relaxation;
    result.final_roughness = raw_roughness;
    return result;
  }
  result.density = std::move(state.density);
  result.iterations = state.iteration;
  result.final_relaxation = relaxation;
  result.final_roughness = rough;
  return result;
}

}  // namespace pycnoflow
