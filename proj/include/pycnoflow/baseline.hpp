#ifndef PYCNOFLOW_BASELINE_HPP
#define PYCNOFLOW_BASELINE_HPP

#include <string>
#include <vector>

#include "pycnoflow/geometry.hpp"
#include "pycnoflow/grid.hpp"

namespace pycnoflow {

// Integral of the squared 5-point Laplacian over interior cells.
double roughness(const DensityGrid &density);

struct CAState {
  DensityGrid density;
  LabelGrid labels;
  std::vector<double> target_mass;  // per region index
  std::vector<std::string> region_ids;
  long iteration = 0;
};

// Snaps each region's mass exactly to its population before iterating.
CAState make_ca_state(const RegionMap &map, const LabelGrid &labels,
                      const DensityGrid &init);

// One cellular-automaton sweep: relax every labeled cell toward its
// 4-neighbor average (out-of-map neighbors reflected), then restore each
// region's mass and clamp negatives until masses are exact.
CAState ca_step(const CAState &state, double relaxation);

struct CAOptions {
  double relaxation = 0.5;
  double change_threshold = -1.0;  // < 0: 1e-6 * mean density
  long max_iterations = -1;        // < 0: 10 * grid side
  int max_retries = 10;            // roughness-increase retries per step
};

struct CAResult {
  DensityGrid density;
  long iterations = 0;
  bool reached_threshold = false;  // stopped by the max-cell-change test
  bool retries_exhausted = false;
  bool declined = false;  // returned the input unchanged (see ca_run)
  double final_max_change = 0.0;
  double final_relaxation = 0.0;
  double final_roughness = 0.0;
};

// Iterates ca_step, accepting a step only when the roughness does not
// increase (otherwise the relaxation is halved and the step retried).
// Mass snapping can roughen an input that violates the exact region
// masses; when even the accepted steps cannot recover the input's
// roughness, the input is returned unchanged (`declined`), so the run
// never degrades the raster it is given.
CAResult ca_run(const RegionMap &map, const LabelGrid &labels,
                const DensityGrid &init, const CAOptions &options = {});

}  // namespace pycnoflow

#endif
