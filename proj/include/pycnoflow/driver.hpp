#ifndef PYCNOFLOW_DRIVER_HPP
#define PYCNOFLOW_DRIVER_HPP

#include <map>
#include <string>
#include <vector>

#include "pycnoflow/flow.hpp"
#include "pycnoflow/geometry.hpp"
#include "pycnoflow/grid.hpp"
#include "pycnoflow/rasterize.hpp"

namespace pycnoflow {

// Bilinear interpolation of the node displacements at p (p must lie in the
// field's frame).
Point apply_displacement(const DisplacementField &field, const Point &p);

// Resets every exterior cell to the mean density; labeled cells untouched.
void replenish_exterior(DensityGrid &density, const LabelGrid &labels,
                        double mean);

struct IterationLog {
  int k = 0;
  double sigma = 0.0;
  double max_residual = 0.0;
  double area_error = 0.0;
  int flow_steps = 0;
  double flow_time = 0.0;
};

struct ProjectionStack {
  GridFrame frame;
  std::vector<DisplacementField> fields;
  std::vector<IterationLog> log;

  size_t size() const { return fields.size(); }
};

struct RunOptions {
  int grid = 512;             // cells per axis (power of two)
  double tolerance = 0.01;    // max relative area error
  int max_iterations = 20;
  double sigma0 = 0.0;        // grid units; 0 = frame width / 20
  double sigma_decay = 0.5;
  double padding = 1.5;
  double eq_threshold = 1e-3;
  double step_tol_cells = 0.01;
  bool densify_boundaries = true;
};

struct CartogramResult {
  RegionMap projected;       // frame coordinates
  RegionMap fitted_input;    // unprojected boundaries in frame coordinates
  AffineTransform to_frame;  // original -> frame
  ProjectionStack stack;
  std::map<std::string, double> target_area;    // P_i / rho_bar
  std::map<std::string, double> achieved_area;  // shoelace of projection
  std::vector<std::string> floored_regions;     // zero-population regions
  double mean_density = 0.0;                    // frame units
  int iterations = 0;
  bool converged = false;
};

// max_i |achieved_i / target_i - 1|; zero-population regions are excluded.
double area_error(const CartogramResult &result);

// The outer loop: rasterize the residual density on the current boundaries,
// blur with a shrinking kernel, flow-project, and repeat until every region
// area matches its population share within tolerance.
CartogramResult run(const RegionMap &map, const RunOptions &options = {});

}  // namespace pycnoflow

#endif
