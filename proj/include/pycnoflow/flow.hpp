#ifndef PYCNOFLOW_FLOW_HPP
#define PYCNOFLOW_FLOW_HPP

#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "pycnoflow/grid.hpp"

namespace pycnoflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Cosine-basis (no-flux wall) representation of a DensityGrid.  Wavenumbers
// are k_m = pi * m / L_x and k_n = pi * n / L_y.
class SpectralField {
public:
  static SpectralField analyze(const DensityGrid &grid);

  DensityGrid synthesize() const;

  // Heat-equation solution at pseudo-time t: mode (m, n) decays by
  // exp(-(k_m^2 + k_n^2) * t).
  DensityGrid diffused(double t) const;

  // Low-pass multiplier exp(-sigma^2 (k_m^2 + k_n^2) / 2).
  void apply_gaussian(double sigma);

  double total_mass() const;
  double mean() const;

  // Largest single-mode amplitude outside the zero mode, after decay time t.
  double max_nonzero_amplitude(double t) const;

  // Smallest t with max_nonzero_amplitude(t) < eps_abs (0 if already below).
  double equilibration_time(double eps_abs) const;

  const GridFrame &grid_frame() const { return frame_; }

private:
  GridFrame frame_;
  std::vector<double> coeff_;  // FFTW REDFT10 convention, index n * nx + m

  friend class FlowField;
};

DensityGrid gaussian_blur(const DensityGrid &grid, double sigma);
DensityGrid diffuse(const SpectralField &initial, double t);

// Mapped position of every node of the (nx+1) x (ny+1) cell-corner lattice.
struct DisplacementField {
  GridFrame frame;
  std::vector<Point> nodes;  // index j * (nx + 1) + i

  Point node(int i, int j) const
  {
    return nodes[static_cast<size_t>(j) * (frame.nx + 1) + i];
  }
  // Signed area of the quadrilateral image of cell (i, j).
  double cell_signed_area(int i, int j) const;
};

DisplacementField identity_displacement(const GridFrame &frame);

// Precomputed spectral state of one flow round: density under diffusion and
// its gradient, synthesized on demand at any pseudo-time.
class FlowField {
public:
  explicit FlowField(const DensityGrid &density);  // density must be > 0
  ~FlowField();
  FlowField(const FlowField &) = delete;
  FlowField &operator=(const FlowField &) = delete;

  // v = -grad(rho) / rho, bilinearly interpolated between cell centers with
  // wall ghosts that force the normal component to zero at the frame edge.
  Vec2 velocity_at(const Point &p, double t) const;

  double mean_density() const { return mean_; }
  double equilibration_time(double eps_rel) const;
  const GridFrame &grid_frame() const { return frame_; }

  struct Snapshot {
    double t = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> rho, gx, gy;
  };
  const Snapshot &snapshot(double t) const;
  Vec2 sample_velocity(const Snapshot &s, double px, double py) const;

private:
  void synthesize(Snapshot &snap, double t) const;

  GridFrame frame_;
  std::vector<double> coeff_;
  double mean_ = 0.0;
  struct Plans;
  std::unique_ptr<Plans> plans_;
  mutable Snapshot snap_a_, snap_b_;
  mutable int last_used_ = 0;
};

struct FlowOptions {
  double eq_threshold = 1e-3;     // stop when nonzero modes < this * mean
  double step_tol_cells = 0.01;   // Euler-vs-midpoint tolerance, cell widths
  double initial_dt = 0.0;        // 0 = choose from the equilibration time
};

struct FlowResult {
  DisplacementField field;
  std::vector<Point> mapped_targets;
  int accepted_steps = 0;
  int rejected_steps = 0;
  double t_end = 0.0;
};

// Advances every lattice node and every target along dx/dtau = v(x, tau)
// until the density has equilibrated.  Adaptive stepping: a step is accepted
// when Euler and midpoint predictions agree within step_tol_cells; the step
// halves on rejection and grows by 1.25 after five consecutive acceptances.
FlowResult integrate_flow(const DensityGrid &density,
                          std::span<const Point> targets,
                          const FlowOptions &options = {});

}  // namespace pycnoflow

#endif
