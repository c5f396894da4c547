#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "pycnoflow/driver.hpp"
#include "pycnoflow/flow.hpp"
#include "pycnoflow/rasterize.hpp"

using namespace pycnoflow;
using namespace pycnoflow::test;

namespace {

GridFrame unit_frame(int n)
{
  return make_grid_frame({0.0, 0.0, 1.0, 1.0}, n);
}

// rho_bar * (1 + eps * cos(pi x / L_x)), the slowest cosine eigenmode.
DensityGrid eigenmode_grid(int n, double rho_bar, double eps)
{
  DensityGrid grid(unit_frame(n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      grid.at(i, j) =
        rho_bar * (1.0 + eps * std::cos(M_PI * grid.frame.center_x(i)));
    }
  }
  return grid;
}

DensityGrid random_grid(int n, unsigned seed)
{
  DensityGrid grid(unit_frame(n));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> value(0.1, 10.0);
  for (double &v : grid.values) {
    v = value(rng);
  }
  return grid;
}

// Analytic velocity of the eigenmode under diffusion.
double eigenmode_velocity(double x, double t, double eps)
{
  const double lambda = M_PI * M_PI;  // (pi / L)^2 with L = 1
  const double decay = eps * std::exp(-lambda * t);
  return decay * M_PI * std::sin(M_PI * x) /
         (1.0 + decay * std::cos(M_PI * x));
}

}  // namespace

TEST_CASE("gaussian_blur with sigma 0 is the identity")
{
  const DensityGrid grid = random_grid(32, 7);
  const DensityGrid out = gaussian_blur(grid, 0.0);
  for (size_t c = 0; c < grid.values.size(); ++c) {
    CHECK(out.values[c] == grid.values[c]);
  }
}

TEST_CASE("gaussian_blur conserves total mass")
{
  for (unsigned seed = 0; seed < 20; ++seed) {
    const DensityGrid grid = random_grid(48, seed);
    const DensityGrid out = gaussian_blur(grid, 0.07);
    CHECK(std::abs(out.mass() - grid.mass()) <= 1e-10 * grid.mass());
  }
}

TEST_CASE("gaussian_blur of a point mass matches direct convolution")
{
  // Unit point mass at the center of a 128x128 grid, sigma = 8 cells.
  const int n = 128;
  GridFrame frame = make_grid_frame({0.0, 0.0, 128.0, 128.0}, n);
  DensityGrid grid(frame);
  grid.at(n / 2, n / 2) = 1.0 / frame.cell_area();
  const double sigma = 8.0;

  const DensityGrid out = gaussian_blur(grid, sigma);

  // Oracle: normalized discrete Gaussian kernel applied directly.
  double weight_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double dx = frame.center_x(i) - frame.center_x(n / 2);
      const double dy = frame.center_y(j) - frame.center_y(n / 2);
      weight_sum += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  const double oracle_center = 1.0 / (weight_sum * frame.cell_area());
  const double center = out.at(n / 2, n / 2);

  CHECK(std::abs(center - oracle_center) < 1e-3 * oracle_center);
  const double analytic = 1.0 / (2.0 * M_PI * sigma * sigma);
  CHECK(std::abs(center - analytic) < 0.02 * analytic);
}

TEST_CASE("spectral zero mode carries the total mass")
{
  const DensityGrid grid = random_grid(40, 3);
  const SpectralField field = SpectralField::analyze(grid);
  CHECK(std::abs(field.total_mass() - grid.mass()) <=
        1e-12 * std::abs(grid.mass()));

  const DensityGrid back = field.synthesize();
  for (size_t c = 0; c < grid.values.size(); ++c) {
    CHECK(back.values[c] == doctest::Approx(grid.values[c]).epsilon(1e-12));
  }
}

TEST_CASE("diffuse leaves a uniform density unchanged")
{
  DensityGrid grid(unit_frame(32), 5.0);
  const SpectralField field = SpectralField::analyze(grid);
  for (double t : {0.0, 0.1, 3.0}) {
    const DensityGrid out = diffuse(field, t);
    CHECK(out.min_value() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(out.max_value() == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("diffuse matches the analytic eigenmode decay")
{
  const int n = 128;
  const double rho_bar = 4.0;
  const double eps = 0.1;
  const DensityGrid grid = eigenmode_grid(n, rho_bar, eps);
  const SpectralField field = SpectralField::analyze(grid);

  for (double t : {0.01, 0.05, 0.2}) {
    const DensityGrid out = diffuse(field, t);
    const double decay = std::exp(-M_PI * M_PI * t);
    for (int i = 0; i < n; i += 7) {
      const double expected =
        rho_bar *
        (1.0 + eps * decay * std::cos(M_PI * grid.frame.center_x(i)));
      CHECK(std::abs(out.at(i, n / 2) - expected) <= 1e-6 * expected);
    }
  }
}

TEST_CASE("diffuse flattens all nonzero modes at large time")
{
  const DensityGrid grid = random_grid(64, 11);
  const SpectralField field = SpectralField::analyze(grid);
  const double mean = field.mean();
  const double t_large = 20.0 / (M_PI * M_PI);
  const DensityGrid out = diffuse(field, t_large);
  CHECK(std::abs(out.max_value() - mean) / mean < 1e-8);
  CHECK(std::abs(out.min_value() - mean) / mean < 1e-8);
  CHECK(std::abs(out.mass() - grid.mass()) <= 1e-10 * grid.mass());
}

TEST_CASE("velocity vanishes for a uniform density")
{
  DensityGrid grid(unit_frame(32), 2.5);
  const FlowField field(grid);
  for (double x : {0.1, 0.5, 0.93}) {
    for (double y : {0.2, 0.77}) {
      const Vec2 v = field.velocity_at({x, y}, 0.05);
      CHECK(std::abs(v.x) < 1e-12);
      CHECK(std::abs(v.y) < 1e-12);
    }
  }
}

TEST_CASE("velocity matches the analytic eigenmode formula")
{
  const int n = 128;
  const double eps = 0.1;
  const DensityGrid grid = eigenmode_grid(n, 4.0, eps);
  const FlowField field(grid);

  for (double t : {0.0, 0.02, 0.1}) {
    for (int i = 4; i < n - 4; i += 9) {
      const double x = grid.frame.center_x(i);
      const Vec2 v = field.velocity_at({x, 0.5}, t);
      const double expected = eigenmode_velocity(x, t, eps);
      CHECK(std::abs(v.x - expected) <=
            1e-4 * std::max(std::abs(expected), 1e-6));
      CHECK(std::abs(v.y) < 1e-10);
    }
  }
}

TEST_CASE("normal velocity vanishes at the no-flux walls")
{
  const int n = 64;
  DensityGrid grid = random_grid(n, 19);
  // Make the field smooth and strictly positive first.
  grid = gaussian_blur(grid, 0.1);
  const FlowField field(grid);

  for (double s : {0.0, 0.21, 0.5, 0.83, 1.0}) {
    CHECK(std::abs(field.velocity_at({0.0, s}, 0.01).x) < 1e-8);
    CHECK(std::abs(field.velocity_at({1.0, s}, 0.01).x) < 1e-8);
    CHECK(std::abs(field.velocity_at({s, 0.0}, 0.01).y) < 1e-8);
    CHECK(std::abs(field.velocity_at({s, 1.0}, 0.01).y) < 1e-8);
  }
}

TEST_CASE("velocity field is curl-free")
{
  const int n = 512;
  DensityGrid grid(unit_frame(n));
  for (int j = 0; j < n; ++j) {
    const double cy = std::cos(M_PI * grid.frame.center_y(j));
    for (int i = 0; i < n; ++i) {
      grid.at(i, j) =
        4.0 * (1.0 + 0.1 * std::cos(M_PI * grid.frame.center_x(i)) * cy);
    }
  }
  const FlowField field(grid);
  const FlowField::Snapshot &snap = field.snapshot(0.0);

  const double h = grid.frame.cell_w;
  double max_curl = 0.0;
  double max_v = 0.0;
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const size_t c = static_cast<size_t>(j) * n + i;
      const double dvy_dx = (snap.gy[c + 1] - snap.gy[c - 1]) / (2 * h);
      const double dvx_dy = (snap.gx[c + n] - snap.gx[c - n]) / (2 * h);
      max_curl = std::max(max_curl, std::abs(dvy_dx - dvx_dy));
      max_v = std::max(max_v, std::hypot(snap.gx[c], snap.gy[c]));
    }
  }
  CHECK(max_curl < 1e-6 * max_v);
}

TEST_CASE("integrate_flow of a zero residual is the identity")
{
  DensityGrid grid(unit_frame(32), 4.0);
  const std::vector<Point> targets{{0.3, 0.4}, {0.71, 0.22}};
  const FlowResult result = integrate_flow(grid, targets);

  CHECK(result.accepted_steps == 0);
  const DisplacementField identity = identity_displacement(grid.frame);
  for (size_t k = 0; k < result.field.nodes.size(); ++k) {
    CHECK(std::abs(result.field.nodes[k].x - identity.nodes[k].x) < 1e-12);
    CHECK(std::abs(result.field.nodes[k].y - identity.nodes[k].y) < 1e-12);
  }
  CHECK(result.mapped_targets[0].x == targets[0].x);
  CHECK(result.mapped_targets[1].y == targets[1].y);
}

TEST_CASE("integrate_flow matches a fine-step RK4 reference on the eigenmode")
{
  const int n = 128;
  const double eps = 0.1;
  const DensityGrid grid = eigenmode_grid(n, 4.0, eps);

  const std::vector<Point> targets{{0.25, 0.5}};
  const FlowResult result = integrate_flow(grid, targets);
  REQUIRE(result.accepted_steps > 0);

  // Reference: RK4 on the analytic velocity with steps far below the
  // integrator's accepted step size.
  const long steps = 200000;
  const double dt = result.t_end / steps;
  double x = 0.25;
  double t = 0.0;
  for (long s = 0; s < steps; ++s) {
    const double k1 = eigenmode_velocity(x, t, eps);
    const double k2 = eigenmode_velocity(x + 0.5 * dt * k1, t + 0.5 * dt,
                                         eps);
    const double k3 = eigenmode_velocity(x + 0.5 * dt * k2, t + 0.5 * dt,
                                         eps);
    const double k4 = eigenmode_velocity(x + dt * k3, t + dt, eps);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
  }

  CHECK(std::abs(result.mapped_targets[0].x - x) < 1e-3);
  CHECK(std::abs(result.mapped_targets[0].y - 0.5) < 1e-9);

  // Mass-transport identity: the final position of a tracer satisfies
  // rho_bar * x_inf = integral of the initial density up to x_0.
  const double x_inf = 0.25 + eps / M_PI * std::sin(M_PI * 0.25);
  CHECK(std::abs(result.mapped_targets[0].x - x_inf) < 3e-3);
}

TEST_CASE("blurred half-split flow pushes the boundary toward the sparse side")
{
  const FitResult fit = fit_frame(half_split(), 128, 1.5);
  const LabelGrid labels = rasterize_labels(fit.map, 128);
  DensityGrid density = plateau_density(fit.map, labels);
  density = gaussian_blur(density, 128.0 / 20.0);
  REQUIRE(density.min_value() > 0.0);

  std::vector<Point> boundary;
  for (double y = 30.0; y <= 98.0; y += 8.0) {
    boundary.push_back({64.0, y});
  }
  const FlowResult result = integrate_flow(density, boundary);
  for (const Point &p : result.mapped_targets) {
    CHECK(p.x > 64.0);
  }

  // Orientation is preserved in every displacement cell.
  for (int j = 0; j < 128; ++j) {
    for (int i = 0; i < 128; ++i) {
      CHECK(result.field.cell_signed_area(i, j) > 0.0);
    }
  }

  // Equal-mass transport: the displaced boundary encloses more than half of
  // the frame column span on the dense side.
  double mean_x = 0.0;
  for (const Point &p : result.mapped_targets) {
    mean_x += p.x;
  }
  mean_x /= static_cast<double>(result.mapped_targets.size());
  CHECK(mean_x > 64.0);
}

TEST_CASE("integrate_flow rejects nonpositive densities")
{
  DensityGrid grid(unit_frame(16), 1.0);
  grid.at(3, 3) = 0.0;
  CHECK_THROWS_AS(integrate_flow(grid, {}), std::runtime_error);
}

TEST_CASE("flow integration is deterministic")
{
  const int n = 64;
  const DensityGrid grid = eigenmode_grid(n, 4.0, 0.1);
  const std::vector<Point> targets{{0.25, 0.5}, {0.6, 0.3}};
  const FlowResult a = integrate_flow(grid, targets);
  const FlowResult b = integrate_flow(grid, targets);
  CHECK(a.accepted_steps == b.accepted_steps);
  CHECK(a.rejected_steps == b.rejected_steps);
  for (size_t k = 0; k < a.field.nodes.size(); ++k) {
    CHECK(a.field.nodes[k].x == b.field.nodes[k].x);
    CHECK(a.field.nodes[k].y == b.field.nodes[k].y);
  }
}
