#include "pycnoflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>

#include <fftw3.h>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace pycnoflow {

namespace {

// FFTW's planner is not thread-safe; executions of distinct plans are.
std::mutex &planner_mutex()
{
  static std::mutex m;
  return m;
}

void init_fftw_threads_once()
{
#if defined(_OPENMP) && defined(PYCNOFLOW_FFTW_OMP)
  static std::once_flag flag;
  std::call_once(flag, [] {
    fftw_init_threads();
  });
  fftw_plan_with_nthreads(omp_get_max_threads());
#endif
}

struct FftwBuffer {
  double *data = nullptr;
  explicit FftwBuffer(size_t n)
    : data(fftw_alloc_real(n))
  {
    if (data == nullptr) {
      throw std::bad_alloc();
    }
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer &) = delete;
  FftwBuffer &operator=(const FftwBuffer &) = delete;
};

// One-shot 2D r2r transform with ESTIMATE planning (deterministic output).
void run_r2r(int ny, int nx, const double *in, double *out,
             fftw_r2r_kind kind_y, fftw_r2r_kind kind_x)
{
  const size_t n = static_cast<size_t>(nx) * ny;
  FftwBuffer bin(n), bout(n);
  std::copy(in, in + n, bin.data);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    init_fftw_threads_once();
    plan = fftw_plan_r2r_2d(ny, nx, bin.data, bout.data, kind_y, kind_x,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::copy(bout.data, bout.data + n, out);
}

}  // namespace

SpectralField SpectralField::analyze(const DensityGrid &grid)
{
  if (grid.frame.nx < 2 || grid.frame.ny < 2) {
    throw std::runtime_error("grid too small for spectral analysis");
  }
  SpectralField field;
  field.frame_ = grid.frame;
  field.coeff_.resize(grid.values.size());
  run_r2r(grid.frame.ny, grid.frame.nx, grid.values.data(),
          field.coeff_.data(), FFTW_REDFT10, FFTW_REDFT10);
  return field;
}

DensityGrid SpectralField::synthesize() const
{
  return diffused(0.0);
}

DensityGrid SpectralField::diffused(double t) const
{
  const int nx = frame_.nx;
  const int ny = frame_.ny;
  const double norm = 1.0 / (4.0 * nx * ny);
  std::vector<double> decay_x(nx), decay_y(ny);
  for (int m = 0; m < nx; ++m) {
    const double k = M_PI * m / frame_.width();
    decay_x[m] = std::exp(-k * k * t);
  }
  for (int n = 0; n < ny; ++n) {
    const double k = M_PI * n / frame_.height();
    decay_y[n] = std::exp(-k * k * t);
  }

  std::vector<double> scaled(coeff_.size());
  for (int n = 0; n < ny; ++n) {
    const double dy = decay_y[n] * norm;
    for (int m = 0; m < nx; ++m) {
      scaled[static_cast<size_t>(n) * nx + m] =
        coeff_[static_cast<size_t>(n) * nx + m] * decay_x[m] * dy;
    }
  }

  DensityGrid out(frame_);
  run_r2r(ny, nx, scaled.data(), out.values.data(), FFTW_REDFT01,
          FFTW_REDFT01);
  return out;
}

void SpectralField::apply_gaussian(double sigma)
{
  if (sigma < 0.0) {
    throw std::runtime_error("sigma must be nonnegative");
  }
  if (sigma == 0.0) {
    return;
  }
  const int nx = frame_.nx;
  const int ny = frame_.ny;
  std::vector<double> gx(nx), gy(ny);
  for (int m = 0; m < nx; ++m) {
    const double k = M_PI * m / frame_.width();
    gx[m] = std::exp(-0.5 * sigma * sigma * k * k);
  }
  for (int n = 0; n < ny; ++n) {
    const double k = M_PI * n / frame_.height();
    gy[n] = std::exp(-0.5 * sigma * sigma * k * k);
  }
  for (int n = 0; n < ny; ++n) {
    for (int m = 0; m < nx; ++m) {
      coeff_[static_cast<size_t>(n) * nx + m] *= gx[m] * gy[n];
    }
  }
}

double SpectralField::total_mass() const
{
  return 0.25 * coeff_[0] * frame_.cell_area();
}

double SpectralField::mean() const
{
  return coeff_[0] / (4.0 * frame_.nx * frame_.ny);
}

double SpectralField::max_nonzero_amplitude(double t) const
{
  const int nx = frame_.nx;
  const int ny = frame_.ny;
  const double norm = 1.0 / (4.0 * nx * ny);
  double amp = 0.0;
  for (int n = 0; n < ny; ++n) {
    const double ky = M_PI * n / frame_.height();
    for (int m = 0; m < nx; ++m) {
      if (m == 0 && n == 0) {
        continue;
      }
      const double kx = M_PI * m / frame_.width();
      const double e = (m == 0 ? 1.0 : 2.0) * (n == 0 ? 1.0 : 2.0);
      const double a = std::abs(coeff_[static_cast<size_t>(n) * nx + m]) * e *
                       norm * std::exp(-(kx * kx + ky * ky) * t);
      amp = std::max(amp, a);
    }
  }
  return amp;
}

double SpectralField::equilibration_time(double eps_abs) const
{
  if (!(eps_abs > 0.0)) {
    throw std::runtime_error("equilibration threshold must be positive");
  }
  const int nx = frame_.nx;
  const int ny = frame_.ny;
  const double norm = 1.0 / (4.0 * nx * ny);
  double t_end = 0.0;
  for (int n = 0; n < ny; ++n) {
    const double ky = M_PI * n / frame_.height();
    for (int m = 0; m < nx; ++m) {
      if (m == 0 && n == 0) {
        continue;
      }
      const double amp =
        std::abs(coeff_[static_cast<size_t>(n) * nx + m]) *
        (m == 0 ? 1.0 : 2.0) * (n == 0 ? 1.0 : 2.0) * norm;
      if (amp > eps_abs) {
        const double kx = M_PI * m / frame_.width();
        t_end =
          std::max(t_end, std::log(amp / eps_abs) / (kx * kx + ky * ky));
      }
    }
  }
  return t_end;
}

DensityGrid gaussian_blur(const DensityGrid &grid, double sigma)
{
  if (sigma == 0.0) {
    return grid;
  }
  SpectralField field = SpectralField::analyze(grid);
  field.apply_gaussian(sigma);
  return field.synthesize();
}

DensityGrid diffuse(const SpectralField &initial, double t)
{
  if (t < 0.0) {
    throw std::runtime_error("diffusion time must be nonnegative");
  }
  return initial.diffused(t);
}

double DisplacementField::cell_signed_area(int i, int j) const
{
  const Point a = node(i, j);
  const Point b = node(i + 1, j);
  const Point c = node(i + 1, j + 1);
  const Point d = node(i, j + 1);
  return 0.5 * ((b.x - d.x) * (c.y - a.y) - (c.x - a.x) * (b.y - d.y));
}

DisplacementField identity_displacement(const GridFrame &frame)
{
  DisplacementField field;
  field.frame = frame;
  field.nodes.resize(static_cast<size_t>(frame.nx + 1) * (frame.ny + 1));
  for (int j = 0; j <= frame.ny; ++j) {
    for (int i = 0; i <= frame.nx; ++i) {
      field.nodes[static_cast<size_t>(j) * (frame.nx + 1) + i] = {
        frame.x0 + i * frame.cell_w, frame.y0 + j * frame.cell_h};
    }
  }
  return field;
}

// ---------------------------------------------------------------------------
// FlowField

struct FlowField::Plans {
  int nx = 0, ny = 0;
  FftwBuffer in, out;
  fftw_plan rho = nullptr;  // (REDFT01, REDFT01)
  fftw_plan gx = nullptr;   // sine along x
  fftw_plan gy = nullptr;   // sine along y

  Plans(int ny_, int nx_)
    : nx(nx_), ny(ny_), in(static_cast<size_t>(nx_) * ny_),
      out(static_cast<size_t>(nx_) * ny_)
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    init_fftw_threads_once();
    rho = fftw_plan_r2r_2d(ny, nx, in.data, out.data, FFTW_REDFT01,
                           FFTW_REDFT01, FFTW_ESTIMATE);
    gx = fftw_plan_r2r_2d(ny, nx, in.data, out.data, FFTW_REDFT01,
                          FFTW_RODFT01, FFTW_ESTIMATE);
    gy = fftw_plan_r2r_2d(ny, nx, in.data, out.data, FFTW_RODFT01,
                          FFTW_REDFT01, FFTW_ESTIMATE);
  }
  ~Plans()
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(rho);
    fftw_destroy_plan(gx);
    fftw_destroy_plan(gy);
  }
};

FlowField::FlowField(const DensityGrid &density)
  : frame_(density.frame)
{
  if (density.min_value() <= 0.0) {
    throw std::runtime_error(
      "flow density must be strictly positive (increase the blur width)");
  }
  SpectralField spectral = SpectralField::analyze(density);
  coeff_ = std::move(spectral.coeff_);
  mean_ = coeff_[0] / (4.0 * frame_.nx * frame_.ny);
  plans_ = std::make_unique<Plans>(frame_.ny, frame_.nx);
}

FlowField::~FlowField() = default;

double FlowField::equilibration_time(double eps_rel) const
{
  SpectralField spectral;
  spectral.frame_ = frame_;
  spectral.coeff_ = coeff_;
  return spectral.equilibration_time(eps_rel * std::abs(mean_));
}

void FlowField::synthesize(Snapshot &snap, double t) const
{
  // Invalidate first so a failed synthesis cannot leave stale data behind
  // a valid-looking timestamp.
  snap.t = std::numeric_limits<double>::quiet_NaN();

  const int nx = frame_.nx;
  const int ny = frame_.ny;
  const size_t cells = static_cast<size_t>(nx) * ny;
  const double norm = 1.0 / (4.0 * nx * ny);

  std::vector<double> kx(nx), ky(ny), decay_x(nx), decay_y(ny);
  for (int m = 0; m < nx; ++m) {
    kx[m] = M_PI * m / frame_.width();
    decay_x[m] = std::exp(-kx[m] * kx[m] * t);
  }
  for (int n = 0; n < ny; ++n) {
    ky[n] = M_PI * n / frame_.height();
    decay_y[n] = std::exp(-ky[n] * ky[n] * t);
  }

  snap.rho.resize(cells);
  snap.gx.resize(cells);
  snap.gy.resize(cells);
  double *in = plans_->in.data;
  double *out = plans_->out.data;

  // Density itself.
#pragma omp parallel for schedule(static)
  for (int n = 0; n < ny; ++n) {
    const double dy = decay_y[n] * norm;
    for (int m = 0; m < nx; ++m) {
      in[static_cast<size_t>(n) * nx + m] =
        coeff_[static_cast<size_t>(n) * nx + m] * decay_x[m] * dy;
    }
  }
  fftw_execute(plans_->rho);
  std::copy(out, out + cells, snap.rho.begin());

  // d(rho)/dx: sine series shifted one slot down in m.
#pragma omp parallel for schedule(static)
  for (int n = 0; n < ny; ++n) {
    const double dy = decay_y[n] * norm;
    for (int m = 1; m < nx; ++m) {
      in[static_cast<size_t>(n) * nx + (m - 1)] =
        -kx[m] * coeff_[static_cast<size_t>(n) * nx + m] * decay_x[m] * dy;
    }
    in[static_cast<size_t>(n) * nx + (nx - 1)] = 0.0;
  }
  fftw_execute(plans_->gx);
  std::copy(out, out + cells, snap.gx.begin());

  // d(rho)/dy.
#pragma omp parallel for schedule(static)
  for (int n = 1; n < ny; ++n) {
    const double dy = decay_y[n] * norm;
    for (int m = 0; m < nx; ++m) {
      in[static_cast<size_t>(n - 1) * nx + m] =
        -ky[n] * coeff_[static_cast<size_t>(n) * nx + m] * decay_x[m] * dy;
    }
  }
  for (int m = 0; m < nx; ++m) {
    in[static_cast<size_t>(ny - 1) * nx + m] = 0.0;
  }
  fftw_execute(plans_->gy);
  std::copy(out, out + cells, snap.gy.begin());

  // Convert in place to velocity components v = -grad(rho) / rho.
  double min_rho = snap.rho[0];
#pragma omp parallel for schedule(static) reduction(min : min_rho)
  for (long c = 0; c < static_cast<long>(cells); ++c) {
    min_rho = std::min(min_rho, snap.rho[c]);
    const double inv = 1.0 / snap.rho[c];
    snap.gx[c] = -snap.gx[c] * inv;
    snap.gy[c] = -snap.gy[c] * inv;
  }
  if (!(min_rho > 0.0)) {
    throw std::runtime_error(
      "nonpositive density during flow integration (blur width too small)");
  }
  snap.t = t;
}

const FlowField::Snapshot &FlowField::snapshot(double t) const
{
  if (!(t >= 0.0)) {
    throw std::runtime_error("pseudo-time must be nonnegative");
  }
  if (snap_a_.t == t) {
    last_used_ = 0;
    return snap_a_;
  }
  if (snap_b_.t == t) {
    last_used_ = 1;
    return snap_b_;
  }
  Snapshot &victim = last_used_ == 0 ? snap_b_ : snap_a_;
  synthesize(victim, t);
  last_used_ = (&victim == &snap_a_) ? 0 : 1;
  return victim;
}

Vec2 FlowField::sample_velocity(const Snapshot &s, double px,
                                double py) const
{
  const int nx = frame_.nx;
  const int ny = frame_.ny;
  const double u = (px - frame_.x0) / frame_.cell_w - 0.5;
  const double v = (py - frame_.y0) / frame_.cell_h - 0.5;
  const int i0 = static_cast<int>(std::floor(u));
  const int j0 = static_cast<int>(std::floor(v));
  const double fx = u - i0;
  const double fy = v - j0;

  // Ghost cells mirror the first interior cell; the normal component flips
  // sign so it interpolates to zero exactly on the wall.
  auto fetch = [&](int i, int j, bool x_component) {
    double sign = 1.0;
    if (i < 0) {
      i = 0;
      if (x_component) sign = -sign;
    } else if (i >= nx) {
      i = nx - 1;
      if (x_component) sign = -sign;
    }
    if (j < 0) {
      j = 0;
      if (!x_component) sign = -sign;
    } else if (j >= ny) {
      j = ny - 1;
      if (!x_component) sign = -sign;
    }
    const double *grid = x_component ? s.gx.data() : s.gy.data();
    return sign * grid[static_cast<size_t>(j) * nx + i];
  };

  Vec2 out;
  out.x = (1 - fy) * ((1 - fx) * fetch(i0, j0, true) +
                      fx * fetch(i0 + 1, j0, true)) +
          fy * ((1 - fx) * fetch(i0, j0 + 1, true) +
                fx * fetch(i0 + 1, j0 + 1, true));
  out.y = (1 - fy) * ((1 - fx) * fetch(i0, j0, false) +
                      fx * fetch(i0 + 1, j0, false)) +
          fy * ((1 - fx) * fetch(i0, j0 + 1, false) +
                fx * fetch(i0 + 1, j0 + 1, false));
  return out;
}

Vec2 FlowField::velocity_at(const Point &p, double t) const
{
  return sample_velocity(snapshot(t), p.x, p.y);
}

// ---------------------------------------------------------------------------
// integrate_flow

namespace {

void check_orientation(std::span<const Point> nodes, int nx, int ny)
{
  bool flipped = false;
  int bad_i = -1, bad_j = -1;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point &a = nodes[static_cast<size_t>(j) * (nx + 1) + i];
      const Point &b = nodes[static_cast<size_t>(j) * (nx + 1) + i + 1];
      const Point &c = nodes[static_cast<size_t>(j + 1) * (nx + 1) + i + 1];
      const Point &d = nodes[static_cast<size_t>(j + 1) * (nx + 1) + i];
      const double area2 = (b.x - d.x) * (c.y - a.y) -
                           (c.x - a.x) * (b.y - d.y);
      if (!(area2 > 0.0)) {
#pragma omp critical
        {
          flipped = true;
          bad_i = i;
          bad_j = j;
        }
      }
    }
  }
  if (flipped) {
    throw std::runtime_error("orientation flip in cell (" +
                             std::to_string(bad_i) + "," +
                             std::to_string(bad_j) +
                             ") during flow integration");
  }
}

}  // namespace

FlowResult integrate_flow(const DensityGrid &density,
                          std::span<const Point> targets,
                          const FlowOptions &options)
{
  const GridFrame &frame = density.frame;
  FlowField field(density);

  const size_t node_count =
    static_cast<size_t>(frame.nx + 1) * (frame.ny + 1);
  std::vector<Point> pts;
  pts.reserve(node_count + targets.size());
  for (int j = 0; j <= frame.ny; ++j) {
    for (int i = 0; i <= frame.nx; ++i) {
      pts.push_back({frame.x0 + i * frame.cell_w,
                     frame.y0 + j * frame.cell_h});
    }
  }
  pts.insert(pts.end(), targets.begin(), targets.end());
  const long total = static_cast<long>(pts.size());

  FlowResult result;
  result.t_end = field.equilibration_time(options.eq_threshold);

  const double xmax = frame.x0 + frame.width();
  const double ymax = frame.y0 + frame.height();
  auto clamp_point = [&](Point p) {
    p.x = std::clamp(p.x, frame.x0, xmax);
    p.y = std::clamp(p.y, frame.y0, ymax);
    return p;
  };

  if (result.t_end > 0.0) {
    const double tol_len = options.step_tol_cells * frame.cell_w;
    const double dt0 = options.initial_dt > 0.0 ? options.initial_dt
                                                : result.t_end * 1e-4;
    double dt = dt0;
    double tau = 0.0;
    int streak = 0;
    std::vector<double> v1x(pts.size()), v1y(pts.size());
    std::vector<Point> cand(pts.size());
    bool have_v1 = false;

    while (tau < result.t_end) {
      const FlowField::Snapshot &s0 = field.snapshot(tau);
      if (!have_v1) {
#pragma omp parallel for schedule(static)
        for (long p = 0; p < total; ++p) {
          const Vec2 v = field.sample_velocity(s0, pts[p].x, pts[p].y);
          v1x[p] = v.x;
          v1y[p] = v.y;
        }
        have_v1 = true;
      }

      const double dt_use = std::min(dt, result.t_end - tau);
      const FlowField::Snapshot &sm = field.snapshot(tau + 0.5 * dt_use);

      double err = 0.0;
#pragma omp parallel for schedule(static) reduction(max : err)
      for (long p = 0; p < total; ++p) {
        const Point half = clamp_point({pts[p].x + 0.5 * dt_use * v1x[p],
                                        pts[p].y + 0.5 * dt_use * v1y[p]});
        const Vec2 v2 = field.sample_velocity(sm, half.x, half.y);
        cand[p] = clamp_point(
          {pts[p].x + dt_use * v2.x, pts[p].y + dt_use * v2.y});
        err = std::max(err, dt_use * std::hypot(v2.x - v1x[p],
                                                v2.y - v1y[p]));
      }

      if (err < tol_len) {
        pts.swap(cand);
        tau += dt_use;
        ++result.accepted_steps;
        have_v1 = false;
        if (++streak >= 5) {
          dt *= 1.25;
          streak = 0;
        }
        check_orientation({pts.data(), node_count}, frame.nx, frame.ny);
      } else {
        dt *= 0.5;
        streak = 0;
        ++result.rejected_steps;
        if (dt < 1e-12 * dt0) {
          throw std::runtime_error(
            "flow integration step underflow at tau = " +
            std::to_string(tau));
        }
      }
    }
  }

  result.field.frame = frame;
  result.field.nodes.assign(pts.begin(), pts.begin() + node_count);
  result.mapped_targets.assign(pts.begin() + node_count, pts.end());
  return result;
}

}  // namespace pycnoflow
