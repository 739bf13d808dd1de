#pragma once

// Measure-corrected Fokker-Planck-Kramers equation on a uniform cell-centred grid:
//
//   mu dP/dt = d/dv_a [ mu ( D_ab dP/dv_b - A_a P ) ]
//
// with A the drift and P the density relative to mu dv. Discretised in flux
// form with zero-flux boundary faces, so sum_cells mu P dV is conserved by
// telescoping.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eaf/algebra.hpp"

namespace eaf {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int cells = 8;

  double spacing() const noexcept { return (hi - lo) / cells; }
  double center(int i) const noexcept { return lo + (i + 0.5) * spacing(); }
};

class Grid {
 public:
  explicit Grid(std::vector<Axis> axes);

  int dim() const noexcept { return static_cast<int>(axes_.size()); }
  std::size_t size() const noexcept { return size_; }
  const Axis& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::size_t stride(int a) const { return strides_[static_cast<std::size_t>(a)]; }
  double cell_volume() const noexcept { return volume_; }

  /// Coordinate index of `cell` along axis a (axis 0 varies slowest).
  int index(std::size_t cell, int a) const {
    return static_cast<int>((cell / strides_[static_cast<std::size_t>(a)]) %
                            static_cast<std::size_t>(axes_[static_cast<std::size_t>(a)].cells));
  }
  VelocityState center(std::size_t cell) const;

  bool operator==(const Grid& other) const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double volume_ = 0.0;
};

/// Density P relative to mu dv, with mu cached at cell centres.
class DensityField {
 public:
  DensityField(Grid grid, const InvariantMeasure& measure, std::vector<double> values);

  template <class Fn>
  static DensityField from_function(Grid grid, const InvariantMeasure& measure, Fn&& fn) {
    std::vector<double> values(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) values[c] = fn(grid.center(c));
    return DensityField(std::move(grid), measure, std::move(values));
  }

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return p_; }
  std::vector<double>& values() noexcept { return p_; }
  const std::vector<double>& mu() const noexcept { return mu_; }

  /// sum mu P dV (compensated, fixed order)
  double mass() const;
  void normalize();

  /// mu P at each cell: the density with respect to dv.
  std::vector<double> dv_density() const;

 private:
  Grid grid_;
  std::vector<double> p_;
  std::vector<double> mu_;
};

/// Which drift enters the flux.
enum class FpkDrift {
  Full,            // -Gamma G v + geodesic drift
  DissipationOnly  // -Gamma G v (zero Hamiltonian drift)
};

/// Throws SingularityError if a cell or face of `grid` touches a zero of a
/// singular coordinate of the model's measure.
void require_regular_grid(const ModelSpec& model, const Grid& grid);

/// Precomputed flux-form operator for one model, grid and drift choice.
class FpkOperator {
 public:
  FpkOperator(const ModelSpec& model, Grid grid, FpkDrift drift = FpkDrift::Full, int threads = 1);

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<double>& mu() const noexcept { return mu_cell_; }

  /// dP/dt at every cell.
  void apply(const std::vector<double>& p, std::vector<double>& dpdt) const;

  /// c * min(min_a dx_a^2 / D_max, min_a dx_a / |A|_max), with the diffusive
  /// part scaled by 2/n for n > 2. Infinite when the operator vanishes.
  double stable_dt(double safety = 0.25) const;

 private:
  Grid grid_;
  int threads_;
  Matrix diffusion_;
  double diffusion_max_ = 0.0;
  double drift_max_ = 0.0;
  std::vector<double> mu_cell_;
  // Per axis, per cell: quantities on the face between the cell and its
  // successor along that axis (unused for the last cell of a line).
  std::vector<std::vector<double>> face_mu_;
  std::vector<std::vector<double>> face_drift_;
  mutable std::vector<std::vector<double>> flux_;
};

std::vector<double> fpk_rhs(const ModelSpec& model, const DensityField& field, FpkDrift drift = FpkDrift::Full,
                            int threads = 1);

struct EvolveOptions {
  FpkDrift drift = FpkDrift::Full;
  int threads = 1;
  double safety = 0.25;
  double max_mass_drift = 1e-8;
};

struct EvolveResult {
  DensityField field;
  long steps = 0;
  double clipped_mass = 0.0;  // cumulative mass removed by clipping negative values
  double mass_drift = 0.0;    // |net relative change of mass from the flux update|
};

/// Explicit Euler stepping of fpk_rhs over [0, T]. Refuses dt above the
/// stability bound; aborts if the mass drift exceeds the configured limit.
EvolveResult fpk_evolve(const ModelSpec& model, const DensityField& field, double T, double dt,
                        const EvolveOptions& options = {});

struct StationaryOptions {
  EvolveOptions evolve;
  double dt = 0.0;                 // 0: use the stability bound
  double check_interval = 1.0;     // time between convergence checks
  double tolerance = 1e-8;         // L1 change per unit time
  long max_steps = 5'000'000;
};

struct StationaryResult {
  DensityField field;
  double time = 0.0;
  long steps = 0;
  double last_change_rate = 0.0;
  double clipped_mass = 0.0;
  double mass_drift = 0.0;
};

/// Evolves until the mu-weighted L1 change per unit time drops below the
/// tolerance. Throws ConvergenceError when the step budget runs out.
StationaryResult run_to_stationarity(const ModelSpec& model, const DensityField& initial,
                                     const StationaryOptions& options);

/// sum_cells mu |P - Q| dV for fields on the same grid.
double l1_distance(const DensityField& p, const DensityField& q);

/// sum_cells |a - b| dV for dv-densities on `grid`.
double l1_distance(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b);

/// 1 - exp(-x^2/4) erf(x/2) / x with x = sqrt(beta) rho; series below rho = 1e-3.
double halfplane_bracket(double rho, double beta);

/// Closed-form half-plane equilibrium as a density with respect to dv0 dv1:
/// (v1 / rho^2) exp(-beta rho^2 / 2) * halfplane_bracket(rho, beta).
double halfplane_exact_stationary(double v0, double v1, double beta);

struct ModeSummary {
  double v1_marginal_dv = 0.0;  // mode of the v1-marginal of mu P
  double v1_marginal_p = 0.0;   // mode of the v1-marginal of P
  double joint_v0 = 0.0;        // mode of mu P on the grid
  double joint_v1 = 0.0;
  bool bounded_away = false;    // v1-marginal mode of mu P beyond the first two cells
};

ModeSummary halfplane_modes(const DensityField& field);

struct DistanceReportOptions {
  double gamma = 1.0;
  FpkDrift drift = FpkDrift::DissipationOnly;
  StationaryOptions stationary;
  double sensitivity_eps = 0.0;  // > 0: repeat the single run with this lower v1 edge
  bool measure_control = true;   // also solve with mu = 1 on the same grid
};

struct DistanceReport {
  double beta = 1.0;
  double gamma = 1.0;
  double eps = 0.0;
  double double_run_l1 = 0.0;         // uniform start vs off-centre Gaussian start
  double closed_form_l1 = 0.0;        // normalised dv-densities
  double closed_form_residual = 0.0;  // sum |mu dP/dt| dV for the closed form, normalised
  double solver_residual = 0.0;       // the same for the grid solution
  double mass_drift = 0.0;
  double clipped_mass = 0.0;
  double stationary_time = 0.0;
  long steps = 0;
  ModeSummary modes;
  ModeSummary closed_form_modes;
  double mean_v1 = 0.0;
  std::optional<double> sensitivity_eps;
  std::optional<double> sensitivity_closed_form_l1;
  std::optional<double> sensitivity_mode;
  std::optional<double> control_l1;       // mu = 1 solution vs mu = 1/v1 solution
  std::optional<double> control_mean_v1;
  DensityField field;                     // authoritative stationary field (uniform start)
};

/// Half-plane model with Gamma = gamma I and D = (gamma / beta) I solved to
/// stationarity on `grid` from two initial conditions and compared with the
/// closed form. `model` supplies the algebra, metric and measure.
DistanceReport stationary_distance_report(const ModelSpec& model, const Grid& grid, double beta,
                                          const DistanceReportOptions& options = {});

/// Half-plane model variant used by the FPK experiments.
ModelSpec halfplane_fpk_model(const ModelSpec& base, double beta, double gamma);

// Density CSV: one row per cell, columns v0..v{n-1}, P, muP; `#` lines are metadata.
void write_density_csv(std::ostream& os, const DensityField& field);
/// Reconstructs the grid from the cell centres in the file.
DensityField read_density_csv(std::istream& is, const InvariantMeasure& measure);

}  // namespace eaf
