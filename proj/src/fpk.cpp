#include "eaf/fpk.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "eaf/format.hpp"
#include "eaf/rk4.hpp"

namespace eaf {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double weighted_sum(const std::vector<double>& p, const std::vector<double>& mu, double volume) {
  CompensatedSum s;
  for (std::size_t c = 0; c < p.size(); ++c) s.add(mu[c] * p[c]);
  return s.value() * volume;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 3) throw DimensionError("FPK grids support 1 to 3 dimensions");
  for (const auto& ax : axes_) {
    if (!std::isfinite(ax.lo) || !std::isfinite(ax.hi) || !(ax.lo < ax.hi)) {
      throw ConfigError("grid axis needs finite min < max");
    }
    if (ax.cells < 8) throw ConfigError("grid axis needs at least 8 cells");
  }
  strides_.assign(axes_.size(), 1);
  for (int a = dim() - 2; a >= 0; --a) {
    strides_[static_cast<std::size_t>(a)] =
        strides_[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(axes_[static_cast<std::size_t>(a) + 1].cells);
  }
  size_ = strides_[0] * static_cast<std::size_t>(axes_[0].cells);
  volume_ = 1.0;
  for (const auto& ax : axes_) volume_ *= ax.spacing();
}

VelocityState Grid::center(std::size_t cell) const {
  VelocityState v(dim());
  for (int a = 0; a < dim(); ++a) v[a] = axis(a).center(index(cell, a));
  return v;
}

bool Grid::operator==(const Grid& other) const {
  if (dim() != other.dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    const auto& x = axis(a);
    const auto& y = other.axis(a);
    if (x.lo != y.lo || x.hi != y.hi || x.cells != y.cells) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// DensityField

DensityField::DensityField(Grid grid, const InvariantMeasure& measure, std::vector<double> values)
    : grid_(std::move(grid)), p_(std::move(values)) {
  if (measure.dim() != grid_.dim()) throw DimensionError("density field: measure and grid dimensions differ");
  if (p_.size() != grid_.size()) throw DimensionError("density field: value count does not match the grid");
  mu_.resize(grid_.size());
  for (std::size_t c = 0; c < grid_.size(); ++c) {
    mu_[c] = measure(grid_.center(c));
    if (!(mu_[c] > 0.0) || !std::isfinite(mu_[c])) throw SingularityError("density field: mu not positive on the grid");
  }
}

double DensityField::mass() const { return weighted_sum(p_, mu_, grid_.cell_volume()); }

void DensityField::normalize() {
  const double m = mass();
  if (!(m > 0.0)) throw RuntimeFailure("density field has no mass to normalise");
  for (double& x : p_) x /= m;
}

std::vector<double> DensityField::dv_density() const {
  std::vector<double> out(p_.size());
  for (std::size_t c = 0; c < p_.size(); ++c) out[c] = mu_[c] * p_[c];
  return out;
}

// ---------------------------------------------------------------------------
// Operator

void require_regular_grid(const ModelSpec& model, const Grid& grid) {
  if (grid.dim() != model.dim()) throw DimensionError("grid dimension does not match the model");
  for (int a : model.measure().singular_coordinates()) {
    const auto& ax = grid.axis(a);
    if (!(ax.lo > 0.0 || ax.hi < 0.0)) {
      throw SingularityError("grid axis " + std::to_string(a) + " touches a singularity of the invariant measure");
    }
  }
}

FpkOperator::FpkOperator(const ModelSpec& model, Grid grid, FpkDrift drift, int threads)
    : grid_(std::move(grid)), threads_(threads > 0 ? threads : 1), diffusion_(model.noise().matrix()) {
  require_regular_grid(model, grid_);
  const int n = grid_.dim();
  const std::size_t cells = grid_.size();
  diffusion_max_ = diffusion_.cwiseAbs().rowwise().sum().maxCoeff();

  mu_cell_.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) mu_cell_[c] = model.measure()(grid_.center(c));

  face_mu_.assign(static_cast<std::size_t>(n), std::vector<double>(cells, 0.0));
  face_drift_.assign(static_cast<std::size_t>(n), std::vector<double>(cells, 0.0));
  flux_.assign(static_cast<std::size_t>(n), std::vector<double>(cells, 0.0));

  VelocityState a_face(n);
  for (int a = 0; a < n; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double half = 0.5 * grid_.axis(a).spacing();
    for (std::size_t c = 0; c < cells; ++c) {
      if (grid_.index(c, a) + 1 >= grid_.axis(a).cells) continue;
      const std::size_t j = c + grid_.stride(a);
      VelocityState x = grid_.center(c);
      x[a] += half;
      if (drift == FpkDrift::Full) {
        dissipative_drift_into(model, x, a_face);
      } else {
        a_face.noalias() = -model.relaxation() * x;
      }
      face_mu_[ua][c] = 0.5 * (mu_cell_[c] + mu_cell_[j]);
      face_drift_[ua][c] = a_face[a];
      drift_max_ = std::max(drift_max_, std::abs(a_face[a]));
    }
  }
}

void FpkOperator::apply(const std::vector<double>& p, std::vector<double>& dpdt) const {
  const int n = grid_.dim();
  const auto cells = static_cast<long>(grid_.size());
  if (p.size() != grid_.size()) throw DimensionError("FPK operator applied to a field of the wrong size");
  dpdt.resize(grid_.size());

  // Centred difference along axis b at cell k, one-sided at the edges.
  auto gradient = [&](std::size_t k, int b) {
    const int i = grid_.index(k, b);
    const int last = grid_.axis(b).cells - 1;
    const std::size_t s = grid_.stride(b);
    const double dx = grid_.axis(b).spacing();
    if (i == 0) return (p[k + s] - p[k]) / dx;
    if (i == last) return (p[k] - p[k - s]) / dx;
    return (p[k + s] - p[k - s]) / (2.0 * dx);
  };

#pragma omp parallel num_threads(threads_)
  {
    for (int a = 0; a < n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const std::size_t stride = grid_.stride(a);
      const int last = grid_.axis(a).cells - 1;
      const double dx = grid_.axis(a).spacing();
      const double daa = diffusion_(a, a);
#pragma omp for schedule(static)
      for (long lc = 0; lc < cells; ++lc) {
        const auto c = static_cast<std::size_t>(lc);
        if (grid_.index(c, a) == last) {
          flux_[ua][c] = 0.0;
          continue;
        }
        const std::size_t j = c + stride;
        double f = daa * (p[j] - p[c]) / dx;
        for (int b = 0; b < n; ++b) {
          if (b == a || diffusion_(a, b) == 0.0) continue;
          f += diffusion_(a, b) * 0.5 * (gradient(c, b) + gradient(j, b));
        }
        f -= face_drift_[ua][c] * 0.5 * (p[c] + p[j]);
        flux_[ua][c] = face_mu_[ua][c] * f;
      }
    }
#pragma omp for schedule(static)
    for (long lc = 0; lc < cells; ++lc) {
      const auto c = static_cast<std::size_t>(lc);
      double div = 0.0;
      for (int a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double dx = grid_.axis(a).spacing();
        double d = flux_[ua][c];
        if (grid_.index(c, a) > 0) d -= flux_[ua][c - grid_.stride(a)];
        div += d / dx;
      }
      dpdt[c] = div / mu_cell_[c];
    }
  }
}

double FpkOperator::stable_dt(double safety) const {
  const double inf = std::numeric_limits<double>::infinity();
  double min_dx = inf;
  for (const auto& ax : grid_.axes()) min_dx = std::min(min_dx, ax.spacing());
  const int n = grid_.dim();
  const double diffusive = diffusion_max_ > 0.0 ? min_dx * min_dx / diffusion_max_ * (n > 2 ? 2.0 / n : 1.0) : inf;
  const double advective = drift_max_ > 0.0 ? min_dx / drift_max_ : inf;
  return safety * std::min(diffusive, advective);
}

std::vector<double> fpk_rhs(const ModelSpec& model, const DensityField& field, FpkDrift drift, int threads) {
  FpkOperator op(model, field.grid(), drift, threads);
  std::vector<double> out;
  op.apply(field.values(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Time stepping

namespace {

class Evolver {
 public:
  Evolver(const FpkOperator& op, std::vector<double> p, double dt, double max_drift)
      : op_(op), p_(std::move(p)), dt_(dt), max_drift_(max_drift) {
    mass0_ = mass();
    if (!(mass0_ > 0.0)) throw ConfigError("FPK initial field must have positive mass");
    mass_ = mass0_;
  }

  void step() {
    op_.apply(p_, rhs_);
    for (std::size_t c = 0; c < p_.size(); ++c) p_[c] += dt_ * rhs_[c];
    const double updated = mass();
    net_drift_ += updated - mass_;
    if (std::abs(net_drift_) / mass0_ > max_drift_) {
      std::ostringstream msg;
      msg << "fpk: relative mass drift " << std::abs(net_drift_) / mass0_ << " exceeds " << max_drift_ << " after "
          << steps_ + 1 << " steps";
      throw RuntimeFailure(msg.str());
    }
    mass_ = updated;
    clip();
    ++steps_;
  }

  double mass() const { return weighted_sum(p_, op_.mu(), op_.grid().cell_volume()); }
  const std::vector<double>& values() const { return p_; }
  long steps() const { return steps_; }
  double clipped() const { return clipped_ / mass0_; }
  double drift() const { return std::abs(net_drift_) / mass0_; }

 private:
  void clip() {
    bool any = false;
    for (double x : p_) {
      if (x < 0.0) {
        any = true;
        break;
      }
    }
    if (!any) return;
    const auto& mu = op_.mu();
    double removed = 0.0;
    for (std::size_t c = 0; c < p_.size(); ++c) {
      if (p_[c] < 0.0) {
        removed -= mu[c] * p_[c];
        p_[c] = 0.0;
      }
    }
    clipped_ += removed * op_.grid().cell_volume();
    const double scale = mass_ / mass();
    for (double& x : p_) x *= scale;
  }

  const FpkOperator& op_;
  std::vector<double> p_;
  std::vector<double> rhs_;
  double dt_;
  double max_drift_;
  double mass0_ = 0.0;
  double mass_ = 0.0;
  double net_drift_ = 0.0;
  double clipped_ = 0.0;
  long steps_ = 0;
};

void check_dt(const FpkOperator& op, double dt, double safety) {
  const double bound = op.stable_dt(safety);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("fpk: dt must be positive");
  if (dt > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "fpk: dt = " << dt << " exceeds the explicit stability bound " << bound;
    throw ConfigError(msg.str());
  }
}

}  // namespace

EvolveResult fpk_evolve(const ModelSpec& model, const DensityField& field, double T, double dt,
                        const EvolveOptions& options) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("fpk: T must be positive");
  FpkOperator op(model, field.grid(), options.drift, options.threads);
  const long steps = detail::step_count(T, dt);
  const double h = T / static_cast<double>(steps);
  check_dt(op, h, options.safety);

  Evolver ev(op, field.values(), h, options.max_mass_drift);
  for (long k = 0; k < steps; ++k) ev.step();
  return EvolveResult{DensityField(field.grid(), model.measure(), ev.values()), ev.steps(), ev.clipped(), ev.drift()};
}

StationaryResult run_to_stationarity(const ModelSpec& model, const DensityField& initial,
                                     const StationaryOptions& options) {
  FpkOperator op(model, initial.grid(), options.evolve.drift, options.evolve.threads);
  const double dt = options.dt > 0.0 ? options.dt : op.stable_dt(options.evolve.safety);
  if (!std::isfinite(dt)) throw ConfigError("fpk: operator vanishes; nothing to evolve");
  check_dt(op, dt, options.evolve.safety);
  const long per_check = std::max(1L, static_cast<long>(std::llround(options.check_interval / dt)));

  Evolver ev(op, initial.values(), dt, options.evolve.max_mass_drift);
  const auto& mu = op.mu();
  const double volume = initial.grid().cell_volume();
  double rate = std::numeric_limits<double>::infinity();
  while (ev.steps() < options.max_steps) {
    const std::vector<double> before = ev.values();
    for (long k = 0; k < per_check; ++k) ev.step();
    CompensatedSum change;
    for (std::size_t c = 0; c < before.size(); ++c) change.add(mu[c] * std::abs(ev.values()[c] - before[c]));
    rate = change.value() * volume / ev.mass() / (static_cast<double>(per_check) * dt);
    if (rate < options.tolerance) {
      return StationaryResult{DensityField(initial.grid(), model.measure(), ev.values()),
                              static_cast<double>(ev.steps()) * dt,
                              ev.steps(),
                              rate,
                              ev.clipped(),
                              ev.drift()};
    }
  }
  std::ostringstream msg;
  msg << "fpk: no stationary state within " << options.max_steps << " steps (last L1 change rate " << rate << ")";
  throw ConvergenceError(msg.str());
}

double l1_distance(const DensityField& p, const DensityField& q) {
  if (!(p.grid() == q.grid())) throw DimensionError("l1_distance: fields live on different grids");
  CompensatedSum s;
  for (std::size_t c = 0; c < p.values().size(); ++c) s.add(p.mu()[c] * std::abs(p.values()[c] - q.values()[c]));
  return s.value() * p.grid().cell_volume();
}

double l1_distance(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != grid.size() || b.size() != grid.size()) throw DimensionError("l1_distance: size mismatch");
  CompensatedSum s;
  for (std::size_t c = 0; c < a.size(); ++c) s.add(std::abs(a[c] - b[c]));
  return s.value() * grid.cell_volume();
}

// ---------------------------------------------------------------------------
// Half-plane closed form

double halfplane_bracket(double rho, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(rho > 0.0)) throw ConfigError("halfplane_bracket: rho must be positive");
  const double x = std::sqrt(beta) * rho;
  if (x < 1e-3) {
    const double x2 = x * x;
    return 1.0 - (1.0 - x2 / 3.0 + 7.0 * x2 * x2 / 120.0) * std::numbers::inv_sqrtpi;
  }
  return 1.0 - std::exp(-0.25 * x * x) * std::erf(0.5 * x) / x;
}

double halfplane_exact_stationary(double v0, double v1, double beta) {
  if (!(v1 > 0.0)) throw ConfigError("halfplane_exact_stationary: v1 must be positive");
  const double rho2 = v0 * v0 + v1 * v1;
  return v1 / rho2 * std::exp(-0.5 * beta * rho2) * halfplane_bracket(std::sqrt(rho2), beta);
}

ModelSpec halfplane_fpk_model(const ModelSpec& base, double beta, double gamma) {
  if (base.dim() != 2) throw DimensionError("half-plane FPK experiment needs a two-dimensional model");
  if (!(beta > 0.0) || !(gamma > 0.0)) throw ConfigError("beta and gamma must be positive");
  return base.with_dissipation(DissipationTensor::identity(2, gamma)).with_noise(NoiseCovariance::identity(2, gamma / beta));
}

namespace {

double argmax_center(const std::vector<double>& values, const Axis& ax, int* index = nullptr) {
  const auto it = std::max_element(values.begin(), values.end());
  const int i = static_cast<int>(it - values.begin());
  if (index) *index = i;
  return ax.center(i);
}

std::vector<double> normalized_dv(const Grid& grid, std::vector<double> dv) {
  CompensatedSum s;
  for (double x : dv) s.add(x);
  const double m = s.value() * grid.cell_volume();
  for (double& x : dv) x /= m;
  return dv;
}

std::vector<double> closed_form_on(const Grid& grid, double beta) {
  std::vector<double> cf(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const VelocityState x = grid.center(c);
    cf[c] = halfplane_exact_stationary(x[0], x[1], beta);
  }
  return normalized_dv(grid, std::move(cf));
}

ModeSummary modes_of(const Grid& grid, const std::vector<double>& dv, const std::vector<double>& mu) {
  const auto& ax0 = grid.axis(0);
  const auto& ax1 = grid.axis(1);
  std::vector<double> marg_dv(static_cast<std::size_t>(ax1.cells), 0.0);
  std::vector<double> marg_p(static_cast<std::size_t>(ax1.cells), 0.0);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto j = static_cast<std::size_t>(grid.index(c, 1));
    marg_dv[j] += dv[c] * ax0.spacing();
    marg_p[j] += dv[c] / mu[c] * ax0.spacing();
  }
  ModeSummary m;
  int mode_index = 0;
  m.v1_marginal_dv = argmax_center(marg_dv, ax1, &mode_index);
  m.v1_marginal_p = argmax_center(marg_p, ax1);
  const auto joint = static_cast<std::size_t>(std::max_element(dv.begin(), dv.end()) - dv.begin());
  m.joint_v0 = ax0.center(grid.index(joint, 0));
  m.joint_v1 = ax1.center(grid.index(joint, 1));
  m.bounded_away = mode_index >= 2;
  return m;
}

double mean_coordinate(const Grid& grid, const std::vector<double>& dv_normalized, int a) {
  CompensatedSum s;
  for (std::size_t c = 0; c < grid.size(); ++c) s.add(grid.axis(a).center(grid.index(c, a)) * dv_normalized[c]);
  return s.value() * grid.cell_volume();
}

double residual_norm(const FpkOperator& op, const std::vector<double>& dv_normalized) {
  const auto& mu = op.mu();
  std::vector<double> p(dv_normalized.size());
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = dv_normalized[c] / mu[c];
  std::vector<double> rhs;
  op.apply(p, rhs);
  CompensatedSum s;
  for (std::size_t c = 0; c < p.size(); ++c) s.add(std::abs(mu[c] * rhs[c]));
  return s.value() * op.grid().cell_volume();
}

DensityField gaussian_start(const Grid& grid, const InvariantMeasure& measure) {
  const double c0 = grid.axis(0).lo + 0.7 * (grid.axis(0).hi - grid.axis(0).lo);
  const double c1 = grid.axis(1).lo + 0.6 * (grid.axis(1).hi - grid.axis(1).lo);
  const double w = 0.1 * std::min(grid.axis(0).hi - grid.axis(0).lo, grid.axis(1).hi - grid.axis(1).lo);
  return DensityField::from_function(grid, measure, [&](const VelocityState& v) {
    const double r2 = (v[0] - c0) * (v[0] - c0) + (v[1] - c1) * (v[1] - c1);
    return std::exp(-0.5 * r2 / (w * w));
  });
}

DensityField uniform_start(const Grid& grid, const InvariantMeasure& measure) {
  return DensityField(grid, measure, std::vector<double>(grid.size(), 1.0));
}

}  // namespace

ModeSummary halfplane_modes(const DensityField& field) {
  if (field.grid().dim() != 2) throw DimensionError("halfplane_modes needs a two-dimensional field");
  return modes_of(field.grid(), normalized_dv(field.grid(), field.dv_density()), field.mu());
}

DistanceReport stationary_distance_report(const ModelSpec& model, const Grid& grid, double beta,
                                          const DistanceReportOptions& options) {
  const ModelSpec m = halfplane_fpk_model(model, beta, options.gamma);
  require_regular_grid(m, grid);
  StationaryOptions so = options.stationary;
  so.evolve.drift = options.drift;

  StationaryResult a = run_to_stationarity(m, uniform_start(grid, m.measure()), so);
  StationaryResult b = run_to_stationarity(m, gaussian_start(grid, m.measure()), so);
  a.field.normalize();
  b.field.normalize();

  const FpkOperator op(m, grid, options.drift, so.evolve.threads);
  const std::vector<double> dv = normalized_dv(grid, a.field.dv_density());
  const std::vector<double> cf = closed_form_on(grid, beta);

  DistanceReport rep{.beta = beta,
                     .gamma = options.gamma,
                     .eps = grid.axis(1).lo,
                     .double_run_l1 = l1_distance(a.field, b.field),
                     .closed_form_l1 = l1_distance(grid, dv, cf),
                     .closed_form_residual = residual_norm(op, cf),
                     .solver_residual = residual_norm(op, dv),
                     .mass_drift = std::max(a.mass_drift, b.mass_drift),
                     .clipped_mass = std::max(a.clipped_mass, b.clipped_mass),
                     .stationary_time = a.time,
                     .steps = a.steps,
                     .modes = modes_of(grid, dv, op.mu()),
                     .closed_form_modes = modes_of(grid, cf, op.mu()),
                     .mean_v1 = mean_coordinate(grid, dv, 1),
                     .field = a.field};

  if (options.sensitivity_eps > 0.0) {
    std::vector<Axis> axes = grid.axes();
    axes[1].lo = options.sensitivity_eps;
    const Grid g2(axes);
    require_regular_grid(m, g2);
    StationaryResult s = run_to_stationarity(m, uniform_start(g2, m.measure()), so);
    const FpkOperator op2(m, g2, options.drift, so.evolve.threads);
    const std::vector<double> dv2 = normalized_dv(g2, s.field.dv_density());
    rep.sensitivity_eps = options.sensitivity_eps;
    rep.sensitivity_closed_form_l1 = l1_distance(g2, dv2, closed_form_on(g2, beta));
    rep.sensitivity_mode = modes_of(g2, dv2, op2.mu()).v1_marginal_dv;
  }

  if (options.measure_control) {
    const ModelSpec flat = m.with_measure(InvariantMeasure::constant(2));
    StationaryResult c = run_to_stationarity(flat, uniform_start(grid, flat.measure()), so);
    const std::vector<double> dvc = normalized_dv(grid, c.field.dv_density());
    rep.control_l1 = l1_distance(grid, dv, dvc);
    rep.control_mean_v1 = mean_coordinate(grid, dvc, 1);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// CSV

void write_density_csv(std::ostream& os, const DensityField& field) {
  const Grid& g = field.grid();
  for (int a = 0; a < g.dim(); ++a) os << "v" << a << ",";
  os << "P,muP\n";
  for (std::size_t c = 0; c < g.size(); ++c) {
    const VelocityState x = g.center(c);
    for (int a = 0; a < g.dim(); ++a) os << fmt17(x[a]) << ",";
    os << fmt17(field.values()[c]) << "," << fmt17(field.mu()[c] * field.values()[c]) << "\n";
  }
}

DensityField read_density_csv(std::istream& is, const InvariantMeasure& measure) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (header.empty()) {
      header = cols;
      continue;
    }
    if (cols.size() != header.size()) throw ConfigError("density CSV: ragged row");
    std::vector<double> row;
    for (const auto& s : cols) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(s, &used));
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw ConfigError("density CSV: cannot parse '" + s + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (header.size() < 3 || header[header.size() - 2] != "P" || header.back() != "muP") {
    throw ConfigError("density CSV: expected header v0,...,P,muP");
  }
  const int n = static_cast<int>(header.size()) - 2;
  if (n != measure.dim()) throw DimensionError("density CSV: dimension does not match the model");

  std::vector<Axis> axes;
  for (int a = 0; a < n; ++a) {
    std::vector<double> xs;
    for (const auto& r : rows) xs.push_back(r[static_cast<std::size_t>(a)]);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 8) throw ConfigError("density CSV: too few distinct cell centres");
    const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (std::abs(xs[i] - xs[i - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx))) {
        throw ConfigError("density CSV: cell centres are not uniformly spaced");
      }
    }
    axes.push_back(Axis{xs.front() - 0.5 * dx, xs.back() + 0.5 * dx, static_cast<int>(xs.size())});
  }
  Grid grid(axes);
  if (rows.size() != grid.size()) throw ConfigError("density CSV: rows do not cover the grid");
  std::vector<double> values(grid.size(), 0.0);
  std::vector<bool> seen(grid.size(), false);
  for (const auto& r : rows) {
    std::size_t cell = 0;
    for (int a = 0; a < n; ++a) {
      const auto& ax = grid.axis(a);
      const long i = std::lround((r[static_cast<std::size_t>(a)] - ax.lo) / ax.spacing() - 0.5);
      cell += static_cast<std::size_t>(i) * grid.stride(a);
    }
    if (seen[cell]) throw ConfigError("density CSV: duplicate cell");
    seen[cell] = true;
    values[cell] = r[static_cast<std::size_t>(n)];
  }
  return DensityField(grid, measure, std::move(values));
}

}  // namespace eaf
