#include "eaf/dynamics.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "eaf/rk4.hpp"

namespace eaf {

Trajectory integrate(const ModelSpec& model, const VelocityState& v0, double T, double dt, Flow flow) {
  require_dim(model, v0, "integrate");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrate: dt must be positive");
  if (!(T >= dt) || !std::isfinite(T)) throw ConfigError("integrate: T must be finite and at least dt");
  if (!v0.allFinite()) throw ConfigError("integrate: initial state is not finite");

  const long steps = detail::step_count(T, dt);
  const double h = T / static_cast<double>(steps);

  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(v0);

  detail::Rk4Workspace ws(model.dim());
  auto field = [&model, flow](const Eigen::VectorXd& y, Eigen::VectorXd& out) {
    if (flow == Flow::Geodesic) {
      geodesic_drift_into(model, y, out);
    } else {
      dissipative_drift_into(model, y, out);
    }
  };

  VelocityState y = v0;
  for (long k = 1; k <= steps; ++k) {
    detail::rk4_step(field, y, h, ws);
    if (detail::blown_up(y, kBlowUpThreshold)) {
      const double last = traj.times.back();
      std::ostringstream msg;
      msg << "integrate: state exceeded " << kBlowUpThreshold << " after t = " << last;
      throw BlowUpError(msg.str(), last);
    }
    traj.times.push_back(k == steps ? T : static_cast<double>(k) * h);
    traj.states.push_back(y);
  }
  return traj;
}

std::vector<Trajectory> integrate_batch(const ModelSpec& model, const std::vector<VelocityState>& initial, double T,
                                        double dt, Flow flow, int threads) {
  std::vector<Trajectory> out(initial.size());
  std::vector<std::exception_ptr> errors(initial.size());
  const long count = static_cast<long>(initial.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : 1)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = integrate(model, initial[static_cast<std::size_t>(i)], T, dt, flow);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

VelocityState halfplane_geodesic(double rho, double t) {
  if (!(rho > 0.0)) throw ConfigError("halfplane_geodesic: rho must be positive");
  VelocityState v(2);
  v[0] = -rho * std::tanh(rho * t);
  v[1] = rho / std::cosh(rho * t);
  return v;
}

std::vector<double> energy_series(const ModelSpec& model, const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& v : traj.states) out.push_back(energy(model, v));
  return out;
}

}  // namespace eaf
