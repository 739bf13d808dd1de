#pragma once

#include <vector>

#include "eaf/algebra.hpp"

namespace eaf {

struct Trajectory {
  std::vector<double> times;
  std::vector<VelocityState> states;

  std::size_t size() const noexcept { return times.size(); }
  const VelocityState& back() const { return states.back(); }
};

enum class Flow { Geodesic, Dissipative };

/// Fixed-step classical RK4 integration of the geodesic or dissipative flow.
/// States are stored at t = 0, h, 2h, ..., T with h = T / round(T / dt).
/// Throws BlowUpError (carrying the last valid time) if any component exceeds 1e12.
Trajectory integrate(const ModelSpec& model, const VelocityState& v0, double T, double dt, Flow flow);

/// Integrates every initial condition; results are indexed like `initial`
/// regardless of `threads`.
std::vector<Trajectory> integrate_batch(const ModelSpec& model, const std::vector<VelocityState>& initial, double T,
                                        double dt, Flow flow, int threads = 1);

/// Closed-form half-plane geodesic (-rho tanh(rho t), rho sech(rho t)).
VelocityState halfplane_geodesic(double rho, double t);

std::vector<double> energy_series(const ModelSpec& model, const Trajectory& traj);

}  // namespace eaf
