#pragma once

// Small-noise (WKB) limit of the Fokker-Planck equation. With P ~ exp(-Phi)
// the action obeys a Hamilton-Jacobi equation for
//
//   H(v, w) = D_ab w^a w^b + A_a(v) w^a,   A = -Gamma G v + V(v),
//
// on the doubled phase space (v, w). Instantons are the Hamilton trajectories
// of H; their action int (w . dv/dt - H) dt estimates -log of the transition
// probability.

#include <vector>

#include "eaf/algebra.hpp"

namespace eaf {

struct PhasePoint {
  VelocityState v;
  Vector w;
};

double wkb_hamiltonian(const ModelSpec& model, const PhasePoint& p);

/// (dH/dw, -dH/dv) with the v-derivative of the drift expanded analytically.
PhasePoint hamilton_field(const ModelSpec& model, const PhasePoint& p);

/// Momentum beta G v of the Maxwell-Boltzmann action Phi = beta E. On this
/// manifold the instanton runs the dissipative flow with the sign of the
/// relaxation reversed (when beta D = Gamma).
Vector mb_ansatz_momentum(const ModelSpec& model, double beta, const VelocityState& v);

struct InstantonPath {
  std::vector<double> times;
  std::vector<VelocityState> v;
  std::vector<Vector> w;
  std::vector<double> hamiltonian;
  std::vector<double> partial_action;  // cumulative trapezoid action up to each time
  double action = 0.0;

  std::size_t size() const noexcept { return times.size(); }
};

/// RK4 integration of hamilton_field from p0 over [0, T].
InstantonPath integrate_instanton(const ModelSpec& model, const PhasePoint& p0, double T, double dt);

struct ShootOptions {
  std::vector<Vector> guesses;  // initial momenta w(0); empty means {0}
  int max_iterations = 60;
  double tolerance = 1e-8;      // on |v(T) - v_end|
  int threads = 1;              // does not affect the result
};

struct ShootAttempt {
  Vector w0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double action = 0.0;
  std::string diagnostic;
};

struct ShootResult {
  InstantonPath path;
  Vector w0;
  double residual = 0.0;
  int start_index = 0;  // which guess produced the selected path
  std::vector<ShootAttempt> attempts;
};

/// Newton shooting on w(0) -> v(T) with a forward-difference Jacobian
/// (step 1e-6 (1 + |w_k|)) and backtracking. Among converged starts the path
/// with minimal action wins, ties going to the lowest guess index.
/// Throws ShootingError when no start converges.
ShootResult shoot(const ModelSpec& model, const VelocityState& v_start, const VelocityState& v_end, double T,
                  double dt, const ShootOptions& options = {});

class ShootingError : public ConvergenceError {
 public:
  ShootingError(const std::string& what, double best_residual, std::vector<ShootAttempt> attempts)
      : ConvergenceError(what), best_residual_(best_residual), attempts_(std::move(attempts)) {}

  double best_residual() const noexcept { return best_residual_; }
  const std::vector<ShootAttempt>& attempts() const noexcept { return attempts_; }

 private:
  double best_residual_;
  std::vector<ShootAttempt> attempts_;
};

}  // namespace eaf
