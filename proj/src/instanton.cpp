#include "eaf/instanton.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "eaf/rk4.hpp"

namespace eaf {

namespace {

void require_phase_dim(const ModelSpec& model, const PhasePoint& p) {
  require_dim(model, p.v, "phase point v");
  require_dim(model, p.w, "phase point w");
}

// Writes (dv/dt, dw/dt) for the stacked state y = (v, w).
class HamiltonField {
 public:
  explicit HamiltonField(const ModelSpec& model)
      : model_(model), n_(model.dim()), drift_(n_), gv_(n_), bracket_(n_, n_) {}

  void operator()(const Eigen::VectorXd& y, Eigen::VectorXd& out) {
    const auto v = y.head(n_);
    const auto w = y.tail(n_);
    const auto& f = model_.algebra();
    const Matrix& g = model_.metric().matrix();

    dissipative_drift_into(model_, v, drift_);
    out.head(n_) = 2.0 * model_.noise().matrix() * w + drift_;

    // dA_a/dv_e = -R_ae + f[a][b][e] (G v)_b + (M G)_ae, M_ab = f[a][b][c] v_c
    gv_.noalias() = g * v;
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) {
        double s = 0.0;
        for (int c = 0; c < n_; ++c) s += f(a, b, c) * v[c];
        bracket_(a, b) = s;
      }
    auto dw = out.tail(n_);
    dw.noalias() = model_.relaxation().transpose() * w;
    dw.noalias() -= (w.transpose() * bracket_ * g).transpose();
    for (int e = 0; e < n_; ++e) {
      double s = 0.0;
      for (int a = 0; a < n_; ++a) {
        if (w[a] == 0.0) continue;
        for (int b = 0; b < n_; ++b) s += w[a] * f(a, b, e) * gv_[b];
      }
      dw[e] -= s;
    }
  }

 private:
  const ModelSpec& model_;
  int n_;
  VelocityState drift_;
  Vector gv_;
  Matrix bracket_;
};

Eigen::VectorXd stack(const PhasePoint& p) {
  Eigen::VectorXd y(p.v.size() + p.w.size());
  y << p.v, p.w;
  return y;
}

PhasePoint unstack(const Eigen::VectorXd& y, int n) { return PhasePoint{y.head(n), y.tail(n)}; }

double action_density(const ModelSpec& model, const PhasePoint& p, const PhasePoint& rate) {
  return p.w.dot(rate.v) - wkb_hamiltonian(model, p);
}

void check_path_args(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("instanton: dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("instanton: T must be positive");
}

// v(T) only; no path storage.
VelocityState endpoint(const ModelSpec& model, const VelocityState& v0, const Vector& w0, double T, double dt) {
  const int n = model.dim();
  const long steps = detail::step_count(T, dt);
  const double h = T / static_cast<double>(steps);
  HamiltonField field(model);
  detail::Rk4Workspace ws(2 * n);
  Eigen::VectorXd y = stack(PhasePoint{v0, w0});
  for (long k = 0; k < steps; ++k) {
    detail::rk4_step(field, y, h, ws);
    if (detail::blown_up(y, kBlowUpThreshold)) {
      throw BlowUpError("instanton: trial path exceeded 1e12", static_cast<double>(k) * h);
    }
  }
  return y.head(n);
}

ShootAttempt newton_from(const ModelSpec& model, const VelocityState& v_start, const VelocityState& v_end, double T,
                         double dt, const Vector& guess, const ShootOptions& options) {
  const int n = model.dim();
  ShootAttempt at;
  at.w0 = guess;
  auto residual_at = [&](const Vector& w) -> std::pair<Vector, bool> {
    try {
      return {endpoint(model, v_start, w, T, dt) - v_end, true};
    } catch (const BlowUpError&) {
      return {Vector::Constant(n, std::numeric_limits<double>::infinity()), false};
    }
  };

  auto [r, ok] = residual_at(at.w0);
  if (!ok) {
    at.residual = std::numeric_limits<double>::infinity();
    at.diagnostic = "blow-up at the initial guess";
    return at;
  }
  at.residual = r.norm();
  Matrix jac(n, n);
  for (at.iterations = 0; at.iterations < options.max_iterations; ++at.iterations) {
    if (at.residual < options.tolerance) {
      at.converged = true;
      return at;
    }
    for (int k = 0; k < n; ++k) {
      Vector wk = at.w0;
      const double h = 1e-6 * (1.0 + std::abs(at.w0[k]));
      wk[k] += h;
      auto [rk, okk] = residual_at(wk);
      if (!okk) {
        at.diagnostic = "blow-up while forming the Jacobian";
        return at;
      }
      jac.col(k) = (rk - r) / h;
    }
    const Vector step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) {
      at.diagnostic = "singular Jacobian";
      return at;
    }
    double lambda = 1.0;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries, lambda *= 0.5) {
      const Vector trial = at.w0 + lambda * step;
      auto [rt, okt] = residual_at(trial);
      if (okt && rt.norm() < at.residual) {
        at.w0 = trial;
        r = rt;
        at.residual = rt.norm();
        improved = true;
        break;
      }
    }
    if (!improved) {
      at.diagnostic = "line search stalled";
      return at;
    }
  }
  at.converged = at.residual < options.tolerance;
  if (!at.converged) at.diagnostic = "iteration limit reached";
  return at;
}

}  // namespace

double wkb_hamiltonian(const ModelSpec& model, const PhasePoint& p) {
  require_phase_dim(model, p);
  return p.w.dot(model.noise().matrix() * p.w) + dissipative_drift(model, p.v).dot(p.w);
}

PhasePoint hamilton_field(const ModelSpec& model, const PhasePoint& p) {
  require_phase_dim(model, p);
  HamiltonField field(model);
  Eigen::VectorXd out(2 * model.dim());
  field(stack(p), out);
  return unstack(out, model.dim());
}

Vector mb_ansatz_momentum(const ModelSpec& model, double beta, const VelocityState& v) {
  require_dim(model, v, "mb_ansatz_momentum");
  return beta * (model.metric().matrix() * v);
}

InstantonPath integrate_instanton(const ModelSpec& model, const PhasePoint& p0, double T, double dt) {
  require_phase_dim(model, p0);
  check_path_args(T, dt);
  const int n = model.dim();
  const long steps = detail::step_count(T, dt);
  const double h = T / static_cast<double>(steps);

  InstantonPath path;
  const auto count = static_cast<std::size_t>(steps) + 1;
  path.times.reserve(count);
  path.v.reserve(count);
  path.w.reserve(count);
  path.hamiltonian.reserve(count);
  path.partial_action.reserve(count);

  HamiltonField field(model);
  detail::Rk4Workspace ws(2 * n);
  Eigen::VectorXd y = stack(p0);
  Eigen::VectorXd rate(2 * n);

  auto record = [&](double t) {
    const PhasePoint p = unstack(y, n);
    field(y, rate);
    const double density = action_density(model, p, unstack(rate, n));
    path.times.push_back(t);
    path.v.push_back(p.v);
    path.w.push_back(p.w);
    path.hamiltonian.push_back(wkb_hamiltonian(model, p));
    return density;
  };

  double last_density = record(0.0);
  path.partial_action.push_back(0.0);
  for (long k = 1; k <= steps; ++k) {
    detail::rk4_step(field, y, h, ws);
    if (detail::blown_up(y, kBlowUpThreshold)) {
      std::ostringstream msg;
      msg << "instanton: phase point exceeded " << kBlowUpThreshold << " after t = " << path.times.back();
      throw BlowUpError(msg.str(), path.times.back());
    }
    const double density = record(k == steps ? T : static_cast<double>(k) * h);
    path.partial_action.push_back(path.partial_action.back() + 0.5 * h * (last_density + density));
    last_density = density;
  }
  path.action = path.partial_action.back();
  return path;
}

ShootResult shoot(const ModelSpec& model, const VelocityState& v_start, const VelocityState& v_end, double T,
                  double dt, const ShootOptions& options) {
  require_dim(model, v_start, "shoot v_start");
  require_dim(model, v_end, "shoot v_end");
  check_path_args(T, dt);
  std::vector<Vector> guesses = options.guesses;
  if (guesses.empty()) guesses.push_back(Vector::Zero(model.dim()));
  for (const auto& g : guesses) require_dim(model, g, "shoot guess");

  const long count = static_cast<long>(guesses.size());
  std::vector<ShootAttempt> attempts(guesses.size());
  std::vector<InstantonPath> paths(guesses.size());
  std::vector<std::exception_ptr> errors(guesses.size());
#pragma omp parallel for schedule(dynamic) num_threads(options.threads > 0 ? options.threads : 1)
  for (long i = 0; i < count; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      attempts[ui] = newton_from(model, v_start, v_end, T, dt, guesses[ui], options);
      if (attempts[ui].converged) {
        paths[ui] = integrate_instanton(model, PhasePoint{v_start, attempts[ui].w0}, T, dt);
        attempts[ui].action = paths[ui].action;
      }
    } catch (const BlowUpError& e) {
      attempts[ui].converged = false;
      attempts[ui].diagnostic = e.what();
    } catch (...) {
      errors[ui] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  int best = -1;
  double best_residual = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    best_residual = std::min(best_residual, attempts[i].residual);
    if (!attempts[i].converged) continue;
    if (best < 0 || attempts[i].action < attempts[static_cast<std::size_t>(best)].action) best = static_cast<int>(i);
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "shoot: no start converged (best residual " << best_residual << ")";
    throw ShootingError(msg.str(), best_residual, std::move(attempts));
  }
  const auto ub = static_cast<std::size_t>(best);
  ShootResult result;
  result.path = std::move(paths[ub]);
  result.w0 = attempts[ub].w0;
  result.residual = attempts[ub].residual;
  result.start_index = best;
  result.attempts = std::move(attempts);
  return result;
}

}  // namespace eaf
