#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace eaf::detail {

/// Scratch space for one classical fourth-order step of dy/dt = field(y).
struct Rk4Workspace {
  Eigen::VectorXd k1, k2, k3, k4, tmp;

  explicit Rk4Workspace(Eigen::Index n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

// `field(y, out)` writes the derivative at y into out.
template <class Field>
void rk4_step(Field&& field, Eigen::VectorXd& y, double h, Rk4Workspace& ws) {
  field(y, ws.k1);
  ws.tmp = y + 0.5 * h * ws.k1;
  field(ws.tmp, ws.k2);
  ws.tmp = y + 0.5 * h * ws.k2;
  field(ws.tmp, ws.k3);
  ws.tmp = y + h * ws.k3;
  field(ws.tmp, ws.k4);
  y += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

inline bool blown_up(const Eigen::VectorXd& y, double threshold) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(std::abs(y[i]) <= threshold)) return true;
  }
  return false;
}

/// Number of uniform steps covering [0, T] with spacing as close to dt as possible.
inline long step_count(double T, double dt) {
  const double ratio = T / dt;
  const long n = static_cast<long>(std::llround(ratio));
  return n < 1 ? 1 : n;
}

}  // namespace eaf::detail
