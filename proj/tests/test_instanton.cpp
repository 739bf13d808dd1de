#include <gtest/gtest.h>

#include <random>

#include "eaf/dynamics.hpp"
#include "eaf/instanton.hpp"
#include "oracles.hpp"

namespace {

using eaf::PhasePoint;

eaf::ModelSpec abelian_half_noise() {
  return eaf::builtin_model("abelian1").with_noise(eaf::NoiseCovariance::identity(1, 0.5));
}

PhasePoint random_point(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> n01;
  PhasePoint p{eaf::Vector(n), eaf::Vector(n)};
  for (int a = 0; a < n; ++a) {
    p.v[a] = scale * n01(rng);
    p.w[a] = scale * n01(rng);
  }
  return p;
}

TEST(Hamiltonian, Examples) {
  const auto so3 = eaf::builtin_model("so3");
  EXPECT_EQ(eaf::wkb_hamiltonian(so3, PhasePoint{Eigen::Vector3d(1, 2, 3), eaf::Vector::Zero(3)}), 0.0);
  const auto ab = abelian_half_noise();
  EXPECT_EQ(eaf::wkb_hamiltonian(ab, PhasePoint{eaf::Vector::Constant(1, 1.0), eaf::Vector::Constant(1, 2.0)}), 0.0);

  const double g = 0.7;
  const auto hp = eaf::builtin_model("halfplane").with_dissipation(eaf::DissipationTensor::identity(2, g));
  const Eigen::Vector2d v(0.3, 1.4), w(-0.6, 0.9);
  const double expected =
      0.5 * w.squaredNorm() + (-g * v[0] - v[1] * v[1]) * w[0] + (-g * v[1] + v[0] * v[1]) * w[1];
  EXPECT_NEAR(eaf::wkb_hamiltonian(hp, PhasePoint{v, w}), expected, 1e-15);
  EXPECT_THROW(eaf::wkb_hamiltonian(hp, PhasePoint{v, eaf::Vector::Zero(3)}), eaf::DimensionError);
}

TEST(HamiltonField, MatchesDisplayedHalfPlaneSystem) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ug(0.1, 2.0);
  for (int k = 0; k < 50; ++k) {
    const double g = ug(rng);
    const auto hp = eaf::builtin_model("halfplane").with_dissipation(eaf::DissipationTensor::identity(2, g));
    const PhasePoint p = random_point(rng, 2, 2.0);
    const double v0 = p.v[0], v1 = p.v[1], w0 = p.w[0], w1 = p.w[1];
    const PhasePoint f = eaf::hamilton_field(hp, p);
    EXPECT_NEAR(f.v[0], w0 - g * v0 - v1 * v1, 1e-12);
    EXPECT_NEAR(f.v[1], w1 - g * v1 + v0 * v1, 1e-12);
    EXPECT_NEAR(f.w[0], g * w0 - v1 * w1, 1e-12);
    EXPECT_NEAR(f.w[1], g * w1 + 2.0 * v1 * w0 - v0 * w1, 1e-12);
  }
}

TEST(HamiltonField, ZeroMomentumIsRelaxation) {
  const auto so3 = eaf::builtin_model("so3");
  const Eigen::Vector3d v(0.4, -1.0, 0.7);
  const PhasePoint f = eaf::hamilton_field(so3, PhasePoint{v, eaf::Vector::Zero(3)});
  EXPECT_LT((f.v - eaf::dissipative_drift(so3, v)).norm(), 1e-15);
  EXPECT_EQ(f.w, eaf::Vector::Zero(3));
}

// Central differences of H; H is cubic, so the error is exactly h^2/6 * H'''.
PhasePoint fd_field(const eaf::ModelSpec& m, const PhasePoint& p, double h) {
  const int n = m.dim();
  PhasePoint out{eaf::Vector(n), eaf::Vector(n)};
  for (int a = 0; a < n; ++a) {
    PhasePoint up = p, dn = p;
    up.w[a] += h;
    dn.w[a] -= h;
    out.v[a] = (eaf::wkb_hamiltonian(m, up) - eaf::wkb_hamiltonian(m, dn)) / (2 * h);
    up = p;
    dn = p;
    up.v[a] += h;
    dn.v[a] -= h;
    out.w[a] = -(eaf::wkb_hamiltonian(m, up) - eaf::wkb_hamiltonian(m, dn)) / (2 * h);
  }
  return out;
}

double field_error(const PhasePoint& a, const PhasePoint& b) {
  return std::max((a.v - b.v).cwiseAbs().maxCoeff(), (a.w - b.w).cwiseAbs().maxCoeff());
}

TEST(HamiltonField, GradientCheck) {
  std::mt19937_64 rng(31);
  for (const auto& name : eaf::builtin_model_names()) {
    auto m = eaf::builtin_model(name);
    if (name == "so3") {
      Eigen::Matrix3d g;
      g << 1.0, 0.2, 0.1, 0.2, 2.0, -0.3, 0.1, -0.3, 3.0;  // non-diagonal metric
      m = m.with_metric(eaf::KineticMetric(g));
    }
    for (int k = 0; k < 20; ++k) {
      const PhasePoint p = random_point(rng, m.dim());
      const PhasePoint exact = eaf::hamilton_field(m, p);
      EXPECT_LT(field_error(exact, fd_field(m, p, 1e-5)), 1e-8) << name;
      const double e1 = field_error(exact, fd_field(m, p, 2e-3));
      const double e2 = field_error(exact, fd_field(m, p, 1e-3));
      if (e1 > 1e-9) EXPECT_NEAR(e1 / e2, 4.0, 0.1) << name;
    }
  }
}

TEST(Integrate, ZeroMomentumHasZeroAction) {
  const auto hp = eaf::builtin_model("halfplane");
  const auto path = eaf::integrate_instanton(hp, PhasePoint{Eigen::Vector2d(0.3, 1.0), eaf::Vector::Zero(2)}, 3.0, 1e-3);
  EXPECT_EQ(path.action, 0.0);
  const auto relax = eaf::integrate(hp, Eigen::Vector2d(0.3, 1.0), 3.0, 1e-3, eaf::Flow::Dissipative);
  EXPECT_LT((path.v.back() - relax.back()).norm(), 1e-14);
}

TEST(Integrate, AbelianClosedForm) {
  const auto m = abelian_half_noise();
  const auto path = eaf::integrate_instanton(m, PhasePoint{eaf::Vector::Constant(1, 0.5), eaf::Vector::Constant(1, 0.3)}, 5.0, 1e-3);
  for (std::size_t k = 0; k < path.size(); k += 250) {
    const auto ref = oracle::abelian_instanton(0.5, 0.3, path.times[k]);
    EXPECT_NEAR(path.v[k][0], ref[0], 1e-8);
    EXPECT_NEAR(path.w[k][0], ref[1], 1e-8);
  }
  // w v' - H = w^2 / 2 here, so the action is int 0.045 e^{2t} dt.
  EXPECT_NEAR(path.action, 0.045 * (std::exp(10.0) - 1.0) / 2.0 * (1.0), 1e-6 * path.action);
}

TEST(Integrate, HamiltonianConserved) {
  struct Case {
    std::string name;
    PhasePoint p0;
    double T;
  };
  // so3 trajectories with generic momentum leave every bound before t = 4
  const std::vector<Case> cases = {
      {"halfplane", {Eigen::Vector2d(1e-3, 2e-3), Eigen::Vector2d(5e-4, -3e-4)}, 10.0},
      {"halfplane", {Eigen::Vector2d(1e-4, 2e-4), Eigen::Vector2d(2e-4, 4e-4)}, 10.0},
      {"abelian1", {eaf::Vector::Constant(1, 0.5), eaf::Vector::Constant(1, 0.1)}, 10.0},
      {"heisenberg", {Eigen::Vector3d(0.3, -0.2, 0.4), Eigen::Vector3d(5e-4, 1e-3, -5e-4)}, 10.0},
      {"so3", {Eigen::Vector3d(0.3, -0.2, 0.4), Eigen::Vector3d(0.05, 0.1, -0.05)}, 2.0},
  };
  for (const auto& c : cases) {
    const auto m = eaf::builtin_model(c.name);
    const auto path = eaf::integrate_instanton(m, c.p0, c.T, 1e-3);
    double drift = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
      drift = std::max(drift, std::abs(path.hamiltonian[k] - path.hamiltonian.front()));
      const PhasePoint p{path.v[k], path.w[k]};
      scale = std::max(scale, std::abs(p.w.dot(m.noise().matrix() * p.w)));
    }
    // w grows like exp(Gamma G t); the drift is judged against the size of the terms of H.
    EXPECT_LT(drift, 1e-8 * std::max(1.0, scale)) << c.name << " drift=" << drift << " scale=" << scale;
  }
}

TEST(Integrate, ActionIsAdditive) {
  const auto hp = eaf::builtin_model("halfplane");
  const PhasePoint p0{Eigen::Vector2d(0.2, 0.5), Eigen::Vector2d(0.3, 0.4)};
  const auto full = eaf::integrate_instanton(hp, p0, 2.0, 1e-3);
  for (std::size_t k : {500u, 1250u, 1999u}) {
    const auto tail = eaf::integrate_instanton(hp, PhasePoint{full.v[k], full.w[k]}, 2.0 - full.times[k], 1e-3);
    EXPECT_NEAR(full.partial_action[k] + tail.action, full.action, 1e-10) << k;
  }
}

TEST(Ansatz, HalfPlaneSelfConsistent) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ug(0.2, 2.0);
  for (int k = 0; k < 30; ++k) {
    const double g = ug(rng);
    // 2D = I; the Einstein-matched inverse temperature is beta = gamma / D = 2 gamma.
    const auto hp = eaf::builtin_model("halfplane").with_dissipation(eaf::DissipationTensor::identity(2, g));
    const PhasePoint p = random_point(rng, 2, 1.5);
    const eaf::Vector w = eaf::mb_ansatz_momentum(hp, 2.0 * g, p.v);
    EXPECT_LT((w - 2.0 * g * p.v).norm(), 1e-15);
    const PhasePoint f = eaf::hamilton_field(hp, PhasePoint{p.v, w});
    EXPECT_LT((f.w - 2.0 * g * f.v).norm(), 1e-8);
    const double v0 = p.v[0], v1 = p.v[1];
    EXPECT_NEAR(f.v[0], g * v0 - v1 * v1, 1e-10);
    EXPECT_NEAR(f.v[1], g * v1 + v0 * v1, 1e-10);
    EXPECT_NEAR(eaf::wkb_hamiltonian(hp, PhasePoint{p.v, w}), 0.0, 1e-12);
  }
}

TEST(Ansatz, PathStaysOnManifoldAndActionIsBetaDeltaE) {
  const auto hp = eaf::builtin_model("halfplane");
  const double beta = 2.0;
  const Eigen::Vector2d v0(0.05, 0.1);
  const auto path = eaf::integrate_instanton(hp, PhasePoint{v0, eaf::mb_ansatz_momentum(hp, beta, v0)}, 2.0, 1e-3);
  double worst = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) worst = std::max(worst, (path.w[k] - beta * path.v[k]).norm());
  EXPECT_LT(worst, 1e-8);
  const double dE = eaf::energy(hp, path.v.back()) - eaf::energy(hp, v0);
  // trapezoid quadrature: second order in the step
  const double err1 = std::abs(path.action - beta * dE);
  EXPECT_LT(err1, 1e-6);
  const auto fine = eaf::integrate_instanton(hp, PhasePoint{v0, eaf::mb_ansatz_momentum(hp, beta, v0)}, 2.0, 5e-4);
  const double dE2 = eaf::energy(hp, fine.v.back()) - eaf::energy(hp, v0);
  EXPECT_NEAR(err1 / std::abs(fine.action - beta * dE2), 4.0, 0.1);
}

TEST(Shoot, RestPath) {
  for (const auto& name : eaf::builtin_model_names()) {
    const auto m = eaf::builtin_model(name);
    const auto res = eaf::shoot(m, eaf::Vector::Zero(m.dim()), eaf::Vector::Zero(m.dim()), 2.0, 1e-2);
    EXPECT_EQ(res.w0, eaf::Vector::Zero(m.dim())) << name;
    EXPECT_EQ(res.path.action, 0.0) << name;
  }
}

TEST(Shoot, AbelianActionApproachesBetaDeltaE) {
  const auto m = abelian_half_noise();
  for (double T : {1.0, 3.0, 20.0}) {
    const auto res = eaf::shoot(m, eaf::Vector::Zero(1), eaf::Vector::Constant(1, 1.0), T, 1e-3);
    EXPECT_LT(res.residual, 1e-8);
    EXPECT_LT(std::abs(res.path.v.back()[0] - 1.0), 1e-8);
    EXPECT_NEAR(res.path.action, oracle::abelian_bridge_action(1.0, T), 1e-6) << T;
  }
  const auto res = eaf::shoot(m, eaf::Vector::Zero(1), eaf::Vector::Constant(1, 1.0), 20.0, 1e-3);
  EXPECT_NEAR(res.path.action, 1.0, 1e-3);
}

TEST(Shoot, MultistartPicksMinimalActionLowestIndex) {
  const auto m = abelian_half_noise();
  eaf::ShootOptions opts;
  opts.guesses = {eaf::Vector::Constant(1, 5.0), eaf::Vector::Constant(1, -1.0), eaf::Vector::Constant(1, 0.0)};
  const auto res = eaf::shoot(m, eaf::Vector::Zero(1), eaf::Vector::Constant(1, 1.0), 2.0, 1e-3, opts);
  ASSERT_EQ(res.attempts.size(), 3u);
  // linear problem: every start converges to the same path; the first wins ties
  for (const auto& a : res.attempts) EXPECT_TRUE(a.converged);
  double best = res.attempts[0].action;
  for (const auto& a : res.attempts) best = std::min(best, a.action);
  EXPECT_EQ(res.path.action, res.attempts[static_cast<std::size_t>(res.start_index)].action);
  EXPECT_EQ(res.path.action, best);
  for (int i = 0; i < res.start_index; ++i) EXPECT_GT(res.attempts[static_cast<std::size_t>(i)].action, best);

  opts.threads = 3;
  const auto again = eaf::shoot(m, eaf::Vector::Zero(1), eaf::Vector::Constant(1, 1.0), 2.0, 1e-3, opts);
  EXPECT_EQ(again.start_index, res.start_index);
  EXPECT_EQ(again.path.w, res.path.w);
}

TEST(Shoot, ReportsFailure) {
  const auto m = eaf::builtin_model("halfplane");
  eaf::ShootOptions opts;
  opts.max_iterations = 1;
  opts.guesses = {Eigen::Vector2d(0.0, 0.0)};
  try {
    eaf::shoot(m, Eigen::Vector2d(0.0, 0.1), Eigen::Vector2d(0.0, 3.0), 5.0, 1e-2, opts);
    FAIL() << "expected ShootingError";
  } catch (const eaf::ShootingError& e) {
    EXPECT_GT(e.best_residual(), 1e-8);
    ASSERT_EQ(e.attempts().size(), 1u);
    EXPECT_FALSE(e.attempts()[0].diagnostic.empty());
  }
}

}  // namespace
