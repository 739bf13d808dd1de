#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "eaf/fpk.hpp"
#include "oracles.hpp"

namespace {

using eaf::Axis;
using eaf::DensityField;
using eaf::FpkDrift;
using eaf::Grid;

double max_abs(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

double weighted_total(const DensityField& f, const std::vector<double>& xs) {
  long double s = 0.0L;
  for (std::size_t c = 0; c < xs.size(); ++c) s += static_cast<long double>(f.mu()[c]) * xs[c];
  return static_cast<double>(s) * f.grid().cell_volume();
}

DensityField random_field(const Grid& g, const eaf::InvariantMeasure& mu, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> p(g.size());
  for (auto& x : p) x = u(rng);
  return DensityField(g, mu, p);
}

eaf::ModelSpec mb_abelian() { return eaf::builtin_model("abelian1"); }

TEST(Grid, Layout) {
  const Grid g({Axis{-1.0, 1.0, 8}, Axis{0.0, 4.0, 10}});
  EXPECT_EQ(g.size(), 80u);
  EXPECT_EQ(g.stride(0), 10u);
  EXPECT_EQ(g.stride(1), 1u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25 * 0.4);
  EXPECT_EQ(g.index(23, 0), 2);
  EXPECT_EQ(g.index(23, 1), 3);
  EXPECT_DOUBLE_EQ(g.center(23)[0], -1.0 + 2.5 * 0.25);
  EXPECT_THROW(Grid({Axis{0.0, 1.0, 7}}), eaf::ConfigError);
  EXPECT_THROW(Grid({Axis{1.0, 1.0, 8}}), eaf::ConfigError);
  EXPECT_THROW(Grid({}), eaf::DimensionError);
}

TEST(Grid, HalfPlaneSingularityRejected) {
  const auto hp = eaf::builtin_model("halfplane");
  EXPECT_THROW(eaf::require_regular_grid(hp, Grid({Axis{-4, 4, 16}, Axis{0.0, 4, 16}})), eaf::SingularityError);
  EXPECT_THROW(eaf::require_regular_grid(hp, Grid({Axis{-4, 4, 16}, Axis{-1.0, 4, 16}})), eaf::SingularityError);
  EXPECT_NO_THROW(eaf::require_regular_grid(hp, Grid({Axis{-4, 4, 16}, Axis{0.05, 4, 16}})));
  EXPECT_THROW(eaf::FpkOperator(hp, Grid({Axis{-4, 4, 16}, Axis{0.0, 4, 16}})), eaf::SingularityError);
}

TEST(FpkRhs, ConstantFieldWithoutDriftIsStatic) {
  const auto m = mb_abelian().with_dissipation(eaf::DissipationTensor::identity(1, 0.0)).with_noise(
      eaf::NoiseCovariance::identity(1, 3.7));
  const Grid g({Axis{-3, 3, 32}});
  const DensityField f(g, m.measure(), std::vector<double>(g.size(), 0.4));
  EXPECT_EQ(max_abs(eaf::fpk_rhs(m, f)), 0.0);
}

TEST(FpkRhs, ConservesMassForAnyField) {
  const auto hp = eaf::builtin_model("halfplane");
  const Grid g2({Axis{-4, 4, 24}, Axis{0.05, 4, 20}});
  for (auto drift : {FpkDrift::Full, FpkDrift::DissipationOnly}) {
    const auto f = random_field(g2, hp.measure(), 1);
    const auto rhs = eaf::fpk_rhs(hp, f, drift);
    EXPECT_LT(std::abs(weighted_total(f, rhs)), 1e-12 * max_abs(rhs));
  }
  const auto so3 = eaf::builtin_model("so3");
  const Grid g3({Axis{-3, 3, 10}, Axis{-3, 3, 12}, Axis{-3, 3, 9}});
  const auto f = random_field(g3, so3.measure(), 2);
  const auto rhs = eaf::fpk_rhs(so3, f);
  EXPECT_LT(std::abs(weighted_total(f, rhs)), 1e-12 * max_abs(rhs));
}

TEST(FpkRhs, IndependentOfThreads) {
  const auto hp = eaf::builtin_model("halfplane");
  const Grid g({Axis{-4, 4, 40}, Axis{0.05, 4, 40}});
  const auto f = random_field(g, hp.measure(), 3);
  EXPECT_EQ(eaf::fpk_rhs(hp, f, FpkDrift::Full, 1), eaf::fpk_rhs(hp, f, FpkDrift::Full, 4));
}

double mb_residual(const eaf::ModelSpec& m, const std::vector<Axis>& axes, double beta) {
  const Grid g(axes);
  const auto f = DensityField::from_function(g, m.measure(), [&](const eaf::VelocityState& v) {
    return std::exp(-beta * eaf::energy(m, v));
  });
  return max_abs(eaf::fpk_rhs(m, f));
}

TEST(FpkRhs, MaxwellBoltzmannResidualIsSecondOrder) {
  const auto m = mb_abelian();
  const double r1 = mb_residual(m, {Axis{-8, 8, 64}}, 1.0);
  const double r2 = mb_residual(m, {Axis{-8, 8, 128}}, 1.0);
  const double r3 = mb_residual(m, {Axis{-8, 8, 256}}, 1.0);
  EXPECT_NEAR(r1 / r2, 4.0, 0.2);
  EXPECT_NEAR(r2 / r3, 4.0, 0.2);

  const auto so3 = eaf::builtin_model("so3");
  const double s1 = mb_residual(so3, {Axis{-6, 6, 32}, Axis{-6, 6, 32}, Axis{-6, 6, 32}}, 1.0);
  const double s2 = mb_residual(so3, {Axis{-6, 6, 64}, Axis{-6, 6, 64}, Axis{-6, 6, 64}}, 1.0);
  EXPECT_NEAR(s1 / s2, 4.0, 0.6) << s1 << " " << s2;
}

// With zero Hamiltonian drift the flux mu (D dP - A P) vanishes identically on
// P = exp(-beta E) when beta D = Gamma, whatever mu is.
TEST(FpkRhs, HalfPlaneGaussianIsStationaryUpToTruncation) {
  const auto m = eaf::halfplane_fpk_model(eaf::builtin_model("halfplane"), 1.0, 1.0);
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const Grid g({Axis{-4, 4, n}, Axis{0.05, 4, n}});
    const auto f = DensityField::from_function(g, m.measure(), [](const eaf::VelocityState& v) {
      return std::exp(-0.5 * v.squaredNorm());
    });
    const double r = max_abs(eaf::fpk_rhs(m, f, FpkDrift::DissipationOnly));
    if (prev > 0.0) EXPECT_NEAR(prev / r, 4.0, 0.5);
    prev = r;
  }
}

TEST(FpkEvolve, AbelianRelaxesToMaxwellBoltzmann) {
  const auto m = mb_abelian();
  const Grid g({Axis{-8, 8, 256}});
  const DensityField start(g, m.measure(), std::vector<double>(g.size(), 1.0));
  eaf::StationaryOptions so;
  auto res = eaf::run_to_stationarity(m, start, so);
  res.field.normalize();
  auto mb = DensityField::from_function(g, m.measure(), [](const eaf::VelocityState& v) {
    return std::exp(-0.5 * v[0] * v[0]);
  });
  mb.normalize();
  EXPECT_LT(eaf::l1_distance(res.field, mb), 1e-3);
  EXPECT_LT(res.mass_drift, 1e-8);
}

TEST(FpkEvolve, NoDriftNoNoiseIsStationary) {
  const auto m = mb_abelian().with_dissipation(eaf::DissipationTensor::identity(1, 0.0)).with_noise(
      eaf::NoiseCovariance::identity(1, 0.0));
  const Grid g({Axis{-3, 3, 16}});
  const auto f = random_field(g, m.measure(), 4);
  const auto res = eaf::fpk_evolve(m, f, 1.0, 0.1);
  EXPECT_EQ(res.field.values(), f.values());
  EXPECT_EQ(res.steps, 10);
}

TEST(FpkEvolve, RefusesUnstableStep) {
  const auto m = mb_abelian();
  const Grid g({Axis{-8, 8, 64}});
  const DensityField f(g, m.measure(), std::vector<double>(g.size(), 1.0));
  const eaf::FpkOperator op(m, g);
  const double bound = op.stable_dt();
  EXPECT_GT(bound, 0.0);
  EXPECT_THROW(eaf::fpk_evolve(m, f, 1.0, 1.5 * bound), eaf::ConfigError);
  EXPECT_NO_THROW(eaf::fpk_evolve(m, f, 10 * bound, bound));
}

TEST(FpkEvolve, MassConservedOver10kSteps) {
  const auto hp = eaf::builtin_model("halfplane");
  const Grid g({Axis{-4, 4, 32}, Axis{0.05, 4, 32}});
  const auto f = random_field(g, hp.measure(), 5);
  const eaf::FpkOperator op(hp, g, FpkDrift::Full);
  const double dt = op.stable_dt();
  eaf::EvolveOptions eo;
  eo.drift = FpkDrift::Full;
  const auto res = eaf::fpk_evolve(hp, f, 1e4 * dt, dt, eo);
  EXPECT_EQ(res.steps, 10000);
  EXPECT_LT(std::abs(res.field.mass() - f.mass()) / f.mass(), 1e-10);
  EXPECT_LT(res.mass_drift, 1e-10);
}

TEST(FpkEvolve, StepBudgetExhausted) {
  const auto m = mb_abelian();
  const Grid g({Axis{-8, 8, 64}});
  const DensityField f(g, m.measure(), std::vector<double>(g.size(), 1.0));
  eaf::StationaryOptions so;
  so.max_steps = 50;
  EXPECT_THROW(eaf::run_to_stationarity(m, f, so), eaf::ConvergenceError);
}

TEST(ClosedForm, Values) {
  EXPECT_NEAR(eaf::halfplane_exact_stationary(0.0, 3.0, 1.0), 0.00357731075413083, 1e-16);
  EXPECT_NEAR(eaf::halfplane_exact_stationary(0.0, 3.0, 1.0), oracle::halfplane_printed(0.0, 3.0, 1.0), 1e-17);
  const double tail = 1.0 - eaf::halfplane_exact_stationary(0.0, 3.0, 1.0) / (std::exp(-4.5) / 3.0);
  EXPECT_GT(tail, 0.0);
  EXPECT_LT(tail, 0.04);
  EXPECT_NEAR(eaf::halfplane_bracket(3.0, 1.0), 0.966057755572092, 1e-14);
  EXPECT_THROW(eaf::halfplane_exact_stationary(1.0, 0.0, 1.0), eaf::ConfigError);
  EXPECT_THROW(eaf::halfplane_exact_stationary(1.0, 1.0, 0.0), eaf::ConfigError);
}

TEST(ClosedForm, ReflectionSymmetric) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 4.0);
  for (int k = 0; k < 50; ++k) {
    const double a = u(rng), b = u(rng);
    EXPECT_EQ(eaf::halfplane_exact_stationary(a, b, 1.3), eaf::halfplane_exact_stationary(-a, b, 1.3));
    EXPECT_NEAR(eaf::halfplane_exact_stationary(a, b, 1.3), oracle::halfplane_printed(a, b, 1.3),
                1e-12 * oracle::halfplane_printed(a, b, 1.3));
  }
}

TEST(ClosedForm, SmallRhoLimit) {
  const double limit = 1.0 - 1.0 / std::sqrt(M_PI);
  EXPECT_NEAR(limit, 0.435810416452244, 1e-15);
  EXPECT_NEAR(eaf::halfplane_bracket(1e-9, 1.0), limit, 1e-15);
  // series and direct evaluation meet at the switch point
  EXPECT_NEAR(eaf::halfplane_bracket(1e-3 * (1 - 1e-12), 1.0), eaf::halfplane_bracket(1e-3 * (1 + 1e-12), 1.0), 1e-12);
  // moderate rho: the literal formula is accurate, compare with it
  for (double rho : {0.01, 0.1, 1.0, 5.0}) {
    const double lit = oracle::halfplane_printed(0.0, rho, 2.0) / (std::exp(-rho * rho) / rho);
    EXPECT_NEAR(eaf::halfplane_bracket(rho, 2.0), lit, 1e-10);
  }
  EXPECT_NEAR(eaf::halfplane_bracket(200.0, 1.0), 1.0, 1e-15);
}

TEST(Modes, GaussianPeaksAtLowerEdge) {
  const auto hp = eaf::builtin_model("halfplane");
  const Grid g({Axis{-4, 4, 32}, Axis{0.05, 4, 32}});
  const auto f = DensityField::from_function(g, hp.measure(), [](const eaf::VelocityState& v) {
    return std::exp(-0.5 * v.squaredNorm());
  });
  const auto modes = eaf::halfplane_modes(f);
  EXPECT_DOUBLE_EQ(modes.v1_marginal_dv, g.axis(1).center(0));
  EXPECT_FALSE(modes.bounded_away);
  EXPECT_NEAR(modes.joint_v0, 0.0, g.axis(0).spacing());
}

TEST(DistanceReport, SmallGrid) {
  const Grid g({Axis{-4, 4, 32}, Axis{0.05, 4, 32}});
  const auto rep = eaf::stationary_distance_report(eaf::builtin_model("halfplane"), g, 1.0);
  EXPECT_LT(rep.double_run_l1, 1e-4);
  EXPECT_LT(rep.mass_drift, 1e-8);
  EXPECT_LT(rep.solver_residual, 1e-6);
  ASSERT_TRUE(rep.control_l1.has_value());
  EXPECT_GT(*rep.control_l1, 0.1);
  EXPECT_GT(*rep.control_mean_v1, rep.mean_v1);
  EXPECT_EQ(rep.eps, 0.05);
  // The grid solution and the Gaussian-times-measure form coincide.
  auto mb = DensityField::from_function(g, eaf::builtin_model("halfplane").measure(),
                                        [](const eaf::VelocityState& v) { return std::exp(-0.5 * v.squaredNorm()); });
  mb.normalize();
  EXPECT_LT(eaf::l1_distance(rep.field, mb), 1e-2);
}

TEST(DensityCsv, RoundTrip) {
  const auto hp = eaf::builtin_model("halfplane");
  const Grid g({Axis{-4, 4, 12}, Axis{0.05, 4, 10}});
  const auto f = random_field(g, hp.measure(), 6);
  std::stringstream ss;
  ss << "# metadata\n";
  eaf::write_density_csv(ss, f);
  const auto back = eaf::read_density_csv(ss, hp.measure());
  EXPECT_EQ(back.grid().size(), g.size());
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(back.grid().axis(a).lo, g.axis(a).lo, 1e-12);
    EXPECT_NEAR(back.grid().axis(a).hi, g.axis(a).hi, 1e-12);
    EXPECT_EQ(back.grid().axis(a).cells, g.axis(a).cells);
  }
  EXPECT_EQ(back.values(), f.values());

  std::stringstream bad("v0,v1,P,muP\n1,2,3\n");
  EXPECT_THROW(eaf::read_density_csv(bad, hp.measure()), eaf::ConfigError);
}

}  // namespace
