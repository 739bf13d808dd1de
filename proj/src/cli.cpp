#include "eaf/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "eaf/algebra.hpp"
#include "eaf/curvature.hpp"
#include "eaf/dynamics.hpp"
#include "eaf/format.hpp"
#include "eaf/fpk.hpp"
#include "eaf/instanton.hpp"
#include "eaf/langevin.hpp"
#include "eaf/model_io.hpp"

#ifndef EAF_VERSION
#define EAF_VERSION "0.0.0"
#endif

namespace eaf::cli {

const char* version() { return EAF_VERSION; }

namespace {

Vector to_vector(const std::vector<double>& xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(what + ": cannot parse '" + item + "'");
    }
  }
  return out;
}

std::map<std::string, double> parse_pairs(const std::string& text, const std::string& what) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(what + ": expected key=value, got '" + item + "'");
    const auto values = parse_list(item.substr(eq + 1), what);
    if (values.size() != 1) throw ConfigError(what + ": bad value in '" + item + "'");
    out[item.substr(0, eq)] = values[0];
  }
  return out;
}

// Metadata lines shared by every output.
class Metadata {
 public:
  Metadata(std::string command, std::string model) : command_(std::move(command)), model_(std::move(model)) {}

  void set(const std::string& key, const std::string& value) { params_.emplace_back(key, value); }
  void set(const std::string& key, double value) { set(key, fmt17(value)); }

  void write(std::ostream& os) const {
    os << "# eaf_version=" << version() << "\n";
    os << "# command=" << command_ << "\n";
    if (!model_.empty()) os << "# model=" << model_ << "\n";
    for (const auto& [k, v] : params_) os << "# " << k << "=" << v << "\n";
  }

 private:
  std::string command_;
  std::string model_;
  std::vector<std::pair<std::string, std::string>> params_;
};

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
  return s;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output file '" + path + "'");
  return os;
}

// Options shared by commands that take a model reference.
struct ModelOptions {
  std::string ref;
  std::optional<double> gamma;
  std::optional<double> noise;
  std::vector<double> metric;

  void attach(CLI::App* sub) {
    sub->add_option("model", ref, "built-in model name or model file")->required();
    sub->add_option("--gamma", gamma, "isotropic dissipation: Gamma = gamma * I");
    sub->add_option("--noise", noise, "isotropic noise: D = noise * I");
    sub->add_option("--metric", metric, "diagonal kinetic metric G")->delimiter(',');
  }

  ModelSpec load(Metadata& meta) const {
    ModelSpec m = load_model(ref);
    const int n = m.dim();
    if (!metric.empty()) {
      if (static_cast<int>(metric.size()) != n) throw DimensionError("--metric needs one entry per coordinate");
      m = m.with_metric(KineticMetric::diagonal(to_vector(metric)));
      meta.set("metric", join(to_vector(metric)));
    }
    if (gamma) {
      m = m.with_dissipation(DissipationTensor::identity(n, *gamma));
      meta.set("gamma", *gamma);
    }
    if (noise) {
      m = m.with_noise(NoiseCovariance::identity(n, *noise));
      meta.set("noise", *noise);
    }
    return m;
  }
};

VelocityState state_or_default(const std::vector<double>& xs, const ModelSpec& model, const std::string& what) {
  if (xs.empty()) return VelocityState::Zero(model.dim());
  VelocityState v = to_vector(xs);
  require_dim(model, v, what);
  return v;
}

// ---------------------------------------------------------------------------

struct CheckCmd {
  ModelOptions model;
  double h = 1e-4;
  int points = 10;
  std::uint64_t seed = 1;

  void attach(CLI::App* sub) {
    model.attach(sub);
    sub->add_option("--fd-step", h, "finite-difference step for the measure divergence");
    sub->add_option("--points", points, "random domain points for the measure divergence");
    sub->add_option("--seed", seed, "seed for the sample points");
  }

  int operator()(std::ostream& out) const {
    Metadata meta("check", model.ref);
    const ModelSpec m = model.load(meta);
    meta.set("h", h);
    meta.set("seed", std::to_string(seed));
    meta.write(out);

    const auto& f = m.algebra();
    const Vector trace = unimodularity_trace(f);
    out << "name=" << m.name() << "\n";
    out << "dim=" << m.dim() << "\n";
    out << "antisymmetry_violation=" << fmt17(f.antisymmetry_violation()) << "\n";
    out << "jacobi_residual=" << fmt17(jacobi_residual(f)) << "\n";
    out << "unimodular=" << (is_unimodular(f) ? "true" : "false") << "\n";
    out << "trace=" << join(trace) << "\n";
    out << "measure=" << m.measure().describe() << "\n";

    const auto min_eig = [](const Matrix& x) {
      return Eigen::SelfAdjointEigenSolver<Matrix>(x, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    };
    out << "metric_min_eigenvalue=" << fmt17(min_eig(m.metric().matrix())) << "\n";
    out << "dissipation_min_eigenvalue=" << fmt17(min_eig(m.dissipation().matrix())) << "\n";
    out << "noise_min_eigenvalue=" << fmt17(min_eig(m.noise().matrix())) << "\n";

    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < points; ++k) {
      VelocityState v(m.dim());
      for (int a = 0; a < m.dim(); ++a) {
        const auto& iv = m.domain()[static_cast<std::size_t>(a)];
        const double lo = std::isfinite(iv.lo) ? iv.lo : (std::isfinite(iv.hi) ? iv.hi - 4.0 : -2.0);
        const double hi = std::isfinite(iv.hi) ? iv.hi : lo + 4.0;
        std::uniform_real_distribution<double> u(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
        v[a] = u(rng);
      }
      worst = std::max(worst, std::abs(measure_divergence_residual(m, v, h)));
    }
    out << "measure_divergence_max=" << fmt17(worst) << "\n";
    return kExitOk;
  }
};

struct SimulateCmd {
  ModelOptions model;
  std::vector<double> v0;
  double T = 1.0;
  double dt = 1e-3;
  bool dissipative = false;
  long every = 1;
  std::string out_path;

  void attach(CLI::App* sub) {
    model.attach(sub);
    sub->add_option("--v0", v0, "initial state, comma separated")->delimiter(',')->required();
    sub->add_option("--T", T, "duration");
    sub->add_option("--dt", dt, "time step");
    sub->add_flag("--dissipative", dissipative, "include -Gamma G v in the drift");
    sub->add_option("--every", every, "write every k-th step")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "CSV output file (default stdout)");
  }

  int operator()(std::ostream& out) const {
    Metadata meta("simulate", model.ref);
    const ModelSpec m = model.load(meta);
    const VelocityState start = state_or_default(v0, m, "--v0");
    meta.set("v0", join(start));
    meta.set("T", T);
    meta.set("dt", dt);
    meta.set("flow", dissipative ? "dissipative" : "geodesic");

    const Trajectory traj = integrate(m, start, T, dt, dissipative ? Flow::Dissipative : Flow::Geodesic);
    const auto energies = energy_series(m, traj);

    std::ofstream file;
    if (!out_path.empty()) file = open_output(out_path);
    std::ostream& os = out_path.empty() ? out : file;
    meta.write(os);
    os << "t";
    for (int a = 0; a < m.dim(); ++a) os << ",v" << a;
    os << ",E\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (k % static_cast<std::size_t>(every) != 0 && k + 1 != traj.size()) continue;
      os << fmt17(traj.times[k]);
      for (int a = 0; a < m.dim(); ++a) os << "," << fmt17(traj.states[k][a]);
      os << "," << fmt17(energies[k]) << "\n";
    }
    if (!out_path.empty()) {
      meta.write(out);
      out << "rows=" << traj.size() << "\n";
      out << "final_state=" << join(traj.back()) << "\n";
      out << "energy_drift=" << fmt17(energies.back() - energies.front()) << "\n";
    }
    return kExitOk;
  }
};

struct EnsembleCmd {
  ModelOptions model;
  std::vector<double> v0;
  SamplerConfig cfg;
  std::string out_path;

  void attach(CLI::App* sub) {
    model.attach(sub);
    sub->add_option("--v0", v0, "initial state (default origin)")->delimiter(',');
    sub->add_option("--dt", cfg.dt, "time step");
    sub->add_option("--burn-in", cfg.burn_in, "discarded duration per chain");
    sub->add_option("--samples", cfg.samples, "recorded states in total");
    sub->add_option("--thin", cfg.thin, "steps between recorded states");
    sub->add_option("--seed", cfg.seed, "64-bit master seed");
    sub->add_option("--chains", cfg.chains, "independent chains (part of the experiment definition)");
    sub->add_option("--threads", cfg.threads, "worker threads (results do not depend on it)");
    sub->add_option("--hist-bins", cfg.histogram_bins, "energy histogram bins");
    sub->add_option("--hist-max", cfg.histogram_max, "energy histogram upper edge");
    sub->add_flag("--allow-naive", cfg.allow_naive, "run the naive process for non-constant measures");
    sub->add_option("--out", out_path, "CSV of recorded samples");
  }

  int operator()(std::ostream& out) {
    Metadata meta("ensemble", model.ref);
    const ModelSpec m = model.load(meta);
    const VelocityState start = state_or_default(v0, m, "--v0");
    meta.set("v0", join(start));
    meta.set("dt", cfg.dt);
    meta.set("burn_in", cfg.burn_in);
    meta.set("samples", std::to_string(cfg.samples));
    meta.set("thin", std::to_string(cfg.thin));
    meta.set("chains", std::to_string(cfg.chains));
    meta.set("seed", std::to_string(cfg.seed));
    if (cfg.allow_naive && !m.measure().is_constant()) meta.set("process", "naive");

    cfg.keep_samples = !out_path.empty();
    const EnsembleResult res = sample_equilibrium(m, start, cfg);

    if (!out_path.empty()) {
      std::ofstream os = open_output(out_path);
      meta.write(os);
      os << "sample_index";
      for (int a = 0; a < m.dim(); ++a) os << ",v" << a;
      os << ",E\n";
      for (std::size_t i = 0; i < res.samples.size(); ++i) {
        os << i;
        for (int a = 0; a < m.dim(); ++a) os << "," << fmt17(res.samples[i][a]);
        os << "," << fmt17(energy(m, res.samples[i])) << "\n";
      }
    }

    meta.write(out);
    const auto& st = res.stats;
    out << "count=" << st.count() << "\n";
    out << "mean=" << join(st.mean()) << "\n";
    const Matrix mom = st.second_moments();
    for (int a = 0; a < m.dim(); ++a)
      for (int b = a; b < m.dim(); ++b) out << "second_moment_" << a << b << "=" << fmt17(mom(a, b)) << "\n";
    out << "mean_energy=" << fmt17(st.mean_energy()) << "\n";
    const auto& hist = st.energy_histogram();
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
      out << "energy_bin_" << k << "=" << fmt17(hist.edges[k]) << "," << fmt17(hist.edges[k + 1]) << ","
          << hist.counts[k] << "\n";
    }
    out << "energy_overflow=" << hist.overflow << "\n";
    return kExitOk;
  }
};

struct FpkCmd {
  ModelOptions model;
  std::vector<int> cells;
  std::vector<double> lo;
  std::vector<double> hi;
  std::optional<double> beta;
  std::optional<double> eps;
  std::string drift = "auto";
  std::string init_path;
  std::string out_path;
  double dt = 0.0;
  double tol = 1e-8;
  long steps = 5'000'000;
  double check_interval = 1.0;
  int threads = 1;
  bool report = false;
  double sensitivity_eps = 0.0;
  bool no_control = false;
  bool measure_constant = false;

  void attach(CLI::App* sub) {
    model.attach(sub);
    sub->add_option("--cells", cells, "cells per axis")->delimiter(',');
    sub->add_option("--lo", lo, "lower grid edges (use --lo=-4,0.05 for negatives)")->delimiter(',');
    sub->add_option("--hi", hi, "upper grid edges")->delimiter(',');
    sub->add_option("--beta", beta, "inverse temperature; sets D = gamma / beta");
    sub->add_option("--eps", eps, "lower edge of singular measure coordinates (default 0.05 * upper edge)");
    sub->add_option("--drift", drift, "full | dissipation | auto")
        ->check(CLI::IsMember({"full", "dissipation", "auto"}));
    sub->add_option("--init", init_path, "restart from a density CSV");
    sub->add_option("--dt", dt, "time step (default: stability bound)");
    sub->add_option("--tol", tol, "stationarity tolerance (L1 change per unit time)");
    sub->add_option("--steps", steps, "step budget");
    sub->add_option("--check-interval", check_interval, "time between convergence checks");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)");
    sub->add_flag("--report", report, "half-plane distance report (two starts, closed form, mu = 1 control)");
    sub->add_option("--sensitivity-eps", sensitivity_eps, "report: extra run with this lower v1 edge");
    sub->add_flag("--no-control", no_control, "report: skip the mu = 1 control run");
    sub->add_flag("--measure-constant", measure_constant, "replace the invariant measure by mu = 1");
    sub->add_option("--out", out_path, "CSV of the stationary field");
  }

  int operator()(std::ostream& out) const {
    Metadata meta("fpk", model.ref);
    ModelSpec m = model.load(meta);
    const int n = m.dim();
    const bool halfplane = m.measure().kind() == InvariantMeasure::Kind::HalfPlane;
    if (measure_constant) {
      m = m.with_measure(InvariantMeasure::constant(n));
      meta.set("measure", "constant");
    }
    const double b = beta.value_or(1.0);
    const double g = model.gamma.value_or(1.0);
    if (halfplane || beta) {
      m = m.with_dissipation(DissipationTensor::identity(n, g)).with_noise(NoiseCovariance::identity(n, g / b));
      meta.set("beta", b);
      meta.set("gamma", g);
    }
    FpkDrift mode = FpkDrift::Full;
    if (drift == "dissipation" || (drift == "auto" && halfplane)) mode = FpkDrift::DissipationOnly;
    meta.set("drift", mode == FpkDrift::Full ? "full" : "dissipation");

    std::optional<DensityField> initial;
    if (!init_path.empty()) {
      std::ifstream is(init_path);
      if (!is) throw ConfigError("cannot open '" + init_path + "'");
      initial = read_density_csv(is, m.measure());
      meta.set("init", init_path);
    }
    const Grid grid = initial ? initial->grid() : make_grid(m, halfplane);
    for (int a = 0; a < n; ++a) {
      const auto& ax = grid.axis(a);
      meta.set("axis" + std::to_string(a), fmt17(ax.lo) + "," + fmt17(ax.hi) + "," + std::to_string(ax.cells));
    }

    StationaryOptions so;
    so.evolve.drift = mode;
    so.evolve.threads = threads;
    so.dt = dt;
    so.tolerance = tol;
    so.max_steps = steps;
    so.check_interval = check_interval;

    if (report) {
      if (!halfplane || measure_constant) throw ConfigError("--report needs the half-plane model");
      DistanceReportOptions ro;
      ro.gamma = g;
      ro.drift = mode;
      ro.stationary = so;
      ro.sensitivity_eps = sensitivity_eps;
      ro.measure_control = !no_control;
      const DistanceReport rep = stationary_distance_report(m, grid, b, ro);
      write_field(meta, rep.field);
      meta.write(out);
      write_report(out, rep);
      return kExitOk;
    }

    const DensityField start = initial ? *initial : DensityField(grid, m.measure(), std::vector<double>(grid.size(), 1.0));
    StationaryResult res = run_to_stationarity(m, start, so);
    res.field.normalize();
    write_field(meta, res.field);
    meta.write(out);
    out << "steps=" << res.steps << "\n";
    out << "time=" << fmt17(res.time) << "\n";
    out << "change_rate=" << fmt17(res.last_change_rate) << "\n";
    out << "mass_drift=" << fmt17(res.mass_drift) << "\n";
    out << "clipped_mass=" << fmt17(res.clipped_mass) << "\n";
    if (is_unimodular(m.algebra()) && m.measure().is_constant()) {
      const DensityField mb = DensityField::from_function(grid, m.measure(), [&](const VelocityState& v) {
        return std::exp(-b * energy(m, v));
      });
      DensityField mbn = mb;
      mbn.normalize();
      out << "maxwell_boltzmann_l1=" << fmt17(l1_distance(res.field, mbn)) << "\n";
    }
    if (n == 2) {
      const ModeSummary modes = halfplane_modes(res.field);
      out << "mode_v1_marginal_muP=" << fmt17(modes.v1_marginal_dv) << "\n";
      out << "mode_v1_marginal_P=" << fmt17(modes.v1_marginal_p) << "\n";
      out << "mode_joint=" << fmt17(modes.joint_v0) << "," << fmt17(modes.joint_v1) << "\n";
    }
    return kExitOk;
  }

  Grid make_grid(const ModelSpec& m, bool halfplane) const {
    const int n = m.dim();
    auto pick = [n](const std::vector<double>& xs, double dflt, const char* what) {
      if (xs.empty()) return std::vector<double>(static_cast<std::size_t>(n), dflt);
      if (static_cast<int>(xs.size()) != n) throw DimensionError(std::string(what) + " needs one entry per axis");
      return xs;
    };
    std::vector<double> lows = pick(lo, -4.0, "--lo");
    const std::vector<double> highs = pick(hi, 4.0, "--hi");
    std::vector<int> counts = cells.empty() ? std::vector<int>(static_cast<std::size_t>(n), 64) : cells;
    if (static_cast<int>(counts.size()) != n) throw DimensionError("--cells needs one entry per axis");
    for (int a : m.measure().singular_coordinates()) {
      const auto ua = static_cast<std::size_t>(a);
      if (eps || lo.empty() || halfplane) lows[ua] = eps.value_or(lo.empty() ? 0.05 * highs[ua] : lows[ua]);
    }
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < static_cast<std::size_t>(n); ++a) axes.push_back(Axis{lows[a], highs[a], counts[a]});
    return Grid(axes);
  }

  void write_field(const Metadata& meta, const DensityField& field) const {
    if (out_path.empty()) return;
    std::ofstream os = open_output(out_path);
    meta.write(os);
    write_density_csv(os, field);
  }

  static void write_report(std::ostream& out, const DistanceReport& rep) {
    out << "eps=" << fmt17(rep.eps) << "\n";
    out << "steps=" << rep.steps << "\n";
    out << "stationary_time=" << fmt17(rep.stationary_time) << "\n";
    out << "double_run_l1=" << fmt17(rep.double_run_l1) << "\n";
    out << "closed_form_l1=" << fmt17(rep.closed_form_l1) << "\n";
    out << "closed_form_target_met=" << (rep.closed_form_l1 <= 0.10 ? "true" : "false") << "\n";
    out << "closed_form_residual=" << fmt17(rep.closed_form_residual) << "\n";
    out << "solver_residual=" << fmt17(rep.solver_residual) << "\n";
    out << "mass_drift=" << fmt17(rep.mass_drift) << "\n";
    out << "clipped_mass=" << fmt17(rep.clipped_mass) << "\n";
    out << "mode_v1_marginal_muP=" << fmt17(rep.modes.v1_marginal_dv) << "\n";
    out << "mode_v1_marginal_P=" << fmt17(rep.modes.v1_marginal_p) << "\n";
    out << "mode_joint=" << fmt17(rep.modes.joint_v0) << "," << fmt17(rep.modes.joint_v1) << "\n";
    out << "mode_bounded_away=" << (rep.modes.bounded_away ? "true" : "false") << "\n";
    out << "closed_form_mode_v1_marginal=" << fmt17(rep.closed_form_modes.v1_marginal_dv) << "\n";
    out << "mean_v1=" << fmt17(rep.mean_v1) << "\n";
    if (rep.sensitivity_eps) {
      out << "sensitivity_eps=" << fmt17(*rep.sensitivity_eps) << "\n";
      out << "sensitivity_closed_form_l1=" << fmt17(*rep.sensitivity_closed_form_l1) << "\n";
      out << "sensitivity_mode_v1_marginal_muP=" << fmt17(*rep.sensitivity_mode) << "\n";
    }
    if (rep.control_l1) {
      out << "control_l1=" << fmt17(*rep.control_l1) << "\n";
      out << "control_mean_v1=" << fmt17(*rep.control_mean_v1) << "\n";
    }
  }
};

struct InstantonCmd {
  ModelOptions model;
  std::vector<double> v_start;
  std::vector<double> v_end;
  double T = 10.0;
  double dt = 1e-3;
  std::vector<std::string> guesses;
  int threads = 1;
  int max_iterations = 60;
  std::string out_path;

  void attach(CLI::App* sub) {
    model.attach(sub);
    sub->add_option("--v-start", v_start, "initial state")->delimiter(',')->required();
    sub->add_option("--v-end", v_end, "final state")->delimiter(',')->required();
    sub->add_option("--T", T, "duration");
    sub->add_option("--dt", dt, "time step");
    sub->add_option("--guess", guesses, "initial momentum w(0), comma separated; repeat for multistart");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)");
    sub->add_option("--max-iterations", max_iterations, "Newton iterations per start");
    sub->add_option("--out", out_path, "CSV of the instanton path");
  }

  int operator()(std::ostream& out) const {
    Metadata meta("instanton", model.ref);
    const ModelSpec m = model.load(meta);
    const VelocityState a = state_or_default(v_start, m, "--v-start");
    const VelocityState b = state_or_default(v_end, m, "--v-end");
    ShootOptions opts;
    opts.threads = threads;
    opts.max_iterations = max_iterations;
    for (const auto& g : guesses) {
      Vector w = to_vector(parse_list(g, "--guess"));
      require_dim(m, w, "--guess");
      opts.guesses.push_back(w);
    }
    meta.set("v_start", join(a));
    meta.set("v_end", join(b));
    meta.set("T", T);
    meta.set("dt", dt);
    for (std::size_t i = 0; i < opts.guesses.size(); ++i) meta.set("guess" + std::to_string(i), join(opts.guesses[i]));

    const ShootResult res = shoot(m, a, b, T, dt, opts);
    const InstantonPath& path = res.path;
    if (!out_path.empty()) {
      std::ofstream os = open_output(out_path);
      meta.write(os);
      os << "t";
      for (int k = 0; k < m.dim(); ++k) os << ",v" << k;
      for (int k = 0; k < m.dim(); ++k) os << ",w" << k;
      os << ",H,partial_action\n";
      for (std::size_t i = 0; i < path.size(); ++i) {
        os << fmt17(path.times[i]);
        for (int k = 0; k < m.dim(); ++k) os << "," << fmt17(path.v[i][k]);
        for (int k = 0; k < m.dim(); ++k) os << "," << fmt17(path.w[i][k]);
        os << "," << fmt17(path.hamiltonian[i]) << "," << fmt17(path.partial_action[i]) << "\n";
      }
    }
    double h_drift = 0.0;
    for (double h : path.hamiltonian) h_drift = std::max(h_drift, std::abs(h - path.hamiltonian.front()));
    meta.write(out);
    out << "w0=" << join(res.w0) << "\n";
    out << "residual=" << fmt17(res.residual) << "\n";
    out << "start_index=" << res.start_index << "\n";
    out << "H=" << fmt17(path.hamiltonian.front()) << "\n";
    out << "H_drift=" << fmt17(h_drift) << "\n";
    out << "Phi=" << fmt17(path.action) << "\n";
    return kExitOk;
  }
};

struct CurvatureCmd {
  std::string cylinder;
  std::vector<double> moments;
  double tol = 1e-10;

  void attach(CLI::App* sub) {
    auto* cyl = sub->add_option("--cylinder", cylinder, "solid cylinder r=..,h=..,m=..");
    auto* mom = sub->add_option("--moments", moments, "principal metric coefficients G1,G2,G3")->delimiter(',');
    cyl->excludes(mom);
    sub->add_option("--tol", tol, "bisection tolerance for the transition height");
  }

  int operator()(std::ostream& out) const {
    Metadata meta("curvature", "");
    auto write_k = [&out](const CurvatureReport& k) {
      out << "K12=" << fmt17(k.K12) << "\n";
      out << "K23=" << fmt17(k.K23) << "\n";
      out << "K31=" << fmt17(k.K31) << "\n";
    };
    if (!cylinder.empty()) {
      const auto kv = parse_pairs(cylinder, "--cylinder");
      for (const auto& [k, _] : kv) {
        if (k != "r" && k != "h" && k != "m") throw ConfigError("--cylinder: unknown key '" + k + "'");
      }
      if (!kv.contains("r") || !kv.contains("h")) throw ConfigError("--cylinder needs r and h");
      const double r = kv.at("r");
      const double h = kv.at("h");
      const double mass = kv.contains("m") ? kv.at("m") : 1.0;
      meta.set("cylinder", "r=" + fmt17(r) + ",h=" + fmt17(h) + ",m=" + fmt17(mass));
      meta.write(out);
      const CoinReport rep = coin_stability(r, h, mass);
      out << "I1=" << fmt17(rep.I1) << "\n";
      out << "I3=" << fmt17(rep.I3) << "\n";
      write_k(rep.curvature);
      out << "classification=" << to_string(rep.classification) << "\n";
      out << "transition_h=" << fmt17(coin_transition_height(r, mass, 1e-3 * r, 10.0 * r, tol)) << "\n";
      return kExitOk;
    }
    if (moments.size() != 3) throw ConfigError("curvature needs --cylinder or --moments G1,G2,G3");
    meta.set("moments", join(to_vector(moments)));
    meta.write(out);
    write_k(sectional_curvature(moments[0], moments[1], moments[2]));
    return kExitOk;
  }
};

void print_error(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  std::string clean = message;
  for (char& c : clean) {
    if (c == '\n' || c == '"') c = '\'';
  }
  err << "error code=" << code << " kind=" << kind << " message=\"" << clean << "\"\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-dimensional Euler-Arnold models with dissipation and noise", "eaf"};
  app.set_version_flag("--version", version());
  app.set_config("--config", "", "read options from a TOML/INI file (flags take precedence)");
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);

  CheckCmd check;
  SimulateCmd simulate;
  EnsembleCmd ensemble;
  FpkCmd fpk;
  InstantonCmd instanton;
  CurvatureCmd curvature;

  auto* s_check = app.add_subcommand("check", "validate a model's algebraic data");
  auto* s_sim = app.add_subcommand("simulate", "integrate the geodesic or dissipative flow");
  auto* s_ens = app.add_subcommand("ensemble", "Langevin equilibrium sampling");
  auto* s_fpk = app.add_subcommand("fpk", "Fokker-Planck grid solver to stationarity");
  auto* s_ins = app.add_subcommand("instanton", "minimum-action path by shooting");
  auto* s_cur = app.add_subcommand("curvature", "rigid-body sectional curvatures and coin stability");
  check.attach(s_check);
  simulate.attach(s_sim);
  ensemble.attach(s_ens);
  fpk.attach(s_fpk);
  instanton.attach(s_ins);
  curvature.attach(s_cur);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, kExitConfig, "config", e.what());
    return kExitConfig;
  }

  try {
    if (s_check->parsed()) return check(out);
    if (s_sim->parsed()) return simulate(out);
    if (s_ens->parsed()) return ensemble(out);
    if (s_fpk->parsed()) return fpk(out);
    if (s_ins->parsed()) return instanton(out);
    if (s_cur->parsed()) return curvature(out);
  } catch (const ConfigError& e) {
    print_error(err, kExitConfig, "config", e.what());
    return kExitConfig;
  } catch (const SingularityError& e) {
    print_error(err, kExitConfig, "singularity", e.what());
    return kExitConfig;
  } catch (const BlowUpError& e) {
    print_error(err, kExitRuntime, "blowup", e.what());
    return kExitRuntime;
  } catch (const ConvergenceError& e) {
    print_error(err, kExitRuntime, "convergence", e.what());
    return kExitRuntime;
  } catch (const RuntimeFailure& e) {
    print_error(err, kExitRuntime, "runtime", e.what());
    return kExitRuntime;
  }
  print_error(err, kExitConfig, "config", "no subcommand");
  return kExitConfig;
}

}  // namespace eaf::cli
