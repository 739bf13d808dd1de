#include "eaf/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace eaf {

Matrix semidefinite_cholesky(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  const double tol = 1e-14 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= tol) continue;  // zero pivot: the column stays zero for PSD input
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

NoiseFactor::NoiseFactor(const NoiseCovariance& noise) : lower_(semidefinite_cholesky(2.0 * noise.matrix())) {
  zero_ = lower_.isZero(0.0);
}

Rng chain_rng(std::uint64_t master_seed, std::uint64_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(chain), static_cast<std::uint32_t>(chain >> 32)};
  return Rng(seq);
}

void require_langevin_compatible(const ModelSpec& model, bool allow_naive) {
  if (!model.measure().is_constant() && !allow_naive) {
    throw ConfigError("model '" + model.name() +
                      "' has a non-constant invariant measure; the Langevin sampler only targets mu = 1 "
                      "(pass the naive-process override to run anyway)");
  }
}

LangevinStepper::LangevinStepper(const ModelSpec& model, double dt, Rng rng, bool allow_naive)
    : model_(&model),
      factor_(model.noise()),
      dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      rng_(std::move(rng)),
      drift_(model.dim()),
      xi_(model.dim()) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("langevin: dt must be positive");
  require_langevin_compatible(model, allow_naive);
}

void LangevinStepper::step(VelocityState& v) {
  dissipative_drift_into(*model_, v, drift_);
  v += dt_ * drift_;
  if (!factor_.is_zero()) {
    for (Eigen::Index i = 0; i < xi_.size(); ++i) xi_[i] = normal_(rng_);
    xi_ = factor_.lower().triangularView<Eigen::Lower>() * xi_;
    v.noalias() += sqrt_dt_ * xi_;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(std::abs(v[i]) <= kBlowUpThreshold)) {
      std::ostringstream msg;
      msg << "langevin: state exceeded " << kBlowUpThreshold << " after t = " << time_;
      throw BlowUpError(msg.str(), time_);
    }
  }
  time_ += dt_;
}

VelocityState langevin_step(const ModelSpec& model, const VelocityState& v, double dt, Rng& rng) {
  require_dim(model, v, "langevin_step");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("langevin: dt must be positive");
  require_langevin_compatible(model, false);
  const NoiseFactor factor(model.noise());
  VelocityState out = v + dt * dissipative_drift(model, v);
  if (!factor.is_zero()) {
    std::normal_distribution<double> normal;
    Vector xi(model.dim());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
    out += std::sqrt(dt) * Vector(factor.lower().triangularView<Eigen::Lower>() * xi);
  }
  if (!(out.cwiseAbs().maxCoeff() <= kBlowUpThreshold)) throw BlowUpError("langevin: state exceeded 1e12", 0.0);
  return out;
}

// ---------------------------------------------------------------------------

EnergyHistogram::EnergyHistogram(int bins, double max_energy) {
  if (bins <= 0) throw ConfigError("histogram needs at least one bin");
  if (!(max_energy > 0.0)) throw ConfigError("histogram range must be positive");
  edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = max_energy * i / bins;
  counts.assign(static_cast<std::size_t>(bins), 0);
}

void EnergyHistogram::add(double e) {
  if (counts.empty()) return;
  const double width = edges.back() / static_cast<double>(counts.size());
  if (!(e < edges.back())) {
    ++overflow;
    return;
  }
  auto bin = static_cast<std::size_t>(std::max(0.0, e) / width);
  bin = std::min(bin, counts.size() - 1);
  ++counts[bin];
}

void EnergyHistogram::merge(const EnergyHistogram& other) {
  if (counts.empty()) {
    *this = other;
    return;
  }
  if (other.counts.empty()) return;
  if (other.edges != edges) throw ConfigError("cannot merge histograms with different bins");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  overflow += other.overflow;
}

EnsembleStats::EnsembleStats(int dim, int bins, double max_energy)
    : sum_(Vector::Zero(dim)), sum_outer_(Matrix::Zero(dim, dim)), histogram_(bins, max_energy) {}

void EnsembleStats::add(const VelocityState& v, double e) {
  ++count_;
  sum_ += v;
  sum_outer_.noalias() += v * v.transpose();
  sum_energy_ += e;
  histogram_.add(e);
}

void EnsembleStats::merge(const EnsembleStats& other) {
  if (other.count_ == 0 && other.sum_.size() == 0) return;
  if (sum_.size() == 0) {
    *this = other;
    return;
  }
  if (other.sum_.size() != sum_.size()) throw DimensionError("cannot merge ensemble stats of different dimension");
  count_ += other.count_;
  sum_ += other.sum_;
  sum_outer_ += other.sum_outer_;
  sum_energy_ += other.sum_energy_;
  histogram_.merge(other.histogram_);
}

Vector EnsembleStats::mean() const {
  if (count_ == 0) throw RuntimeFailure("ensemble is empty");
  return sum_ / static_cast<double>(count_);
}

Matrix EnsembleStats::second_moments() const {
  if (count_ == 0) throw RuntimeFailure("ensemble is empty");
  return sum_outer_ / static_cast<double>(count_);
}

double EnsembleStats::mean_energy() const {
  if (count_ == 0) throw RuntimeFailure("ensemble is empty");
  return sum_energy_ / static_cast<double>(count_);
}

// ---------------------------------------------------------------------------

namespace {

struct ChainOutput {
  EnsembleStats stats;
  std::vector<VelocityState> samples;
};

ChainOutput run_chain(const ModelSpec& model, const VelocityState& v0, const SamplerConfig& cfg, int chain,
                      std::uint64_t samples) {
  ChainOutput out{EnsembleStats(model.dim(), cfg.histogram_bins, cfg.histogram_max), {}};
  LangevinStepper stepper(model, cfg.dt, chain_rng(cfg.seed, static_cast<std::uint64_t>(chain)), cfg.allow_naive);
  VelocityState v = v0;
  const long burn_steps = static_cast<long>(std::llround(cfg.burn_in / cfg.dt));
  for (long k = 0; k < burn_steps; ++k) stepper.step(v);
  if (cfg.keep_samples) out.samples.reserve(samples);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (long k = 0; k < cfg.thin; ++k) stepper.step(v);
    out.stats.add(v, energy(model, v));
    if (cfg.keep_samples) out.samples.push_back(v);
  }
  return out;
}

}  // namespace

EnsembleResult sample_equilibrium(const ModelSpec& model, const VelocityState& v0, const SamplerConfig& cfg) {
  require_dim(model, v0, "sample_equilibrium");
  if (cfg.samples == 0) throw ConfigError("sample_equilibrium: samples must be positive");
  if (cfg.thin <= 0) throw ConfigError("sample_equilibrium: thin must be positive");
  if (cfg.chains <= 0) throw ConfigError("sample_equilibrium: chains must be positive");
  if (!(cfg.burn_in >= 0.0)) throw ConfigError("sample_equilibrium: burn-in must be non-negative");
  require_langevin_compatible(model, cfg.allow_naive);

  const auto chains = static_cast<std::uint64_t>(cfg.chains);
  std::vector<ChainOutput> outputs(chains);
  std::vector<std::exception_ptr> errors(chains);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads > 0 ? cfg.threads : 1)
  for (long c = 0; c < static_cast<long>(chains); ++c) {
    const auto uc = static_cast<std::uint64_t>(c);
    const std::uint64_t share = cfg.samples / chains + (uc < cfg.samples % chains ? 1 : 0);
    try {
      outputs[uc] = run_chain(model, v0, cfg, static_cast<int>(c), share);
    } catch (...) {
      errors[uc] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EnsembleResult result{EnsembleStats(model.dim(), cfg.histogram_bins, cfg.histogram_max), {}};
  for (auto& out : outputs) {
    result.stats.merge(out.stats);
    if (cfg.keep_samples) {
      for (auto& s : out.samples) result.samples.push_back(std::move(s));
    }
  }
  return result;
}

double einstein_check(const ModelSpec& model, double beta) {
  if (!(beta > 0.0)) throw ConfigError("einstein_check: beta must be positive");
  return (beta * model.noise().matrix() - model.dissipation().matrix()).cwiseAbs().maxCoeff();
}

}  // namespace eaf
