#pragma once

// Euler-Maruyama sampling of the randomly forced dissipative flow
//   dv = (-Gamma G v + V(v)) dt + L dW,   L L^T = 2 D,
// whose Fokker-Planck equation has diffusion coefficient D, so that under
// beta D = Gamma the stationary law is exp(-beta E) (unimodular algebras).

#include <cstdint>
#include <random>
#include <vector>

#include "eaf/algebra.hpp"

namespace eaf {

using Rng = std::mt19937_64;

/// Lower-triangular L with L L^T = 2 D. Semidefinite D is handled by zeroing
/// columns whose pivot vanishes.
class NoiseFactor {
 public:
  explicit NoiseFactor(const NoiseCovariance& noise);

  const Matrix& lower() const noexcept { return lower_; }
  bool is_zero() const noexcept { return zero_; }

 private:
  Matrix lower_;
  bool zero_ = false;
};

/// Lower-triangular factor of a symmetric positive semidefinite matrix.
Matrix semidefinite_cholesky(const Matrix& a);

/// Rng for chain `chain` of a run seeded with `master_seed`.
Rng chain_rng(std::uint64_t master_seed, std::uint64_t chain);

/// Throws ConfigError for models with a non-constant invariant measure unless
/// `allow_naive` is set.
void require_langevin_compatible(const ModelSpec& model, bool allow_naive);

/// Stateful stepper reusing the noise factor and scratch storage.
class LangevinStepper {
 public:
  LangevinStepper(const ModelSpec& model, double dt, Rng rng, bool allow_naive = false);

  /// One Euler-Maruyama step in place; throws BlowUpError when a component exceeds 1e12.
  void step(VelocityState& v);

  double dt() const noexcept { return dt_; }
  double time() const noexcept { return time_; }

 private:
  const ModelSpec* model_;
  NoiseFactor factor_;
  double dt_;
  double sqrt_dt_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  VelocityState drift_;
  VelocityState xi_;
  double time_ = 0.0;
};

/// Single step v + drift(v) dt + L xi sqrt(dt). Refuses non-constant measures.
VelocityState langevin_step(const ModelSpec& model, const VelocityState& v, double dt, Rng& rng);

struct EnergyHistogram {
  std::vector<double> edges;  // bins + 1 increasing edges
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;

  EnergyHistogram() = default;
  EnergyHistogram(int bins, double max_energy);

  void add(double e);
  void merge(const EnergyHistogram& other);
};

/// Running sums over recorded states. Merging adds sums and counts.
class EnsembleStats {
 public:
  EnsembleStats() = default;
  EnsembleStats(int dim, int bins, double max_energy);

  void add(const VelocityState& v, double e);
  void merge(const EnsembleStats& other);

  std::uint64_t count() const noexcept { return count_; }
  Vector mean() const;
  Matrix second_moments() const;
  double mean_energy() const;
  const EnergyHistogram& energy_histogram() const noexcept { return histogram_; }

 private:
  std::uint64_t count_ = 0;
  Vector sum_;
  Matrix sum_outer_;
  double sum_energy_ = 0.0;
  EnergyHistogram histogram_;
};

struct SamplerConfig {
  double dt = 1e-3;
  double burn_in = 10.0;         // duration discarded per chain
  std::uint64_t samples = 10000; // total recorded, split across chains
  long thin = 100;               // steps between recorded states
  std::uint64_t seed = 1;
  int chains = 1;
  int threads = 1;               // does not affect results
  int histogram_bins = 50;
  double histogram_max = 20.0;
  bool keep_samples = false;
  bool allow_naive = false;      // permit non-constant invariant measures
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<VelocityState> samples;  // chain-major order, only with keep_samples
};

EnsembleResult sample_equilibrium(const ModelSpec& model, const VelocityState& v0, const SamplerConfig& cfg);

/// max |beta D_ab - Gamma_ab|
double einstein_check(const ModelSpec& model, double beta);

}  // namespace eaf
