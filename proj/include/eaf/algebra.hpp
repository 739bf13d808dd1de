#pragma once

// Defining data of a finite-dimensional Euler-Arnold model: Lie algebra
// structure constants, kinetic metric, dissipation and noise tensors, and the
// invariant measure of the ideal flow on velocity space.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eaf/error.hpp"

namespace eaf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Velocity (angular momentum) coordinates v_a.
using VelocityState = Eigen::VectorXd;

inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-14;
inline constexpr double kBlowUpThreshold = 1e12;

/// One bracket coefficient {v_a, v_b} = value * v_c.
struct BracketEntry {
  int a;
  int b;
  int c;
  double value;
};

/// Dense structure constants f[a][b][c] of a Lie bracket {v_a, v_b} = f_ab^c v_c.
class StructureConstants {
 public:
  /// Abelian algebra of dimension `dim` (all constants zero).
  explicit StructureConstants(int dim);

  /// Dense row-major data indexed [a][b][c]; must already be antisymmetric in (a, b).
  StructureConstants(int dim, std::vector<double> dense);

  /// Builds from a sparse list, applying f[b][a][c] = -f[a][b][c] automatically.
  /// Conflicting duplicates or nonzero diagonal entries are rejected.
  static StructureConstants from_entries(int dim, std::span<const BracketEntry> entries);

  int dim() const noexcept { return dim_; }

  double operator()(int a, int b, int c) const noexcept {
    return f_[static_cast<std::size_t>((a * dim_ + b) * dim_ + c)];
  }

  const std::vector<double>& dense() const noexcept { return f_; }

  /// max |f[a][b][c] + f[b][a][c]|
  double antisymmetry_violation() const;

 private:
  int dim_;
  std::vector<double> f_;
};

enum class Definiteness { Positive, NonNegative };

/// A symmetric n x n tensor with a definiteness requirement checked on construction.
template <class Tag, Definiteness kDef>
class SymmetricTensor {
 public:
  explicit SymmetricTensor(Matrix m) : m_(std::move(m)) { validate(); }

  static SymmetricTensor identity(int n, double scale = 1.0) {
    return SymmetricTensor(scale * Matrix::Identity(n, n));
  }

  static SymmetricTensor diagonal(const Vector& d) { return SymmetricTensor(Matrix(d.asDiagonal())); }

  const Matrix& matrix() const noexcept { return m_; }
  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  double operator()(int a, int b) const { return m_(a, b); }

 private:
  void validate() const {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw DimensionError(std::string(Tag::name) + ": matrix must be square and non-empty");
    }
    if (!m_.allFinite()) throw ConfigError(std::string(Tag::name) + ": non-finite entry");
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * std::max(1.0, m_.cwiseAbs().maxCoeff())) {
      throw ConfigError(std::string(Tag::name) + ": matrix is not symmetric");
    }
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(m_, Eigen::EigenvaluesOnly).eigenvalues();
    const double smallest = eig.minCoeff();
    if constexpr (kDef == Definiteness::Positive) {
      if (!(smallest > 0.0)) throw ConfigError(std::string(Tag::name) + ": matrix is not positive definite");
    } else {
      if (smallest < -kSymmetryTolerance) {
        throw ConfigError(std::string(Tag::name) + ": matrix is not positive semidefinite");
      }
    }
  }

  Matrix m_;
};

struct MetricTag {
  static constexpr const char* name = "kinetic metric G";
};
struct DissipationTag {
  static constexpr const char* name = "dissipation tensor Gamma";
};
struct NoiseTag {
  static constexpr const char* name = "noise covariance D";
};

/// G^{ab}, with E = 1/2 G^{ab} v_a v_b.
using KineticMetric = SymmetricTensor<MetricTag, Definiteness::Positive>;
using DissipationTensor = SymmetricTensor<DissipationTag, Definiteness::NonNegative>;
using NoiseCovariance = SymmetricTensor<NoiseTag, Definiteness::NonNegative>;

/// Invariant measure of the ideal flow, restricted to power laws
/// mu(v) = scale * prod_a |v_a|^{p_a}.
class InvariantMeasure {
 public:
  enum class Kind { Constant, HalfPlane, Custom };

  static InvariantMeasure constant(int dim);
  /// mu = 1 / v1 on the two-dimensional affine algebra.
  static InvariantMeasure half_plane();
  static InvariantMeasure power_law(std::vector<double> exponents, double scale = 1.0);

  Kind kind() const noexcept { return kind_; }
  int dim() const noexcept { return static_cast<int>(exponents_.size()); }
  const std::vector<double>& exponents() const noexcept { return exponents_; }
  double scale() const noexcept { return scale_; }
  bool is_constant() const noexcept;

  double operator()(const VelocityState& v) const;

  /// Coordinates carrying a negative exponent (mu singular where they vanish).
  std::vector<int> singular_coordinates() const;

  std::string describe() const;

 private:
  InvariantMeasure(Kind kind, std::vector<double> exponents, double scale);

  Kind kind_;
  std::vector<double> exponents_;
  double scale_;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x > lo && x < hi; }
  bool bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }
};

/// Per-coordinate open box; unbounded by default.
using Domain = std::vector<Interval>;

/// One complete experiment definition.
class ModelSpec {
 public:
  ModelSpec(std::string name, StructureConstants algebra, KineticMetric metric, DissipationTensor dissipation,
            NoiseCovariance noise, InvariantMeasure measure, Domain domain = {});

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return algebra_.dim(); }
  const StructureConstants& algebra() const noexcept { return algebra_; }
  const KineticMetric& metric() const noexcept { return metric_; }
  const DissipationTensor& dissipation() const noexcept { return dissipation_; }
  const NoiseCovariance& noise() const noexcept { return noise_; }
  const InvariantMeasure& measure() const noexcept { return measure_; }
  const Domain& domain() const noexcept { return domain_; }

  /// Gamma * G, the linear relaxation operator in dv/dt = -Gamma G v + ...
  const Matrix& relaxation() const noexcept { return relaxation_; }

  bool in_domain(const VelocityState& v) const;

  ModelSpec with_name(std::string name) const;
  ModelSpec with_metric(KineticMetric metric) const;
  ModelSpec with_dissipation(DissipationTensor dissipation) const;
  ModelSpec with_noise(NoiseCovariance noise) const;
  ModelSpec with_measure(InvariantMeasure measure) const;

 private:
  std::string name_;
  StructureConstants algebra_;
  KineticMetric metric_;
  DissipationTensor dissipation_;
  NoiseCovariance noise_;
  InvariantMeasure measure_;
  Domain domain_;
  Matrix relaxation_;
};

/// Maximum absolute violation of the Jacobi identity over all (a, b, c, d).
double jacobi_residual(const StructureConstants& f);

/// t_b = sum_a f[a][b][a]; zero iff the algebra is unimodular.
Vector unimodularity_trace(const StructureConstants& f);

bool is_unimodular(const StructureConstants& f, double tol = kJacobiTolerance);

double energy(const ModelSpec& model, const VelocityState& v);

/// V_a = f[a][b][c] G^{bd} v_c v_d
VelocityState geodesic_drift(const ModelSpec& model, const VelocityState& v);

/// geodesic_drift(v) - Gamma G v
VelocityState dissipative_drift(const ModelSpec& model, const VelocityState& v);

/// Non-allocating variants used by the inner loops of the integrators.
void geodesic_drift_into(const ModelSpec& model, const VelocityState& v, VelocityState& out);
void dissipative_drift_into(const ModelSpec& model, const VelocityState& v, VelocityState& out);

/// Central-difference estimate of sum_a d(mu V_a)/dv_a at v with step h.
/// Throws SingularityError when v lies within h of a singular coordinate of mu.
double measure_divergence_residual(const ModelSpec& model, const VelocityState& v, double h);

// Built-in models: "so3", "halfplane", "abelian1", "heisenberg".
std::vector<std::string> builtin_model_names();
bool is_builtin_model(std::string_view name);
ModelSpec builtin_model(std::string_view name);

StructureConstants so3_algebra();
/// Affine algebra stored with f[0][1][1] = -1 so the drift reads dv0/dt = -v1^2, dv1/dt = v0 v1.
StructureConstants half_plane_algebra();
StructureConstants heisenberg_algebra();

void require_dim(const ModelSpec& model, const VelocityState& v, std::string_view what);

}  // namespace eaf
