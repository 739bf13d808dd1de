#include "eaf/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eaf {

namespace {

std::size_t cube(int n) { return static_cast<std::size_t>(n) * n * n; }

void check_index(int i, int n) {
  if (i < 0 || i >= n) throw DimensionError("structure constant index " + std::to_string(i) + " out of range");
}

}  // namespace

StructureConstants::StructureConstants(int dim) : dim_(dim) {
  if (dim <= 0) throw DimensionError("algebra dimension must be positive");
  f_.assign(cube(dim), 0.0);
}

StructureConstants::StructureConstants(int dim, std::vector<double> dense) : dim_(dim), f_(std::move(dense)) {
  if (dim <= 0) throw DimensionError("algebra dimension must be positive");
  if (f_.size() != cube(dim)) throw DimensionError("structure constants must have dim^3 entries");
  for (double x : f_) {
    if (!std::isfinite(x)) throw ConfigError("non-finite structure constant");
  }
  if (antisymmetry_violation() > 0.0) throw ConfigError("structure constants are not antisymmetric in (a, b)");
}

StructureConstants StructureConstants::from_entries(int dim, std::span<const BracketEntry> entries) {
  StructureConstants out(dim);
  std::vector<bool> assigned(out.f_.size(), false);
  auto put = [&](int a, int b, int c, double value) {
    const auto idx = static_cast<std::size_t>((a * dim + b) * dim + c);
    if (assigned[idx] && out.f_[idx] != value) {
      throw ConfigError("conflicting structure constant for (" + std::to_string(a) + "," + std::to_string(b) + "," +
                        std::to_string(c) + ")");
    }
    assigned[idx] = true;
    out.f_[idx] = value;
  };
  for (const auto& e : entries) {
    check_index(e.a, dim);
    check_index(e.b, dim);
    check_index(e.c, dim);
    if (!std::isfinite(e.value)) throw ConfigError("non-finite structure constant");
    if (e.a == e.b) {
      if (e.value != 0.0) throw ConfigError("f[a][a][c] must vanish by antisymmetry");
      continue;
    }
    put(e.a, e.b, e.c, e.value);
    put(e.b, e.a, e.c, -e.value);
  }
  return out;
}

double StructureConstants::antisymmetry_violation() const {
  double worst = 0.0;
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b)
      for (int c = 0; c < dim_; ++c) worst = std::max(worst, std::abs((*this)(a, b, c) + (*this)(b, a, c)));
  return worst;
}

// ---------------------------------------------------------------------------
// InvariantMeasure

InvariantMeasure::InvariantMeasure(Kind kind, std::vector<double> exponents, double scale)
    : kind_(kind), exponents_(std::move(exponents)), scale_(scale) {
  if (exponents_.empty()) throw DimensionError("measure dimension must be positive");
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) throw ConfigError("measure scale must be positive and finite");
  for (double p : exponents_) {
    if (!std::isfinite(p)) throw ConfigError("non-finite measure exponent");
  }
}

InvariantMeasure InvariantMeasure::constant(int dim) {
  if (dim <= 0) throw DimensionError("measure dimension must be positive");
  return InvariantMeasure(Kind::Constant, std::vector<double>(static_cast<std::size_t>(dim), 0.0), 1.0);
}

InvariantMeasure InvariantMeasure::half_plane() { return InvariantMeasure(Kind::HalfPlane, {0.0, -1.0}, 1.0); }

InvariantMeasure InvariantMeasure::power_law(std::vector<double> exponents, double scale) {
  const bool trivial = std::all_of(exponents.begin(), exponents.end(), [](double p) { return p == 0.0; });
  if (trivial && scale == 1.0) return constant(static_cast<int>(exponents.size()));
  return InvariantMeasure(Kind::Custom, std::move(exponents), scale);
}

bool InvariantMeasure::is_constant() const noexcept { return kind_ == Kind::Constant; }

double InvariantMeasure::operator()(const VelocityState& v) const {
  if (v.size() != dim()) throw DimensionError("measure evaluated on a state of the wrong dimension");
  double mu = scale_;
  for (int a = 0; a < dim(); ++a) {
    const double p = exponents_[static_cast<std::size_t>(a)];
    if (p != 0.0) mu *= std::pow(std::abs(v[a]), p);
  }
  return mu;
}

std::vector<int> InvariantMeasure::singular_coordinates() const {
  std::vector<int> out;
  for (int a = 0; a < dim(); ++a) {
    if (exponents_[static_cast<std::size_t>(a)] < 0.0) out.push_back(a);
  }
  return out;
}

std::string InvariantMeasure::describe() const {
  switch (kind_) {
    case Kind::Constant:
      return "constant";
    case Kind::HalfPlane:
      return "halfplane";
    case Kind::Custom:
      break;
  }
  std::ostringstream os;
  os.precision(17);
  os << "power(scale=" << scale_ << ";p=";
  for (std::size_t i = 0; i < exponents_.size(); ++i) os << (i ? "," : "") << exponents_[i];
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// ModelSpec

ModelSpec::ModelSpec(std::string name, StructureConstants algebra, KineticMetric metric,
                     DissipationTensor dissipation, NoiseCovariance noise, InvariantMeasure measure, Domain domain)
    : name_(std::move(name)),
      algebra_(std::move(algebra)),
      metric_(std::move(metric)),
      dissipation_(std::move(dissipation)),
      noise_(std::move(noise)),
      measure_(std::move(measure)),
      domain_(std::move(domain)) {
  const int n = algebra_.dim();
  if (metric_.dim() != n || dissipation_.dim() != n || noise_.dim() != n || measure_.dim() != n) {
    throw DimensionError("model '" + name_ + "': component dimensions disagree");
  }
  if (domain_.empty()) domain_.assign(static_cast<std::size_t>(n), Interval{});
  if (static_cast<int>(domain_.size()) != n) throw DimensionError("model '" + name_ + "': domain dimension mismatch");
  for (const auto& iv : domain_) {
    if (!(iv.lo < iv.hi)) throw ConfigError("model '" + name_ + "': domain interval with min >= max");
  }
  if (jacobi_residual(algebra_) > kJacobiTolerance) {
    throw ConfigError("model '" + name_ + "': structure constants violate the Jacobi identity");
  }
  relaxation_ = dissipation_.matrix() * metric_.matrix();
}

bool ModelSpec::in_domain(const VelocityState& v) const {
  if (v.size() != dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (!domain_[static_cast<std::size_t>(a)].contains(v[a])) return false;
  }
  return true;
}

ModelSpec ModelSpec::with_name(std::string name) const {
  ModelSpec out = *this;
  out.name_ = std::move(name);
  return out;
}

ModelSpec ModelSpec::with_metric(KineticMetric metric) const {
  return ModelSpec(name_, algebra_, std::move(metric), dissipation_, noise_, measure_, domain_);
}

ModelSpec ModelSpec::with_dissipation(DissipationTensor dissipation) const {
  return ModelSpec(name_, algebra_, metric_, std::move(dissipation), noise_, measure_, domain_);
}

ModelSpec ModelSpec::with_noise(NoiseCovariance noise) const {
  return ModelSpec(name_, algebra_, metric_, dissipation_, std::move(noise), measure_, domain_);
}

ModelSpec ModelSpec::with_measure(InvariantMeasure measure) const {
  return ModelSpec(name_, algebra_, metric_, dissipation_, noise_, std::move(measure), domain_);
}

void require_dim(const ModelSpec& model, const VelocityState& v, std::string_view what) {
  if (v.size() != model.dim()) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(model.dim()) + ", got " +
                         std::to_string(v.size()));
  }
}

// ---------------------------------------------------------------------------
// Operations

double jacobi_residual(const StructureConstants& f) {
  const int n = f.dim();
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int e = 0; e < n; ++e) {
            s += f(a, b, e) * f(e, c, d) + f(b, c, e) * f(e, a, d) + f(c, a, e) * f(e, b, d);
          }
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

Vector unimodularity_trace(const StructureConstants& f) {
  const int n = f.dim();
  Vector t = Vector::Zero(n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) t[b] += f(a, b, a);
  return t;
}

bool is_unimodular(const StructureConstants& f, double tol) {
  return unimodularity_trace(f).cwiseAbs().maxCoeff() <= tol;
}

double energy(const ModelSpec& model, const VelocityState& v) {
  require_dim(model, v, "energy");
  return 0.5 * v.dot(model.metric().matrix() * v);
}

void geodesic_drift_into(const ModelSpec& model, const VelocityState& v, VelocityState& out) {
  const int n = model.dim();
  const auto& f = model.algebra();
  const Vector gv = model.metric().matrix() * v;
  out.setZero(n);
  for (int a = 0; a < n; ++a) {
    double s = 0.0;
    for (int b = 0; b < n; ++b) {
      if (gv[b] == 0.0) continue;
      double inner = 0.0;
      for (int c = 0; c < n; ++c) inner += f(a, b, c) * v[c];
      s += inner * gv[b];
    }
    out[a] = s;
  }
}

void dissipative_drift_into(const ModelSpec& model, const VelocityState& v, VelocityState& out) {
  geodesic_drift_into(model, v, out);
  out.noalias() -= model.relaxation() * v;
}

VelocityState geodesic_drift(const ModelSpec& model, const VelocityState& v) {
  require_dim(model, v, "geodesic_drift");
  VelocityState out(model.dim());
  geodesic_drift_into(model, v, out);
  return out;
}

VelocityState dissipative_drift(const ModelSpec& model, const VelocityState& v) {
  require_dim(model, v, "dissipative_drift");
  VelocityState out(model.dim());
  dissipative_drift_into(model, v, out);
  return out;
}

double measure_divergence_residual(const ModelSpec& model, const VelocityState& v, double h) {
  require_dim(model, v, "measure_divergence_residual");
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  const auto& mu = model.measure();
  for (int a : mu.singular_coordinates()) {
    if (std::abs(v[a]) <= h) {
      throw SingularityError("state within h of a singularity of the invariant measure (coordinate " +
                             std::to_string(a) + ")");
    }
  }
  double div = 0.0;
  VelocityState p = v;
  for (int a = 0; a < model.dim(); ++a) {
    p[a] = v[a] + h;
    const double plus = mu(p) * geodesic_drift(model, p)[a];
    p[a] = v[a] - h;
    const double minus = mu(p) * geodesic_drift(model, p)[a];
    p[a] = v[a];
    div += (plus - minus) / (2.0 * h);
  }
  return div;
}

// ---------------------------------------------------------------------------
// Built-ins

StructureConstants so3_algebra() {
  const BracketEntry entries[] = {{0, 1, 2, 1.0}, {1, 2, 0, 1.0}, {2, 0, 1, 1.0}};
  return StructureConstants::from_entries(3, entries);
}

StructureConstants half_plane_algebra() {
  const BracketEntry entries[] = {{0, 1, 1, -1.0}};
  return StructureConstants::from_entries(2, entries);
}

StructureConstants heisenberg_algebra() {
  const BracketEntry entries[] = {{0, 1, 2, 1.0}};
  return StructureConstants::from_entries(3, entries);
}

std::vector<std::string> builtin_model_names() { return {"so3", "halfplane", "abelian1", "heisenberg"}; }

bool is_builtin_model(std::string_view name) {
  const auto names = builtin_model_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ModelSpec builtin_model(std::string_view name) {
  if (name == "so3") {
    return ModelSpec("so3", so3_algebra(), KineticMetric::diagonal(Eigen::Vector3d(1.0, 2.0, 3.0)),
                     DissipationTensor::identity(3), NoiseCovariance::identity(3), InvariantMeasure::constant(3));
  }
  if (name == "halfplane") {
    const double inf = std::numeric_limits<double>::infinity();
    return ModelSpec("halfplane", half_plane_algebra(), KineticMetric::identity(2), DissipationTensor::identity(2),
                     NoiseCovariance::identity(2, 0.5), InvariantMeasure::half_plane(),
                     Domain{Interval{-inf, inf}, Interval{0.0, inf}});
  }
  if (name == "abelian1") {
    return ModelSpec("abelian1", StructureConstants(1), KineticMetric::identity(1), DissipationTensor::identity(1),
                     NoiseCovariance::identity(1), InvariantMeasure::constant(1));
  }
  if (name == "heisenberg") {
    return ModelSpec("heisenberg", heisenberg_algebra(), KineticMetric::identity(3), DissipationTensor::identity(3),
                     NoiseCovariance::identity(3), InvariantMeasure::constant(3));
  }
  throw ConfigError("unknown built-in model '" + std::string(name) + "'");
}

}  // namespace eaf
