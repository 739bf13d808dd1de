#include "eaf/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "eaf/error.hpp"

namespace eaf {

namespace {

// Numerator terms of the principal-plane curvature whose "first" index is `a`.
struct Terms {
  double split, cross, square;
  double numerator() const { return split + cross - square; }
  double scale() const { return std::max({std::abs(split), std::abs(cross), std::abs(square)}); }
};

Terms terms(double a, double b, double c) { return {(b - c) * (b - c), 2.0 * a * (b + c), 3.0 * a * a}; }

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

CurvatureReport sectional_curvature(double G1, double G2, double G3) {
  require_positive(G1, "G1");
  require_positive(G2, "G2");
  require_positive(G3, "G3");
  const double denom = 4.0 * G1 * G2 * G3;
  CurvatureReport k;
  k.K23 = terms(G1, G2, G3).numerator() / denom;
  k.K31 = terms(G2, G3, G1).numerator() / denom;
  k.K12 = terms(G3, G1, G2).numerator() / denom;
  return k;
}

std::string_view to_string(CoinStability c) {
  switch (c) {
    case CoinStability::UnstableInPlane:
      return "unstable_in_plane";
    case CoinStability::Marginal:
      return "marginal";
    case CoinStability::StableInPlane:
      return "stable_in_plane";
  }
  return "unknown";
}

CoinReport coin_stability(double r, double h, double m) {
  require_positive(r, "radius");
  require_positive(h, "height");
  require_positive(m, "mass");
  CoinReport out;
  out.I1 = m * (3.0 * r * r + h * h) / 12.0;
  out.I3 = m * r * r / 2.0;
  out.curvature = sectional_curvature(out.I1, out.I1, out.I3);

  const Terms t = terms(out.I3, out.I1, out.I1);
  const double num = t.numerator();
  if (std::abs(num) <= 1e-12 * t.scale()) {
    out.classification = CoinStability::Marginal;
  } else {
    out.classification = num < 0.0 ? CoinStability::UnstableInPlane : CoinStability::StableInPlane;
  }
  return out;
}

double coin_transition_height(double r, double m, double h_lo, double h_hi, double tol) {
  require_positive(h_lo, "h_lo");
  if (!(h_hi > h_lo)) throw ConfigError("bisection bracket must satisfy h_lo < h_hi");
  auto k12 = [r, m](double h) { return coin_stability(r, h, m).curvature.K12; };
  double f_lo = k12(h_lo);
  const double f_hi = k12(h_hi);
  if (f_lo == 0.0) return h_lo;
  if (f_hi == 0.0) return h_hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) throw ConvergenceError("K12 does not change sign on the bisection bracket");
  while (h_hi - h_lo > tol) {
    const double mid = 0.5 * (h_lo + h_hi);
    const double f_mid = k12(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      h_lo = mid;
      f_lo = f_mid;
    } else {
      h_hi = mid;
    }
  }
  return 0.5 * (h_lo + h_hi);
}

}  // namespace eaf
