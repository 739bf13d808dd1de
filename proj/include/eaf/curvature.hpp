#pragma once

#include <string_view>

namespace eaf {

/// Sectional curvatures of SO(3) with a diagonal left-invariant metric, in the
/// three principal planes.
struct CurvatureReport {
  double K12 = 0.0;
  double K23 = 0.0;
  double K31 = 0.0;
};

/// Inputs are the diagonal metric coefficients, i.e. the principal moments of
/// inertia I_i (not the inverse moments appearing in the energy). With that
/// reading
///   K23 = ((G2 - G3)^2 + 2 G1 (G2 + G3) - 3 G1^2) / (4 G1 G2 G3)
/// and K31, K12 follow by the cyclic shift 1 -> 2 -> 3 -> 1.
CurvatureReport sectional_curvature(double G1, double G2, double G3);

enum class CoinStability { UnstableInPlane, Marginal, StableInPlane };

std::string_view to_string(CoinStability c);

struct CoinReport {
  double I1 = 0.0;  // = I2, about a diameter
  double I3 = 0.0;  // about the symmetry axis
  CurvatureReport curvature;
  CoinStability classification = CoinStability::Marginal;
};

/// Solid cylinder of radius r, height h, mass m: I1 = I2 = m (3 r^2 + h^2) / 12,
/// I3 = m r^2 / 2. Classified by the sign of K12, the section spanned by two
/// axes in the plane of symmetry.
CoinReport coin_stability(double r, double h, double m);

/// Height at which K12 changes sign for fixed r and m, located by bisection on
/// [h_lo, h_hi] to absolute tolerance `tol`.
double coin_transition_height(double r, double m, double h_lo, double h_hi, double tol = 1e-10);

}  // namespace eaf
