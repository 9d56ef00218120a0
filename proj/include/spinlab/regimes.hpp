// Closed-form regime calculus for the perturbed p-spin landscape.
//
// The scalar order parameter
//
//   B = (J^2 p(p-2) - nu^2) / (J^2 p^2 + nu^2)   in (-1, 1 - 2/p]
//
// controls how many critical points the landscape carries. B crosses zero at
// the critical field strength nu_c = J sqrt(p(p-2)): above it the landscape
// trivializes to one minimum/maximum pair, below it the count grows
// exponentially in n, and a band |B| = O(1/n) around zero interpolates
// polynomially. Two finer parametrizations, B = -tau/n and
// B = -kappa n^{-1/3}/2 up to scaling, resolve the transition; nu_for_tau and
// nu_for_kappa invert them to field strengths used by the annealing schedule.
#pragma once

#include <string>

namespace spinlab {

enum class RegimeLabel { Exponential, Polynomial, Trivial };

std::string to_string(RegimeLabel label);

// Which case of the critical-point count applies. The cases overlap in order
// notation, so the caller states its asymptotic assumption explicitly.
enum class CountBranch {
  TrivializedField,  // B below the polynomial band: exactly a min/max pair
  PolynomialBand,    // B = -tau/n with tau of order one
  ExponentialBulk,   // B > 0 bounded away from zero
};

// Throws std::invalid_argument when J and nu are both zero (0/0).
double order_parameter(double J, int p, double nu);

// J sqrt(p(p-2)); zero at p = 2.
double critical_field(double J, int p);

// Expected total number of critical points for the stated branch.
// TrivializedField ignores the arguments; PolynomialBand needs tau > 0 and
// uses (2n/sqrt(pi)) tau^{-3/2}; ExponentialBulk needs B in (0, 1) and uses
// 4 sqrt(n) sqrt((1+B)/(pi B)) exp((n/2) log((1+B)/(1-B))).
double expected_critical_points(CountBranch branch, double B, double n,
                                double tau);

// Edge-scaled count near the transition, valid for |tau| >= 1:
// n (2/sqrt(pi)) tau^{-3/2} above, n (2/sqrt(pi |tau|)) 2 e^{|tau|} below.
double expected_critical_points_edge(double tau, double n);

// Expected number of local minima in kappa edge scaling, valid for
// |kappa| >= 1: 1 above, exp(kappa^2/24 + (4 sqrt(2)/3)|kappa|^{3/2}) below.
// The below-branch is known only up to an unspecified multiplicative
// constant, which is NOT included.
double expected_minima_edge(double kappa);

// Field strength realizing B = -tau/n: nu_c (1 + 2 tau/n)^{1/2}.
// Requires tau > -n/2.
double nu_for_tau(double nu_c, double tau, double n);

// Field strength in kappa scaling: nu_c (1 + kappa log(n)/n^{1/3})^{1/2}.
// Requires the parenthesized factor to be positive.
double nu_for_kappa(double nu_c, double kappa, double n);

// Polynomial band |B| <= c/n (weak inequality), Exponential above,
// Trivial below. Requires n >= 2 and c > 0.
RegimeLabel classify_regime(double B, double n, double band_constant = 1.0);

}  // namespace spinlab
