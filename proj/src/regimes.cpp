#include "spinlab/regimes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spinlab {

namespace {
constexpr double kSqrtPi = 1.7724538509055160273;  // sqrt(std::numbers::pi)
}

std::string to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Exponential: return "exponential";
    case RegimeLabel::Polynomial: return "polynomial";
    case RegimeLabel::Trivial: return "trivial";
  }
  return "?";
}

double order_parameter(double J, int p, double nu) {
  if (p < 2) throw std::invalid_argument("order parameter needs p >= 2");
  if (J == 0.0 && nu == 0.0) {
    throw std::invalid_argument("order parameter undefined at J = nu = 0");
  }
  const double j2 = J * J;
  const double pd = static_cast<double>(p);
  return (j2 * pd * (pd - 2.0) - nu * nu) / (j2 * pd * pd + nu * nu);
}

double critical_field(double J, int p) {
  if (p < 2) throw std::invalid_argument("critical field needs p >= 2");
  const double pd = static_cast<double>(p);
  return J * std::sqrt(pd * (pd - 2.0));
}

double expected_critical_points(CountBranch branch, double B, double n,
                                double tau) {
  switch (branch) {
    case CountBranch::TrivializedField:
      return 2.0;
    case CountBranch::PolynomialBand:
      if (tau <= 0.0) {
        throw std::invalid_argument("polynomial-band count needs tau > 0");
      }
      return (2.0 * n / kSqrtPi) * std::pow(tau, -1.5);
    case CountBranch::ExponentialBulk:
      if (B <= 0.0 || B >= 1.0) {
        throw std::invalid_argument("bulk count needs B in (0, 1)");
      }
      return 4.0 * std::sqrt(n) *
             std::sqrt((1.0 + B) / (std::numbers::pi * B)) *
             std::exp(0.5 * n * std::log((1.0 + B) / (1.0 - B)));
  }
  throw std::invalid_argument("unknown branch");
}

double expected_critical_points_edge(double tau, double n) {
  if (std::abs(tau) < 1.0) {
    throw std::invalid_argument(
        "edge count is defined for |tau| >= 1; got tau inside the window");
  }
  if (tau >= 1.0) {
    return n * (2.0 / kSqrtPi) * std::pow(tau, -1.5);
  }
  const double a = std::abs(tau);
  return n * (2.0 / std::sqrt(std::numbers::pi * a)) * 2.0 * std::exp(a);
}

double expected_minima_edge(double kappa) {
  if (std::abs(kappa) < 1.0) {
    throw std::invalid_argument("minima edge count needs |kappa| >= 1");
  }
  if (kappa >= 1.0) return 1.0;
  const double a = std::abs(kappa);
  return std::exp(kappa * kappa / 24.0 +
                  (4.0 * std::numbers::sqrt2 / 3.0) * std::pow(a, 1.5));
}

double nu_for_tau(double nu_c, double tau, double n) {
  const double arg = 1.0 + 2.0 * tau / n;
  if (arg <= 0.0) {
    throw std::invalid_argument("nu_for_tau needs tau > -n/2");
  }
  return nu_c * std::sqrt(arg);
}

double nu_for_kappa(double nu_c, double kappa, double n) {
  const double arg = 1.0 + kappa * std::log(n) / std::cbrt(n);
  if (arg <= 0.0) {
    throw std::invalid_argument(
        "nu_for_kappa needs 1 + kappa log(n)/n^(1/3) > 0");
  }
  return nu_c * std::sqrt(arg);
}

RegimeLabel classify_regime(double B, double n, double band_constant) {
  if (n < 2.0) throw std::invalid_argument("classification needs n >= 2");
  if (band_constant <= 0.0) {
    throw std::invalid_argument("band constant must be positive");
  }
  const double band = band_constant / n;
  if (std::abs(B) <= band) return RegimeLabel::Polynomial;
  return B > 0.0 ? RegimeLabel::Exponential : RegimeLabel::Trivial;
}

}  // namespace spinlab
