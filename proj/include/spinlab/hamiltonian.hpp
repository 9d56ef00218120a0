// The perturbed spherical p-spin Hamiltonian.
//
// A Disorder instance holds a dense rank-p tensor of iid standard normal
// couplings J_{i1..ip} over n spins. The energy minimized by descent is
//
//   E(sigma) = -J * n^{-(p-1)/2} * sum_{i1..ip} J_{i1..ip} sigma_{i1}...sigma_{ip}
//              - h . sigma,
//
// with h an optional external field of per-component strength nu. Spins live
// on the sphere |sigma|^2 = n, but energy/gradient/hessian are plain ambient
// functions so finite-difference probes off the sphere stay valid.
//
// Alongside the raw tensor the constructor stores its full symmetrization,
// which turns all derivatives into repeated contractions of one tensor:
// gradient = p * contract^{p-1}, hessian = p(p-1) * contract^{p-2}, both
// times the coupling prefactor. The raw tensor remains the ground truth the
// brute-force test oracles sum over.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace spinlab {

inline constexpr std::uint64_t kDefaultTensorBudget = 100000000;

struct SpinConfiguration {
  Eigen::VectorXd values;

  Eigen::Index n() const { return values.size(); }
};

// |values|^2 within rel_tol * n of n.
bool on_sphere(const SpinConfiguration& sigma, double rel_tol = 1e-8);

class ExternalField {
 public:
  // nu == 0 yields an exactly zero vector without consuming the stream.
  static ExternalField sample(Eigen::Index n, double nu, std::uint64_t seed);
  static ExternalField zero(Eigen::Index n);

  const Eigen::VectorXd& values() const { return values_; }
  double nu() const { return nu_; }
  std::uint64_t seed() const { return seed_; }

 private:
  ExternalField() = default;
  Eigen::VectorXd values_;
  double nu_ = 0.0;
  std::uint64_t seed_ = 0;
};

class Disorder {
 public:
  // Throws std::invalid_argument for n < 2, p < 2, or J < 0;
  // capacity_error when n^p exceeds budget (count of tensor entries; the
  // symmetrized copy doubles the actual allocation).
  static Disorder sample(int n, int p, double J, std::uint64_t seed,
                         std::uint64_t budget = kDefaultTensorBudget);

  int n() const { return n_; }
  int p() const { return p_; }
  double J() const { return J_; }
  std::uint64_t seed() const { return seed_; }

  // Raw iid draws, flat in row-major tuple order: index
  // ((i1*n + i2)*n + ...)*n + ip.
  const std::vector<double>& couplings() const { return couplings_; }

  // Average of couplings over all index permutations, same layout.
  const std::vector<double>& symmetrized() const { return symmetrized_; }

  // -J * n^{-(p-1)/2}; multiplies the coupling polynomial in the energy.
  double coupling_prefactor() const { return prefactor_; }

  // Writes the raw tensor as little-endian 64-bit floats (debug aid).
  void dump_couplings(const std::string& path) const;

 private:
  Disorder() = default;
  int n_ = 0;
  int p_ = 0;
  double J_ = 0.0;
  std::uint64_t seed_ = 0;
  double prefactor_ = 0.0;
  std::vector<double> couplings_;
  std::vector<double> symmetrized_;
};

double energy(const Disorder& d, const SpinConfiguration& sigma,
              const ExternalField& f);

Eigen::VectorXd gradient(const Disorder& d, const SpinConfiguration& sigma,
                         const ExternalField& f);

// Second derivative of the energy; independent of the field.
Eigen::MatrixXd hessian(const Disorder& d, const SpinConfiguration& sigma,
                        const ExternalField& f);

}  // namespace spinlab
