#include "spinlab/hamiltonian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

std::uint64_t checked_entry_count(int n, int p, std::uint64_t budget) {
  std::uint64_t count = 1;
  for (int k = 0; k < p; ++k) {
    count *= static_cast<std::uint64_t>(n);
    if (count > budget) {
      throw capacity_error("tensor of " + std::to_string(n) + "^" +
                           std::to_string(p) + " entries exceeds budget " +
                           std::to_string(budget));
    }
  }
  return count;
}

// Contracts the trailing index with sigma `times` times. The flat tensor is
// viewed as a row-major [len/n x n] matrix at every step, so the last index
// is always the contracted one.
Eigen::VectorXd contract_tail(const double* data, std::uint64_t len, int n,
                              const Eigen::VectorXd& sigma, int times) {
  if (times == 0) {
    return Eigen::Map<const Eigen::VectorXd>(data, static_cast<Eigen::Index>(len));
  }
  Eigen::VectorXd cur =
      RowMajorMap(data, static_cast<Eigen::Index>(len / n), n) * sigma;
  for (int k = 1; k < times; ++k) {
    const Eigen::Index rows = cur.size() / n;
    Eigen::VectorXd next =
        RowMajorMap(cur.data(), rows, n) * sigma;
    cur.swap(next);
  }
  return cur;
}

void check_dims(const Disorder& d, const SpinConfiguration& sigma,
                const ExternalField& f) {
  if (sigma.n() != d.n()) {
    throw std::invalid_argument("spin configuration has length " +
                                std::to_string(sigma.n()) + ", disorder has n=" +
                                std::to_string(d.n()));
  }
  if (f.values().size() != d.n()) {
    throw std::invalid_argument("external field has length " +
                                std::to_string(f.values().size()) +
                                ", disorder has n=" + std::to_string(d.n()));
  }
}

}  // namespace

bool on_sphere(const SpinConfiguration& sigma, double rel_tol) {
  const double n = static_cast<double>(sigma.n());
  return std::abs(sigma.values.squaredNorm() - n) <= rel_tol * n;
}

ExternalField ExternalField::sample(Eigen::Index n, double nu,
                                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("field length must be positive");
  if (nu < 0.0) throw std::invalid_argument("field strength must be >= 0");
  ExternalField f;
  f.nu_ = nu;
  f.seed_ = seed;
  f.values_.setZero(n);
  if (nu > 0.0) {
    GaussianStream g(seed);
    g.fill(f.values_.data(), static_cast<std::size_t>(n));
    f.values_ *= nu;
  }
  return f;
}

ExternalField ExternalField::zero(Eigen::Index n) {
  return sample(n, 0.0, 0);
}

Disorder Disorder::sample(int n, int p, double J, std::uint64_t seed,
                          std::uint64_t budget) {
  if (n < 2) throw std::invalid_argument("disorder needs n >= 2");
  if (p < 2) throw std::invalid_argument("disorder needs p >= 2");
  if (J < 0.0) throw std::invalid_argument("coupling scale must be >= 0");
  const std::uint64_t count = checked_entry_count(n, p, budget);

  Disorder d;
  d.n_ = n;
  d.p_ = p;
  d.J_ = J;
  d.seed_ = seed;
  d.prefactor_ = -J * std::pow(static_cast<double>(n), -0.5 * (p - 1));
  d.couplings_.resize(count);
  GaussianStream g(seed);
  g.fill(d.couplings_.data(), count);

  // Symmetrize: every tuple gets the mean of its orbit under index
  // permutations. Orbits are enumerated once from each sorted tuple.
  d.symmetrized_.assign(count, 0.0);
  std::vector<int> tuple(p, 0);
  const auto flat = [n, p](const std::vector<int>& idx) {
    std::uint64_t r = 0;
    for (int k = 0; k < p; ++k) r = r * n + idx[k];
    return r;
  };
  while (true) {
    // tuple is sorted ascending here; walk its distinct permutations.
    std::vector<int> perm = tuple;
    double sum = 0.0;
    std::uint64_t orbit = 0;
    do {
      sum += d.couplings_[flat(perm)];
      ++orbit;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double mean = sum / static_cast<double>(orbit);
    perm = tuple;
    do {
      d.symmetrized_[flat(perm)] = mean;
    } while (std::next_permutation(perm.begin(), perm.end()));

    // Advance to the next sorted tuple (nondecreasing odometer).
    int k = p - 1;
    while (k >= 0 && tuple[k] == n - 1) --k;
    if (k < 0) break;
    const int v = tuple[k] + 1;
    for (int j = k; j < p; ++j) tuple[j] = v;
  }
  return d;
}

void Disorder::dump_couplings(const std::string& path) const {
  static_assert(std::endian::native == std::endian::little,
                "raw dump assumes a little-endian host");
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw io_error("cannot open " + path + " for writing");
  const std::size_t written =
      std::fwrite(couplings_.data(), sizeof(double), couplings_.size(), fp);
  std::fclose(fp);
  if (written != couplings_.size()) {
    throw io_error("short write to " + path);
  }
}

double energy(const Disorder& d, const SpinConfiguration& sigma,
              const ExternalField& f) {
  check_dims(d, sigma, f);
  const Eigen::VectorXd full =
      contract_tail(d.symmetrized().data(), d.couplings().size(), d.n(),
                    sigma.values, d.p());
  return d.coupling_prefactor() * full(0) - f.values().dot(sigma.values);
}

Eigen::VectorXd gradient(const Disorder& d, const SpinConfiguration& sigma,
                         const ExternalField& f) {
  check_dims(d, sigma, f);
  Eigen::VectorXd g =
      contract_tail(d.symmetrized().data(), d.couplings().size(), d.n(),
                    sigma.values, d.p() - 1);
  g *= d.coupling_prefactor() * static_cast<double>(d.p());
  g -= f.values();
  return g;
}

Eigen::MatrixXd hessian(const Disorder& d, const SpinConfiguration& sigma,
                        const ExternalField& f) {
  check_dims(d, sigma, f);
  const int n = d.n();
  const int p = d.p();
  const Eigen::VectorXd flat =
      contract_tail(d.symmetrized().data(), d.couplings().size(), n,
                    sigma.values, p - 2);
  // Remaining free indices are the leading two; row-major (i1, i2) layout.
  Eigen::MatrixXd h = RowMajorMap(flat.data(), n, n);
  h *= d.coupling_prefactor() * static_cast<double>(p) *
       static_cast<double>(p - 1);
  return h;
}

}  // namespace spinlab
