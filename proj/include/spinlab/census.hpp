// Minima census: many independent descents per external-field regime,
// endpoint clustering, cosine-distance statistics, and the perturbed-minima
// shift experiment.
//
// Determinism contract: every random object is seeded by derive_seed from
// the master seed, the stream tag, and the (regime, trial) indices, so
// results do not depend on execution order. For one master seed the census
// shares a single disorder across regimes and samples one field per regime.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spinlab/descent.hpp"
#include "spinlab/hamiltonian.hpp"

namespace spinlab {

struct RegimeSpec {
  std::string label;
  double nu = 0.0;
};

struct CensusConfig {
  int trials = 2000;
  std::vector<RegimeSpec> regimes;
  // Census default caps iterations at 5e4: a trajectory still wandering
  // after that sits in a flat region and is reported as non-converged
  // rather than stalling the batch.
  DescentConfig descent{0.1, 1e-4, 50000};
  double cluster_threshold = 0.05;
  std::uint64_t master_seed = 0;
  bool compute_indices = true;
};

struct RegimeCensus {
  std::string label;
  double nu = 0.0;
  std::uint64_t field_seed = 0;
  Eigen::MatrixXd endpoints;  // n x trials, every trial's final point
  Eigen::VectorXd normalized_energy;
  std::vector<std::uint64_t> init_seeds;
  std::vector<std::uint64_t> iters;
  std::vector<char> converged;
  std::vector<int> critical_indices;  // -1 when skipped or non-converged
  std::vector<int> cluster_labels;    // -1 for non-converged trials
  int cluster_count = 0;
  double mean_cosine_distance = 0.0;
  double min_cosine_distance = 0.0;
  double max_cosine_distance = 0.0;
  // False when fewer than two converged endpoints exist; the distance
  // fields are reported as zero in that case.
  bool distance_defined = false;
  double convergence_rate = 0.0;
};

struct CensusResult {
  int n = 0;
  int p = 0;
  double J = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<RegimeCensus> regimes;
};

CensusResult run_census(const Disorder& d, const CensusConfig& cfg);

struct Clustering {
  int count = 0;
  std::vector<int> labels;  // cluster ids in first-appearance order
};

// Single linkage under cosine distance 1 - a.b/n: two endpoints share a
// cluster iff a chain of links each within eps connects them. Sign symmetry
// is NOT identified; antipodal endpoints sit at distance 2.
Clustering cluster_minima(const Eigen::MatrixXd& endpoints, double eps);

struct DistanceStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::uint64_t pairs = 0;
  bool subsampled = false;
};

// Stats of the pairwise cosine distance. All pairs are used up to 1e6;
// beyond that a deterministic subsample of 1e6 pairs drawn from seed.
// Throws std::invalid_argument for fewer than two endpoints.
DistanceStats cosine_distance_stats(const Eigen::MatrixXd& endpoints,
                                    std::uint64_t seed);

struct ShiftConfig {
  std::vector<int> n_grid{50, 100, 200};
  int p = 3;
  double J = 1.0;
  double nu = 0.5;
  int trials = 100;
  std::uint64_t seed = 0;
  DescentConfig descent{0.1, 1e-4, 50000};
  std::uint64_t tensor_budget = kDefaultTensorBudget;
};

struct ShiftTrial {
  int n = 0;
  int trial = 0;
  bool both_converged = false;
  double distance = 0.0;     // |sigma - sigma_tilde|_2
  double energy_diff = 0.0;  // |E(sigma; 0) - E(sigma_tilde; h)| / n
};

struct ShiftReport {
  std::vector<int> n_grid;
  double nu = 0.0;
  std::vector<ShiftTrial> rows;
  std::vector<int> converged_count;      // per n
  std::vector<double> median_distance;   // per n, converged trials only
  std::vector<double> median_energy_diff;
  double fraction_energy_within = 0.0;   // energy_diff <= 2 nu, pooled
  double alpha = 0.0;                    // -slope of log median dist vs log n
  bool alpha_defined = false;
};

// For each n: descend without a field to a minimum sigma, then descend the
// perturbed landscape starting FROM sigma to get sigma_tilde; record how far
// the minimum moved and how much its normalized energy changed. alpha is the
// decay exponent of the median distance across the n grid.
ShiftReport perturbation_shift_experiment(const ShiftConfig& cfg);

}  // namespace spinlab
