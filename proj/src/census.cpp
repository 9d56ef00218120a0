#include "spinlab/census.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

// Union-find with path halving; small and allocation-free after setup.
struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int count) : parent(count) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Overlap matrix sigma_a . sigma_b / n; cosine distance is 1 - overlap.
Eigen::MatrixXd gram(const Eigen::MatrixXd& endpoints) {
  const double n = static_cast<double>(endpoints.rows());
  return endpoints.transpose() * endpoints / n;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Clustering cluster_minima(const Eigen::MatrixXd& endpoints, double eps) {
  if (eps < 0.0) throw std::invalid_argument("cluster_minima: eps < 0");
  const int count = static_cast<int>(endpoints.cols());
  Clustering out;
  out.labels.assign(count, -1);
  if (count == 0) return out;

  const Eigen::MatrixXd overlap = gram(endpoints);
  UnionFind uf(count);
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      if (1.0 - overlap(i, j) <= eps) uf.unite(i, j);
    }
  }
  // Relabel roots in first-appearance order so labels are deterministic.
  std::vector<int> relabel(count, -1);
  for (int i = 0; i < count; ++i) {
    const int root = uf.find(i);
    if (relabel[root] < 0) relabel[root] = out.count++;
    out.labels[i] = relabel[root];
  }
  return out;
}

DistanceStats cosine_distance_stats(const Eigen::MatrixXd& endpoints,
                                    std::uint64_t seed) {
  const Eigen::Index count = endpoints.cols();
  if (count < 2) {
    throw std::invalid_argument(
        "cosine_distance_stats: need at least two endpoints");
  }
  const Eigen::MatrixXd overlap = gram(endpoints);
  constexpr std::uint64_t kMaxPairs = 1000000;
  const std::uint64_t total =
      static_cast<std::uint64_t>(count) * static_cast<std::uint64_t>(count - 1) / 2;

  DistanceStats stats;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  auto accumulate = [&](Eigen::Index i, Eigen::Index j) {
    const double dist = 1.0 - overlap(i, j);
    sum += dist;
    lo = std::min(lo, dist);
    hi = std::max(hi, dist);
  };

  if (total <= kMaxPairs) {
    for (Eigen::Index i = 0; i < count; ++i) {
      for (Eigen::Index j = i + 1; j < count; ++j) accumulate(i, j);
    }
    stats.pairs = total;
  } else {
    // Deterministic subsample: kMaxPairs index pairs drawn from seed.
    Xoshiro256 rng(seed);
    auto draw = [&] {
      const double u = rng.uniform();
      return std::min<Eigen::Index>(
          static_cast<Eigen::Index>(u * static_cast<double>(count)), count - 1);
    };
    for (std::uint64_t k = 0; k < kMaxPairs; ++k) {
      Eigen::Index i = draw();
      Eigen::Index j = draw();
      while (j == i) j = draw();
      accumulate(i, j);
    }
    stats.pairs = kMaxPairs;
    stats.subsampled = true;
  }
  stats.mean = sum / static_cast<double>(stats.pairs);
  stats.min = lo;
  stats.max = hi;
  return stats;
}

CensusResult run_census(const Disorder& d, const CensusConfig& cfg) {
  if (cfg.trials <= 0) throw std::invalid_argument("run_census: trials <= 0");
  if (cfg.regimes.empty()) {
    throw std::invalid_argument("run_census: no regimes given");
  }
  const int n = d.n();
  CensusResult out;
  out.n = n;
  out.p = d.p();
  out.J = d.J();
  out.master_seed = cfg.master_seed;
  out.regimes.reserve(cfg.regimes.size());

  for (std::size_t ri = 0; ri < cfg.regimes.size(); ++ri) {
    const RegimeSpec& spec = cfg.regimes[ri];
    RegimeCensus rc;
    rc.label = spec.label;
    rc.nu = spec.nu;
    rc.field_seed = derive_seed(cfg.master_seed, Stream::Field, ri);
    const ExternalField f = ExternalField::sample(n, spec.nu, rc.field_seed);

    Eigen::MatrixXd inits(n, cfg.trials);
    rc.init_seeds.reserve(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t s =
          derive_seed(cfg.master_seed, Stream::DescentInit, ri,
                      static_cast<std::uint64_t>(t));
      rc.init_seeds.push_back(s);
      inits.col(t) = random_configuration(n, s).values;
    }

    BatchDescentResult batch = descend_batch(d, f, inits, cfg.descent);
    rc.endpoints = std::move(batch.endpoints);
    rc.normalized_energy = std::move(batch.normalized_energy);
    rc.iters = std::move(batch.iters);
    rc.converged = std::move(batch.converged);

    std::vector<int> conv_cols;
    conv_cols.reserve(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      if (rc.converged[t]) conv_cols.push_back(t);
    }
    const int n_conv = static_cast<int>(conv_cols.size());
    rc.convergence_rate =
        static_cast<double>(n_conv) / static_cast<double>(cfg.trials);

    Eigen::MatrixXd conv(n, n_conv);
    for (int k = 0; k < n_conv; ++k) conv.col(k) = rc.endpoints.col(conv_cols[k]);

    rc.cluster_labels.assign(cfg.trials, -1);
    const Clustering cl = cluster_minima(conv, cfg.cluster_threshold);
    rc.cluster_count = cl.count;
    for (int k = 0; k < n_conv; ++k) {
      rc.cluster_labels[conv_cols[k]] = cl.labels[k];
    }

    if (n_conv >= 2) {
      const DistanceStats stats = cosine_distance_stats(
          conv, derive_seed(cfg.master_seed, Stream::PairSample, ri));
      rc.mean_cosine_distance = stats.mean;
      rc.min_cosine_distance = stats.min;
      rc.max_cosine_distance = stats.max;
      rc.distance_defined = true;
    }

    rc.critical_indices.assign(cfg.trials, -1);
    if (cfg.compute_indices && n_conv > 0) {
      const Eigen::MatrixXd grads = batch_gradients(d, f, conv);
      const double hscale = d.coupling_prefactor() *
                            static_cast<double>(d.p()) *
                            static_cast<double>(d.p() - 1);
      if (d.p() == 3) {
        // One GEMM yields every endpoint's second-derivative contraction:
        // column k of the product, reshaped n x n, is sum_m T_{ijm} sigma_m.
        using RowMajorMap = Eigen::Map<
            const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                Eigen::RowMajor>>;
        RowMajorMap tensor(d.symmetrized().data(),
                           static_cast<Eigen::Index>(n) * n, n);
        const Eigen::MatrixXd contracted = tensor * conv;
        for (int k = 0; k < n_conv; ++k) {
          const Eigen::MatrixXd hess =
              hscale *
              Eigen::Map<const Eigen::MatrixXd>(contracted.col(k).data(), n, n);
          const SpinConfiguration sigma{conv.col(k)};
          rc.critical_indices[conv_cols[k]] =
              critical_index_with_hessian(hess, grads.col(k), sigma);
        }
      } else {
        for (int k = 0; k < n_conv; ++k) {
          const SpinConfiguration sigma{conv.col(k)};
          const Eigen::MatrixXd hess = hessian(d, sigma, f);
          rc.critical_indices[conv_cols[k]] =
              critical_index_with_hessian(hess, grads.col(k), sigma);
        }
      }
    }
    out.regimes.push_back(std::move(rc));
  }
  return out;
}

ShiftReport perturbation_shift_experiment(const ShiftConfig& cfg) {
  if (cfg.n_grid.empty()) {
    throw std::invalid_argument("perturbation_shift_experiment: empty n grid");
  }
  if (cfg.trials <= 0) {
    throw std::invalid_argument("perturbation_shift_experiment: trials <= 0");
  }
  ShiftReport rep;
  rep.n_grid = cfg.n_grid;
  rep.nu = cfg.nu;

  std::uint64_t pooled_within = 0;
  std::uint64_t pooled_total = 0;

  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const int n = cfg.n_grid[ni];
    const Disorder d =
        Disorder::sample(n, cfg.p, cfg.J,
                         derive_seed(cfg.seed, Stream::Disorder, ni),
                         cfg.tensor_budget);
    const ExternalField none = ExternalField::zero(n);
    const ExternalField field = ExternalField::sample(
        n, cfg.nu, derive_seed(cfg.seed, Stream::Field, ni));

    Eigen::MatrixXd inits(n, cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      inits.col(t) =
          random_configuration(
              n, derive_seed(cfg.seed, Stream::DescentInit, ni,
                             static_cast<std::uint64_t>(t)))
              .values;
    }
    // Phase 1 finds unperturbed minima; phase 2 follows each one into the
    // perturbed landscape by starting descent exactly where phase 1 ended.
    const BatchDescentResult bare = descend_batch(d, none, inits, cfg.descent);
    const BatchDescentResult shifted =
        descend_batch(d, field, bare.endpoints, cfg.descent);

    std::vector<double> dists;
    std::vector<double> ediffs;
    int conv = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      ShiftTrial row;
      row.n = n;
      row.trial = t;
      row.both_converged = bare.converged[t] && shifted.converged[t];
      row.distance = (bare.endpoints.col(t) - shifted.endpoints.col(t)).norm();
      row.energy_diff =
          std::abs(bare.normalized_energy(t) - shifted.normalized_energy(t));
      if (row.both_converged) {
        ++conv;
        dists.push_back(row.distance);
        ediffs.push_back(row.energy_diff);
        ++pooled_total;
        if (row.energy_diff <= 2.0 * cfg.nu) ++pooled_within;
      }
      rep.rows.push_back(row);
    }
    rep.converged_count.push_back(conv);
    rep.median_distance.push_back(median_of(dists));
    rep.median_energy_diff.push_back(median_of(ediffs));
  }

  rep.fraction_energy_within =
      pooled_total == 0
          ? 0.0
          : static_cast<double>(pooled_within) / static_cast<double>(pooled_total);

  // alpha from least squares of log median distance against log n; defined
  // only when every median is positive and the grid has at least two sizes.
  rep.alpha_defined =
      cfg.n_grid.size() >= 2 &&
      std::all_of(rep.median_distance.begin(), rep.median_distance.end(),
                  [](double m) { return m > 0.0; });
  if (rep.alpha_defined) {
    const std::size_t m = cfg.n_grid.size();
    std::vector<double> xs(m), ys(m);
    for (std::size_t i = 0; i < m; ++i) {
      xs[i] = std::log(static_cast<double>(cfg.n_grid[i]));
      ys[i] = std::log(rep.median_distance[i]);
    }
    const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
    const double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sxy += (xs[i] - xbar) * (ys[i] - ybar);
      sxx += (xs[i] - xbar) * (xs[i] - xbar);
    }
    rep.alpha = -sxy / sxx;
  }
  return rep;
}

}  // namespace spinlab
