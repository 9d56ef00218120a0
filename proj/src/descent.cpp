#include "spinlab/descent.hpp"

#include <cmath>
#include <stdexcept>

#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

// Column t of W is the (p-1)-fold Kronecker power of sigma_t, matching the
// row-major flattening of the symmetrized tensor's trailing p-1 indices.
void fill_kron_power(const Eigen::Ref<const Eigen::VectorXd>& sigma, int p,
                     double* out) {
  const Eigen::Index n = sigma.size();
  if (p == 2) {
    Eigen::Map<Eigen::VectorXd>(out, n) = sigma;
    return;
  }
  // Build from the innermost (fastest) index outward: w_{k+1} = sigma (x) w_k
  // laid out with w_k fastest, i.e. out[i*len + j] = sigma_i * w_k[j].
  Eigen::Index len = n;
  Eigen::Map<Eigen::VectorXd>(out, n) = sigma;
  for (int k = 2; k < p; ++k) {
    // Expand in place from the back so the length-len prefix stays readable.
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      const double si = sigma(i);
      double* dst = out + i * len;
      if (i == 0) {
        for (Eigen::Index j = 0; j < len; ++j) dst[j] = si * out[j];
      } else {
        for (Eigen::Index j = len - 1; j >= 0; --j) dst[j] = si * out[j];
      }
    }
    len *= n;
  }
}

}  // namespace

SpinConfiguration random_configuration(Eigen::Index n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sphere needs n >= 2");
  SpinConfiguration s;
  s.values.resize(n);
  GaussianStream g(seed);
  g.fill(s.values.data(), static_cast<std::size_t>(n));
  const double norm = s.values.norm();
  if (norm == 0.0) throw std::runtime_error("degenerate Gaussian draw");
  s.values *= std::sqrt(static_cast<double>(n)) / norm;
  return s;
}

Eigen::VectorXd project_tangent(const Eigen::VectorXd& g,
                                const SpinConfiguration& sigma) {
  if (g.size() != sigma.n()) {
    throw std::invalid_argument("gradient and configuration lengths differ");
  }
  const double radial = g.dot(sigma.values) / static_cast<double>(sigma.n());
  return g - radial * sigma.values;
}

SpinConfiguration retract(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw std::invalid_argument("cannot retract a zero or non-finite vector");
  }
  SpinConfiguration s;
  s.values = v * (std::sqrt(static_cast<double>(v.size())) / norm);
  return s;
}

DescentResult descend(const Disorder& d, const ExternalField& f,
                      const SpinConfiguration& sigma0,
                      const DescentConfig& cfg) {
  if (cfg.eta <= 0.0 || cfg.grad_tol <= 0.0 || cfg.max_iters == 0) {
    throw std::invalid_argument("descent config values must be positive");
  }
  if (!on_sphere(sigma0)) {
    throw std::invalid_argument("descent must start on the sphere");
  }
  DescentResult r;
  r.endpoint = sigma0;
  while (true) {
    const Eigen::VectorXd g = gradient(d, r.endpoint, f);
    const Eigen::VectorXd gp = project_tangent(g, r.endpoint);
    r.grad_norm = gp.norm();
    r.ambient_grad_norm = g.norm();
    if (r.grad_norm <= cfg.grad_tol) {
      r.converged = true;
      break;
    }
    if (r.iters >= cfg.max_iters) break;
    r.endpoint = retract(r.endpoint.values - cfg.eta * gp);
    ++r.iters;
  }
  r.final_energy = energy(d, r.endpoint, f);
  r.normalized_energy = r.final_energy / static_cast<double>(d.n());
  return r;
}

BatchDescentResult descend_batch(const Disorder& d, const ExternalField& f,
                                 const Eigen::MatrixXd& inits,
                                 const DescentConfig& cfg) {
  if (cfg.eta <= 0.0 || cfg.grad_tol <= 0.0 || cfg.max_iters == 0) {
    throw std::invalid_argument("descent config values must be positive");
  }
  const int n = d.n();
  const int p = d.p();
  const Eigen::Index trials = inits.cols();
  if (inits.rows() != n) {
    throw std::invalid_argument("init matrix must have n rows");
  }
  for (Eigen::Index t = 0; t < trials; ++t) {
    if (std::abs(inits.col(t).squaredNorm() - n) > 1e-8 * n) {
      throw std::invalid_argument("batch init column off the sphere");
    }
  }

  BatchDescentResult out;
  out.endpoints = inits;
  out.final_energy.setZero(trials);
  out.normalized_energy.setZero(trials);
  out.grad_norm.setZero(trials);
  out.ambient_grad_norm.setZero(trials);
  out.iters.assign(static_cast<std::size_t>(trials), 0);
  out.converged.assign(static_cast<std::size_t>(trials), 0);

  const std::uint64_t tail = ipow(static_cast<std::uint64_t>(n), p - 1);
  const Eigen::Index tail_len = static_cast<Eigen::Index>(tail);
  // Unfolded symmetrized tensor: column m holds the coefficients multiplying
  // sigma_m's partial derivative, so grad_raw = p * V^T w.
  const Eigen::Map<const Eigen::MatrixXd> V(d.symmetrized().data(), tail_len,
                                            n);
  const double scale = d.coupling_prefactor() * static_cast<double>(p);
  const Eigen::VectorXd& h = f.values();

  constexpr Eigen::Index kChunk = 512;
  Eigen::MatrixXd W(tail_len, std::min<Eigen::Index>(kChunk, trials));
  Eigen::MatrixXd Graw(n, std::min<Eigen::Index>(kChunk, trials));

  std::vector<Eigen::Index> active(static_cast<std::size_t>(trials));
  for (Eigen::Index t = 0; t < trials; ++t) active[t] = t;

  std::uint64_t iter = 0;
  while (!active.empty()) {
    std::vector<Eigen::Index> still_active;
    still_active.reserve(active.size());
    for (std::size_t base = 0; base < active.size();
         base += static_cast<std::size_t>(kChunk)) {
      const Eigen::Index count = static_cast<Eigen::Index>(
          std::min(static_cast<std::size_t>(kChunk), active.size() - base));
      for (Eigen::Index j = 0; j < count; ++j) {
        fill_kron_power(out.endpoints.col(active[base + j]), p,
                        W.col(j).data());
      }
      Graw.leftCols(count).noalias() = V.transpose() * W.leftCols(count);
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index t = active[base + j];
        const auto x = out.endpoints.col(t);
        const Eigen::VectorXd g = scale * Graw.col(j) - h;
        const double radial = g.dot(x) / static_cast<double>(n);
        const Eigen::VectorXd gp = g - radial * x;
        const double gp_norm = gp.norm();
        const bool done = gp_norm <= cfg.grad_tol;
        if (done || iter >= cfg.max_iters) {
          out.converged[static_cast<std::size_t>(t)] = done ? 1 : 0;
          out.iters[static_cast<std::size_t>(t)] = iter;
          out.grad_norm(t) = gp_norm;
          out.ambient_grad_norm(t) = g.norm();
          // The scalar routine makes the reported energy a pure function of
          // the endpoint, so any two descents that stop at the same point
          // report bitwise-identical energies regardless of batch layout.
          out.final_energy(t) = energy(d, SpinConfiguration{x}, f);
          out.normalized_energy(t) =
              out.final_energy(t) / static_cast<double>(n);
        } else {
          const Eigen::VectorXd next = x - cfg.eta * gp;
          const double norm = next.norm();
          out.endpoints.col(t) =
              next * (std::sqrt(static_cast<double>(n)) / norm);
          still_active.push_back(t);
        }
      }
    }
    active.swap(still_active);
    ++iter;
  }
  return out;
}

Eigen::MatrixXd batch_gradients(const Disorder& d, const ExternalField& f,
                                const Eigen::MatrixXd& points) {
  const int n = d.n();
  const int p = d.p();
  if (points.rows() != n) {
    throw std::invalid_argument("points matrix must have n rows");
  }
  const Eigen::Index trials = points.cols();
  const Eigen::Index tail_len =
      static_cast<Eigen::Index>(ipow(static_cast<std::uint64_t>(n), p - 1));
  const Eigen::Map<const Eigen::MatrixXd> V(d.symmetrized().data(), tail_len,
                                            n);
  const double scale = d.coupling_prefactor() * static_cast<double>(p);

  Eigen::MatrixXd out(n, trials);
  constexpr Eigen::Index kChunk = 512;
  Eigen::MatrixXd W(tail_len, std::min<Eigen::Index>(kChunk, trials));
  for (Eigen::Index base = 0; base < trials; base += kChunk) {
    const Eigen::Index count = std::min(kChunk, trials - base);
    for (Eigen::Index j = 0; j < count; ++j) {
      fill_kron_power(points.col(base + j), p, W.col(j).data());
    }
    out.middleCols(base, count).noalias() = V.transpose() * W.leftCols(count);
  }
  out *= scale;
  out.colwise() -= f.values();
  return out;
}

int critical_index_with_hessian(const Eigen::MatrixXd& ambient_hessian,
                                const Eigen::VectorXd& ambient_gradient,
                                const SpinConfiguration& sigma) {
  const Eigen::Index n = sigma.n();
  const double radial =
      sigma.values.dot(ambient_gradient) / static_cast<double>(n);
  // Orthonormal tangent basis: the last n-1 columns of the Householder Q
  // that maps sigma to a multiple of e_1.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sigma.values);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const auto Qt = Q.rightCols(n - 1);
  Eigen::MatrixXd restricted = Qt.transpose() * ambient_hessian * Qt;
  restricted.diagonal().array() -= radial;
  const double eig_tol = 1e-6 * restricted.cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      restricted, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  int index = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -eig_tol) ++index;
  }
  return index;
}

int critical_index(const Disorder& d, const ExternalField& f,
                   const SpinConfiguration& sigma, double grad_tol) {
  const Eigen::VectorXd g = gradient(d, sigma, f);
  const Eigen::VectorXd gp = project_tangent(g, sigma);
  if (gp.norm() > 10.0 * grad_tol) {
    throw std::invalid_argument(
        "critical index asked at a point with projected gradient norm " +
        std::to_string(gp.norm()));
  }
  return critical_index_with_hessian(hessian(d, sigma, f), g, sigma);
}

}  // namespace spinlab
