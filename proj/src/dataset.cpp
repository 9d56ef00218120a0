#include "spinlab/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "spinlab/errors.hpp"
#include "spinlab/rng.hpp"

namespace spinlab {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  if (in.bad()) throw io_error("read failed on " + path);
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) |
         (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) |
         static_cast<std::uint32_t>(b[at + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  const std::vector<unsigned char> img = read_file(images_path);
  if (img.size() < 16) throw io_error(images_path + ": truncated IDX header");
  if (be32(img, 0) != 0x00000803u) {
    throw io_error(images_path + ": bad IDX image magic");
  }
  const std::uint64_t count = be32(img, 4);
  const std::uint64_t rows = be32(img, 8);
  const std::uint64_t cols = be32(img, 12);
  const std::uint64_t dim = rows * cols;
  if (img.size() != 16 + count * dim) {
    throw io_error(images_path + ": file size disagrees with IDX header");
  }

  const std::vector<unsigned char> lab = read_file(labels_path);
  if (lab.size() < 8) throw io_error(labels_path + ": truncated IDX header");
  if (be32(lab, 0) != 0x00000801u) {
    throw io_error(labels_path + ": bad IDX label magic");
  }
  const std::uint64_t lcount = be32(lab, 4);
  if (lab.size() != 8 + lcount) {
    throw io_error(labels_path + ": file size disagrees with IDX header");
  }
  if (lcount != count) {
    throw io_error(labels_path + ": label count does not match image count in " +
                   images_path);
  }

  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(count),
                    static_cast<Eigen::Index>(dim));
  d.labels.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (std::uint64_t k = 0; k < dim; ++k) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          static_cast<double>(img[16 + i * dim + k]) / 127.5 - 1.0;
    }
    const int label = static_cast<int>(lab[8 + i]);
    d.labels[i] = label;
    d.classes = std::max(d.classes, label + 1);
  }
  return d;
}

Dataset synth_blobs(int classes, int dim, int per_class, double spread,
                    std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("synth_blobs: classes < 2");
  if (dim < 1) throw std::invalid_argument("synth_blobs: dim < 1");
  if (per_class < 1) throw std::invalid_argument("synth_blobs: per_class < 1");
  if (spread < 0.0) throw std::invalid_argument("synth_blobs: spread < 0");

  GaussianStream g(derive_seed(seed, Stream::Blobs));
  Eigen::MatrixXd centers(classes, dim);
  for (int c = 0; c < classes; ++c) {
    Eigen::VectorXd v(dim);
    g.fill(v.data(), dim);
    const double norm = v.norm();
    if (norm == 0.0) v(0) = 1.0;  // probability-zero fallback
    centers.row(c) = v.transpose() / (norm == 0.0 ? 1.0 : norm);
  }

  Dataset d;
  d.classes = classes;
  d.features.resize(static_cast<Eigen::Index>(classes) * per_class, dim);
  d.labels.resize(static_cast<std::size_t>(classes) * per_class);
  Eigen::VectorXd noise(dim);
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < per_class; ++s) {
      const Eigen::Index row = static_cast<Eigen::Index>(c) * per_class + s;
      g.fill(noise.data(), dim);
      d.features.row(row) = centers.row(c) + spread * noise.transpose();
      d.labels[static_cast<std::size_t>(row)] = c;
    }
  }
  d.features = d.features.cwiseMax(-1.0).cwiseMin(1.0);
  return d;
}

void shuffle_and_split(Dataset& data, double validation_fraction,
                       std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument(
        "shuffle_and_split: validation fraction outside [0, 1)");
  }
  const Eigen::Index count = data.samples();
  if (static_cast<Eigen::Index>(data.labels.size()) != count) {
    throw std::invalid_argument(
        "shuffle_and_split: labels/features size mismatch");
  }

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(count));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Xoshiro256 rng(seed);
  for (Eigen::Index i = count - 1; i > 0; --i) {
    const Eigen::Index j = std::min<Eigen::Index>(
        static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(i + 1)),
        i);
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }

  Eigen::MatrixXd features(count, data.dim());
  std::vector<int> labels(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    features.row(i) = data.features.row(perm[static_cast<std::size_t>(i)]);
    labels[static_cast<std::size_t>(i)] =
        data.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  data.features = std::move(features);
  data.labels = std::move(labels);
  data.validation_start =
      count - static_cast<Eigen::Index>(validation_fraction *
                                        static_cast<double>(count));
}

}  // namespace spinlab
