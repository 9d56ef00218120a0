// Data ingestion: IDX image/label pairs and a synthetic Gaussian-blob
// generator, both delivering features in [-1, 1] with integer class labels.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace spinlab {

struct Dataset {
  Eigen::MatrixXd features;  // samples x dim, every entry in [-1, 1]
  std::vector<int> labels;   // class ids in [0, classes)
  int classes = 0;
  // Samples at rows [validation_start, samples) are the validation split;
  // -1 until shuffle_and_split has run.
  Eigen::Index validation_start = -1;

  Eigen::Index samples() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  bool has_split() const { return validation_start >= 0; }
  Eigen::Index train_count() const {
    return has_split() ? validation_start : samples();
  }
  Eigen::Index validation_count() const {
    return has_split() ? samples() - validation_start : 0;
  }
};

// Parses a big-endian IDX pair: images with magic 0x00000803 (count, rows,
// cols, unsigned bytes) and labels with magic 0x00000801. Pixels are rescaled
// to [-1, 1] via x / 127.5 - 1; classes is the largest label + 1. Throws
// io_error (message includes the offending path) for a missing file, a wrong
// magic, a size that disagrees with the header, or an image/label count
// mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// per_class Gaussian samples of width spread around each of `classes` centers
// drawn uniformly on the unit sphere of the feature space, clipped to
// [-1, 1]. Samples are grouped by class; deterministic in seed. Requires
// classes >= 2, dim >= 1, per_class >= 1, spread >= 0.
Dataset synth_blobs(int classes, int dim, int per_class, double spread,
                    std::uint64_t seed);

// Applies a seed-derived permutation to the samples, then marks the last
// `validation_fraction` of them as the validation split. Requires
// 0 <= validation_fraction < 1.
void shuffle_and_split(Dataset& data, double validation_fraction,
                       std::uint64_t seed);

}  // namespace spinlab
