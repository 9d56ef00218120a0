// Seeded random number generation with documented stream derivation.
//
// Every random draw in the library comes from a xoshiro256++ engine whose
// state is expanded from a 64-bit seed via splitmix64. Sub-streams (disorder
// tensor, external field, descent inits, batch shuffles, ...) derive their
// seeds from a master seed plus a fixed stream tag and integer indices, so
// trials can run in any order, or in parallel, without changing results.
#pragma once

#include <cstdint>
#include <initializer_list>

namespace spinlab {

// Fixed stream tags. Values are part of the reproducibility contract:
// changing them changes every derived seed.
enum class Stream : std::uint64_t {
  Disorder = 1,        // coupling tensor entries
  Field = 2,           // external field vector
  DescentInit = 3,     // uniform starting points on the sphere
  PairSample = 4,      // cosine-statistics pair subsampling
  NetInit = 5,         // MLP weight initialization
  BatchShuffle = 6,    // epoch shuffling and batch order
  Perturbation = 7,    // the fixed annealed direction h
  NoiseBaseline = 8,   // per-step resampled noise draws
  Blobs = 9,           // synthetic dataset generation
  DataSplit = 10,      // train/validation shuffle
};

// splitmix64 finalizer (Steele, Lea, Flood): bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives a sub-stream seed from a master seed, a stream tag, and up to
// three indices by chained mixing. Deterministic and order-sensitive.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
  std::uint64_t x = mix64(master);
  x = mix64(x ^ static_cast<std::uint64_t>(tag));
  x = mix64(x ^ a);
  x = mix64(x ^ b);
  x = mix64(x ^ c);
  return x;
}

// xoshiro256++ (Blackman & Vigna, public domain reference), state seeded by
// four successive splitmix64 outputs.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos();

 private:
  std::uint64_t s_[4];
};

// Standard normal draws via the Box-Muller transform over a Xoshiro256
// stream. Self-contained so sequences do not depend on the C++ standard
// library's unspecified std::normal_distribution algorithm.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double next();

  // Fills out[0..count) with iid N(0, 1) draws.
  void fill(double* out, std::size_t count);

 private:
  Xoshiro256 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace spinlab
