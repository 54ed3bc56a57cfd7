#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dnas/rng.hpp"
#include "dnas/tensor.hpp"

namespace dnas {

struct Dataset {
  Tensor images;            // [n, C, H, W], values in [0,1]
  std::vector<int> labels;  // < class_count
  int class_count = 0;
  std::string provenance;

  int n() const { return images.defined() ? images.dim(0) : 0; }
  int channels() const { return images.dim(1); }
  int resolution() const { return images.dim(2); }
  void validate() const;

  Dataset subset(const std::vector<int>& indices) const;
};

Dataset concat(const Dataset& a, const Dataset& b);

// Class-c image: a Gaussian bump centred on the c-th cell of a
// ceil(sqrt(classes))-square grid, plus i.i.d. noise, clipped to [0,1].
// Labels cycle 0..classes-1 so counts stay balanced.
Dataset synth_blobs(int n, int classes, int size, double noise_sigma, std::uint64_t seed);

// CIFAR-10 binary records: 1 label byte (0..9) + 3072 pixel bytes (R,G,B
// planes of 32x32, row-major), pixels scaled by 1/255.
Dataset load_cifar10_bin(const std::string& path);

// Seeded shuffle, then prefix/suffix split; both sides must be non-empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio, std::uint64_t seed);

// Materialize one minibatch.
struct Batch {
  Tensor x;
  std::vector<int> labels;
};
Batch make_batch(const Dataset& d, const std::vector<int>& indices, std::size_t begin,
                 std::size_t count);

}  // namespace dnas
