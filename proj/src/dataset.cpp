#include "dnas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dnas {

void Dataset::validate() const {
  if (!images.defined() || images.rank() != 4 || n() == 0) fail("Dataset: empty or non-4D images");
  if (static_cast<int>(labels.size()) != n())
    fail("Dataset: " + std::to_string(labels.size()) + " labels for " + std::to_string(n()) +
         " images");
  if (class_count < 2) fail("Dataset: class_count must be >= 2");
  for (int l : labels)
    if (l < 0 || l >= class_count)
      fail("Dataset: label " + std::to_string(l) + " out of range [0," +
           std::to_string(class_count) + ")");
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  if (indices.empty()) fail("Dataset::subset: empty index set");
  const int C = channels(), H = images.dim(2), W = images.dim(3);
  const std::size_t row = static_cast<std::size_t>(C) * H * W;
  std::vector<double> data(indices.size() * row);
  std::vector<int> labs(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int src = indices[i];
    if (src < 0 || src >= n()) fail("Dataset::subset: index out of range");
    std::copy_n(images.data().begin() + static_cast<std::size_t>(src) * row, row,
                data.begin() + i * row);
    labs[i] = labels[static_cast<std::size_t>(src)];
  }
  Dataset d;
  d.images = Tensor({static_cast<int>(indices.size()), C, H, W}, std::move(data));
  d.labels = std::move(labs);
  d.class_count = class_count;
  d.provenance = provenance;
  return d;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.class_count != b.class_count || a.channels() != b.channels() ||
      a.images.dim(2) != b.images.dim(2) || a.images.dim(3) != b.images.dim(3))
    fail("concat: incompatible datasets");
  std::vector<double> data = a.images.data();
  data.insert(data.end(), b.images.data().begin(), b.images.data().end());
  std::vector<int> labs = a.labels;
  labs.insert(labs.end(), b.labels.begin(), b.labels.end());
  Dataset d;
  d.images = Tensor({a.n() + b.n(), a.channels(), a.images.dim(2), a.images.dim(3)},
                    std::move(data));
  d.labels = std::move(labs);
  d.class_count = a.class_count;
  d.provenance = a.provenance + "+" + b.provenance;
  return d;
}

Dataset synth_blobs(int n, int classes, int size, double noise_sigma, std::uint64_t seed) {
  if (classes < 2) fail("synth_blobs: classes must be >= 2");
  if (n < 1 || size < 2) fail("synth_blobs: bad n or size");
  Rng rng(seed);
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(classes))));
  const double cell = static_cast<double>(size) / grid;
  const double sigma = std::max(0.8, cell / 4.0);

  std::vector<double> data(static_cast<std::size_t>(n) * size * size);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    labels[static_cast<std::size_t>(i)] = c;
    const double cy = (c / grid + 0.5) * cell - 0.5;
    const double cx = (c % grid + 0.5) * cell - 0.5;
    double* img = data.data() + static_cast<std::size_t>(i) * size * size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        double v = std::exp(-d2 / (2.0 * sigma * sigma));
        if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
        img[y * size + x] = std::clamp(v, 0.0, 1.0);
      }
  }
  Dataset d;
  d.images = Tensor({n, 1, size, size}, std::move(data));
  d.labels = std::move(labels);
  d.class_count = classes;
  d.provenance = "synth_blobs(n=" + std::to_string(n) + ",classes=" + std::to_string(classes) +
                 ",size=" + std::to_string(size) + ",noise=" + std::to_string(noise_sigma) +
                 ",seed=" + std::to_string(seed) + ")";
  return d;
}

Dataset load_cifar10_bin(const std::string& path) {
  constexpr std::size_t kRecord = 3073;
  constexpr std::size_t kPixels = 3072;
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("load_cifar10_bin: cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.empty()) fail("load_cifar10_bin: '" + path + "' has zero records");
  if (bytes.size() % kRecord != 0)
    fail("load_cifar10_bin: '" + path + "' length " + std::to_string(bytes.size()) +
         " is not a multiple of 3073");
  const std::size_t n = bytes.size() / kRecord;

  std::vector<double> data(n * kPixels);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kRecord;
    const int label = rec[0];
    if (label > 9)
      fail("load_cifar10_bin: record " + std::to_string(i) + " has label " +
           std::to_string(label) + " > 9");
    labels[i] = label;
    for (std::size_t p = 0; p < kPixels; ++p)
      data[i * kPixels + p] = static_cast<double>(rec[1 + p]) / 255.0;
  }
  Dataset d;
  d.images = Tensor({static_cast<int>(n), 3, 32, 32}, std::move(data));
  d.labels = std::move(labels);
  d.class_count = 10;
  d.provenance = "cifar10:" + path;
  return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double ratio, std::uint64_t seed) {
  d.validate();
  if (ratio <= 0.0 || ratio >= 1.0) fail("split_dataset: ratio must be in (0,1)");
  const int n = d.n();
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
  const int n_first = static_cast<int>(std::floor(ratio * n));
  if (n_first <= 0 || n_first >= n)
    fail("split_dataset: degenerate split (" + std::to_string(n_first) + "," +
         std::to_string(n - n_first) + ")");
  std::vector<int> first(idx.begin(), idx.begin() + n_first);
  std::vector<int> second(idx.begin() + n_first, idx.end());
  return {d.subset(first), d.subset(second)};
}

Batch make_batch(const Dataset& d, const std::vector<int>& indices, std::size_t begin,
                 std::size_t count) {
  std::vector<int> sel(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                       indices.begin() + static_cast<std::ptrdiff_t>(begin + count));
  Dataset sub = d.subset(sel);
  return {sub.images, sub.labels};
}

}  // namespace dnas
