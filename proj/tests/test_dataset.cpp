#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "dnas/dataset.hpp"

using namespace dnas;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/dnas_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

void write_records(const std::string& path, const std::vector<std::vector<unsigned char>>& recs) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  for (const auto& r : recs) f.write(reinterpret_cast<const char*>(r.data()),
                                     static_cast<std::streamsize>(r.size()));
}

}  // namespace

TEST_CASE("synth_blobs: noiseless data is classified perfectly by nearest template") {
  Dataset d = synth_blobs(40, 4, 10, 0.0, 7);
  d.validate();
  // class templates = first occurrence of each label
  std::vector<std::vector<double>> templates(4);
  const std::size_t row = static_cast<std::size_t>(d.channels()) * 10 * 10;
  for (int i = 0; i < d.n(); ++i) {
    const int c = d.labels[static_cast<std::size_t>(i)];
    if (templates[static_cast<std::size_t>(c)].empty())
      templates[static_cast<std::size_t>(c)] = {
          d.images.data().begin() + static_cast<std::ptrdiff_t>(i * row),
          d.images.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * row)};
  }
  int correct = 0;
  for (int i = 0; i < d.n(); ++i) {
    double best = 1e300;
    int arg = -1;
    for (int c = 0; c < 4; ++c) {
      double dist = 0.0;
      for (std::size_t j = 0; j < row; ++j) {
        const double delta = d.images.data()[static_cast<std::size_t>(i) * row + j] -
                             templates[static_cast<std::size_t>(c)][j];
        dist += delta * delta;
      }
      if (dist < best) {
        best = dist;
        arg = c;
      }
    }
    if (arg == d.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  CHECK(correct == d.n());
}

TEST_CASE("synth_blobs: determinism and balanced class counts") {
  Dataset a = synth_blobs(41, 4, 8, 0.3, 13);
  Dataset b = synth_blobs(41, 4, 8, 0.3, 13);
  CHECK(a.images.data() == b.images.data());
  CHECK(a.labels == b.labels);
  Dataset c = synth_blobs(41, 4, 8, 0.3, 14);
  CHECK(a.images.data() != c.images.data());

  std::vector<int> counts(4, 0);
  for (int l : a.labels) ++counts[static_cast<std::size_t>(l)];
  for (int cnt : counts) {
    CHECK(cnt >= 41 / 4);
    CHECK(cnt <= 41 / 4 + 1);
  }
  // values stay in [0,1] even with noise
  for (double v : a.images.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("cifar10 loader: synthetic round trip is lossless") {
  TempFile tmp("cifar_ok.bin");
  std::vector<std::vector<unsigned char>> recs;
  Rng rng(3);
  for (int i = 0; i < 4; ++i) {
    std::vector<unsigned char> r(3073);
    r[0] = static_cast<unsigned char>(i % 10);
    for (std::size_t p = 1; p < r.size(); ++p)
      r[p] = static_cast<unsigned char>(rng.below(256));
    recs.push_back(std::move(r));
  }
  write_records(tmp.path, recs);
  Dataset d = load_cifar10_bin(tmp.path);
  CHECK(d.n() == 4);
  CHECK(d.class_count == 10);
  CHECK(d.channels() == 3);
  for (int i = 0; i < 4; ++i) {
    CHECK(d.labels[static_cast<std::size_t>(i)] == i % 10);
    for (std::size_t p = 0; p < 3072; ++p)
      CHECK(d.images.data()[static_cast<std::size_t>(i) * 3072 + p] ==
            static_cast<double>(recs[static_cast<std::size_t>(i)][p + 1]) / 255.0);
  }
}

TEST_CASE("cifar10 loader: all-zero pixels with label 3") {
  TempFile tmp("cifar_zero.bin");
  std::vector<unsigned char> r(3073, 0);
  r[0] = 3;
  write_records(tmp.path, {r});
  Dataset d = load_cifar10_bin(tmp.path);
  CHECK(d.labels[0] == 3);
  for (double v : d.images.data()) CHECK(v == 0.0);
}

TEST_CASE("cifar10 loader: malformed inputs are rejected") {
  TempFile empty("cifar_empty.bin");
  write_records(empty.path, {});
  CHECK_THROWS_WITH_AS(load_cifar10_bin(empty.path), doctest::Contains("zero records"),
                       std::runtime_error);

  TempFile bad_len("cifar_badlen.bin");
  write_records(bad_len.path, {std::vector<unsigned char>(3072, 0)});
  CHECK_THROWS_WITH_AS(load_cifar10_bin(bad_len.path), doctest::Contains("3073"),
                       std::runtime_error);

  TempFile bad_label("cifar_badlabel.bin");
  std::vector<unsigned char> r(3073, 0);
  r[0] = 11;
  write_records(bad_label.path, {r});
  CHECK_THROWS_WITH_AS(load_cifar10_bin(bad_label.path), doctest::Contains("label"),
                       std::runtime_error);

  CHECK_THROWS_AS(load_cifar10_bin("/nonexistent/file.bin"), std::runtime_error);
}

TEST_CASE("split_dataset: sizes, disjointness, determinism, degenerate splits") {
  Dataset d = synth_blobs(10, 2, 6, 0.0, 5);
  auto [w, t] = split_dataset(d, 0.8, 17);
  CHECK(w.n() == 8);
  CHECK(t.n() == 2);

  // noiseless blobs are identical per class, so compare label multisets instead
  std::vector<int> counts(2, 0);
  for (int l : w.labels) ++counts[static_cast<std::size_t>(l)];
  for (int l : t.labels) ++counts[static_cast<std::size_t>(l)];
  CHECK(counts[0] == 5);
  CHECK(counts[1] == 5);

  auto [w2, t2] = split_dataset(d, 0.8, 17);
  CHECK(w2.images.data() == w.images.data());
  CHECK(t2.labels == t.labels);

  CHECK_THROWS_AS(split_dataset(d, 0.01, 1), std::runtime_error);  // empty first side
  CHECK_THROWS_AS(split_dataset(d, 1.0, 1), std::runtime_error);   // ratio bounds
  CHECK_THROWS_AS(split_dataset(d, 0.0, 1), std::runtime_error);
}

TEST_CASE("split_dataset is a disjoint cover (index-tagged images)") {
  // unique image per row so rows can be traced back to sources
  Dataset d = synth_blobs(12, 2, 6, 0.5, 23);
  auto [a, b] = split_dataset(d, 0.75, 3);
  CHECK(a.n() == 9);
  CHECK(b.n() == 3);
  const std::size_t row = 36;
  auto find_src = [&](const Dataset& part, int i) {
    for (int src = 0; src < d.n(); ++src) {
      bool same = true;
      for (std::size_t j = 0; j < row && same; ++j)
        same = part.images.data()[static_cast<std::size_t>(i) * row + j] ==
               d.images.data()[static_cast<std::size_t>(src) * row + j];
      if (same) return src;
    }
    return -1;
  };
  std::set<int> seen;
  for (int i = 0; i < a.n(); ++i) seen.insert(find_src(a, i));
  for (int i = 0; i < b.n(); ++i) seen.insert(find_src(b, i));
  CHECK(seen.size() == 12);
  CHECK(seen.count(-1) == 0);
}

TEST_CASE("concat preserves rows and make_batch slices them") {
  Dataset a = synth_blobs(6, 2, 6, 0.0, 1);
  Dataset b = synth_blobs(4, 2, 6, 0.0, 2);
  Dataset c = concat(a, b);
  CHECK(c.n() == 10);
  std::vector<int> idx{9, 0, 5};
  Batch batch = make_batch(c, idx, 0, 2);
  CHECK(batch.x.dim(0) == 2);
  CHECK(batch.labels.size() == 2);
  CHECK(batch.labels[0] == c.labels[9]);
  CHECK(batch.labels[1] == c.labels[0]);
}
