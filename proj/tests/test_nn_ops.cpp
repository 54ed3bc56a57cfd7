#include <doctest.h>

#include <cmath>

#include "dnas/nn_ops.hpp"
#include "dnas/rng.hpp"
#include "grad_check.hpp"

using namespace dnas;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = false) {
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

// reference zero-filled translation of one H x W plane: out(i,j) = in(i+dy, j+dx)
std::vector<double> translate_plane(const std::vector<double>& in, int h, int w, int dy, int dx) {
  std::vector<double> out(in.size(), 0.0);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const int si = i + dy, sj = j + dx;
      if (si >= 0 && si < h && sj >= 0 && sj < w)
        out[static_cast<std::size_t>(i) * w + j] = in[static_cast<std::size_t>(si) * w + sj];
    }
  return out;
}

}  // namespace

TEST_CASE("conv2d 1x1 identity mapping") {
  Rng rng(3);
  Tensor x = random_tensor({2, 3, 4, 4}, rng);
  std::vector<double> wv(9, 0.0);
  for (int n = 0; n < 3; ++n) wv[static_cast<std::size_t>(n) * 3 + n] = 1.0;  // w[n,m,0,0]=delta
  Tensor w({3, 3, 1, 1}, wv);
  Tensor y = conv2d(x, w, 1, 0, 1);
  CHECK(y.data() == x.data());
}

TEST_CASE("conv2d all-ones 3x3 on all-ones 3x3 input, pad 1") {
  Tensor x({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  Tensor w({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  Tensor y = conv2d(x, w, 1, 1, 1);
  CHECK(y.data() == std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4});
}

TEST_CASE("depthwise conv with zero kernels yields zero") {
  Rng rng(5);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  Tensor w = Tensor::zeros({2, 1, 3, 3});
  Tensor y = conv2d(x, w, 1, 1, 2);
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("conv2d pre-condition errors") {
  Rng rng(5);
  Tensor x = random_tensor({1, 3, 4, 4}, rng);
  Tensor w({2, 1, 3, 3}, std::vector<double>(18, 0.0));
  CHECK_THROWS_AS(conv2d(x, w, 1, 1, 2), std::runtime_error);  // 3 % 2 != 0
  Tensor w2({2, 3, 7, 7}, std::vector<double>(2 * 3 * 49, 0.0));
  CHECK_THROWS_AS(conv2d(x, w2, 1, 0, 1), std::runtime_error);  // negative output
}

TEST_CASE("grouped conv equals block-diagonal composition of per-group convs") {
  Rng rng(17);
  const int B = 2, M = 4, N = 6, K = 3, F = 5, G = 2;
  Tensor x = random_tensor({B, M, F, F}, rng);
  Tensor w = random_tensor({N, M / G, K, K}, rng);
  Tensor y = conv2d(x, w, 1, 1, G);

  // independent per-group convolutions on channel slices
  const int mg = M / G, ng = N / G;
  for (int g = 0; g < G; ++g) {
    std::vector<double> xs(static_cast<std::size_t>(B) * mg * F * F);
    for (int b = 0; b < B; ++b)
      for (int m = 0; m < mg; ++m)
        for (int i = 0; i < F * F; ++i)
          xs[(static_cast<std::size_t>(b) * mg + m) * F * F + i] =
              x.data()[(static_cast<std::size_t>(b) * M + g * mg + m) * F * F + i];
    std::vector<double> ws(static_cast<std::size_t>(ng) * mg * K * K);
    std::copy_n(w.data().begin() + static_cast<std::size_t>(g) * ng * mg * K * K, ws.size(),
                ws.begin());
    Tensor yg = conv2d(Tensor({B, mg, F, F}, xs), Tensor({ng, mg, K, K}, ws), 1, 1, 1);
    for (int b = 0; b < B; ++b)
      for (int n = 0; n < ng; ++n)
        for (int i = 0; i < F * F; ++i)
          CHECK(yg.data()[(static_cast<std::size_t>(b) * ng + n) * F * F + i] ==
                y.data()[(static_cast<std::size_t>(b) * N + g * ng + n) * F * F + i]);
  }
}

TEST_CASE("conv2d gradients vs finite differences (stride, pad, groups)") {
  Rng rng(23);
  Tensor x = random_tensor({2, 4, 6, 6}, rng, -1, 1, true);
  Tensor w = random_tensor({4, 2, 3, 3}, rng, -1, 1, true);
  Tensor proj = random_tensor({2, 4, 3, 3}, rng);  // fixed projection to a scalar
  auto loss = [&] { return sum(mul(conv2d(x, w, 2, 1, 2), proj)); };
  CHECK(gradcheck::run(loss, {x, w}).max_rel_err < 1e-4);
}

TEST_CASE("shift: single channel falls in the centre group (identity)") {
  Rng rng(29);
  Tensor x = random_tensor({1, 1, 5, 5}, rng);
  CHECK(shift(x, 3).data() == x.data());
}

TEST_CASE("shift: even kernel size is rejected") {
  Rng rng(29);
  Tensor x = random_tensor({1, 4, 5, 5}, rng);
  CHECK_THROWS_AS(shift(x, 4), std::runtime_error);
}

TEST_CASE("shift M=9 K=3 matches the explicit translation oracle") {
  const int H = 6, W = 6;
  Rng rng(31);
  Tensor ones({1, 9, H, W}, std::vector<double>(9 * H * W, 1.0));
  Tensor y = shift(ones, 3);
  for (int c = 0; c < 9; ++c) {
    const int dy = c / 3 - 1, dx = c % 3 - 1;
    std::vector<double> plane(static_cast<std::size_t>(H) * W, 1.0);
    auto expect = translate_plane(plane, H, W, dy, dx);
    for (int i = 0; i < H * W; ++i)
      CHECK(y.data()[static_cast<std::size_t>(c) * H * W + i] == expect[static_cast<std::size_t>(i)]);
  }
  // interior pixels of every channel stay 1
  for (int c = 0; c < 9; ++c)
    for (int i = 1; i < H - 1; ++i)
      for (int j = 1; j < W - 1; ++j)
        CHECK(y.data()[(static_cast<std::size_t>(c) * H + i) * W + j] == 1.0);
}

TEST_CASE("shift then inverse translation recovers the interior") {
  const int H = 6, W = 6;
  Rng rng(37);
  Tensor x = random_tensor({1, 9, H, W}, rng);
  Tensor y = shift(x, 3);
  for (int c = 0; c < 9; ++c) {
    const int dy = c / 3 - 1, dx = c % 3 - 1;
    std::vector<double> plane(y.data().begin() + static_cast<std::ptrdiff_t>(c) * H * W,
                              y.data().begin() + static_cast<std::ptrdiff_t>(c + 1) * H * W);
    auto back = translate_plane(plane, H, W, -dy, -dx);
    for (int i = 1; i < H - 1; ++i)
      for (int j = 1; j < W - 1; ++j)
        CHECK(back[static_cast<std::size_t>(i) * W + j] ==
              x.data()[(static_cast<std::size_t>(c) * H + i) * W + j]);
  }
}

TEST_CASE("shift and shuffle move mass, never create it") {
  Rng rng(41);
  Tensor x = random_tensor({2, 8, 6, 6}, rng);
  auto abs_sum = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += std::abs(e);
    return s;
  };
  CHECK(abs_sum(shift(x, 3).data()) <= abs_sum(x.data()) + 1e-12);
  CHECK(abs_sum(channel_shuffle(x, 2).data()) == doctest::Approx(abs_sum(x.data())).epsilon(1e-15));
}

TEST_CASE("shift backward is the inverse shift of the gradient") {
  Rng rng(43);
  Tensor x = random_tensor({1, 9, 6, 6}, rng, -1, 1, true);
  Tensor proj = random_tensor({1, 9, 6, 6}, rng);
  auto loss = [&] { return sum(mul(shift(x, 3), proj)); };
  CHECK(gradcheck::run(loss, {x}).max_rel_err < 1e-6);
}

TEST_CASE("channel_shuffle C=6 g=2 gives order 0,3,1,4,2,5") {
  std::vector<double> v(6);
  for (int c = 0; c < 6; ++c) v[static_cast<std::size_t>(c)] = c;
  Tensor x({1, 6, 1, 1}, v);
  CHECK(channel_shuffle(x, 2).data() == std::vector<double>{0, 3, 1, 4, 2, 5});
  CHECK(channel_shuffle(x, 1).data() == v);
  // shuffle(g) then shuffle(C/g) is the identity permutation
  CHECK(channel_shuffle(channel_shuffle(x, 2), 3).data() == v);
}

TEST_CASE("channel_shuffle matches reshape-transpose-flatten oracle") {
  const int C = 12, g = 3;
  std::vector<double> v(C);
  for (int c = 0; c < C; ++c) v[static_cast<std::size_t>(c)] = c;
  Tensor x({1, C, 1, 1}, v);
  auto got = channel_shuffle(x, g).data();
  // oracle: out[j*g + gi] = in[gi*(C/g) + j]
  const int per = C / g;
  for (int gi = 0; gi < g; ++gi)
    for (int j = 0; j < per; ++j)
      CHECK(got[static_cast<std::size_t>(j) * g + gi] == v[static_cast<std::size_t>(gi) * per + j]);
  CHECK_THROWS_AS(channel_shuffle(x, 5), std::runtime_error);
}

TEST_CASE("global_avgpool of a constant map returns the constant") {
  Tensor x = Tensor::full({2, 3, 4, 4}, 2.5);
  Tensor y = global_avgpool(x);
  CHECK(y.shape() == Shape{2, 3});
  for (double v : y.data()) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("maxpool2 forced max") {
  Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor y = maxpool2(x);
  CHECK(y.data() == std::vector<double>{4});
  Tensor odd({1, 1, 3, 3}, std::vector<double>(9, 0.0));
  CHECK_THROWS_AS(maxpool2(odd), std::runtime_error);
}

TEST_CASE("pool gradients vs finite differences") {
  Rng rng(47);
  Tensor x = random_tensor({2, 3, 4, 4}, rng, -1, 1, true);
  Tensor proj_gap = random_tensor({2, 3}, rng);
  auto loss_gap = [&] { return sum(mul(global_avgpool(x), proj_gap)); };
  CHECK(gradcheck::run(loss_gap, {x}).max_rel_err < 1e-6);
  Tensor proj_mp = random_tensor({2, 3, 2, 2}, rng);
  auto loss_mp = [&] { return sum(mul(maxpool2(x), proj_mp)); };
  CHECK(gradcheck::run(loss_mp, {x}).max_rel_err < 1e-4);
}

TEST_CASE("batchnorm train mode: already-normalized input passes through") {
  // per-channel mean 0, variance 1 by construction
  std::vector<double> v;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i) v.push_back(i < 2 ? 1.0 : -1.0);
  Tensor x({1, 2, 2, 2}, v);
  Tensor gamma = Tensor::full({2}, 1.0);
  Tensor beta = Tensor::zeros({2});
  auto r = batchnorm2d_train(x, gamma, beta, 1e-8);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(r.y.data()[i] == doctest::Approx(v[i]).epsilon(1e-6));
  CHECK(r.batch_mean[0] == doctest::Approx(0.0));
  CHECK(r.batch_var[0] == doctest::Approx(1.0));
}

TEST_CASE("batchnorm gamma=0 collapses to beta") {
  Rng rng(53);
  Tensor x = random_tensor({2, 3, 4, 4}, rng);
  Tensor gamma = Tensor::zeros({3});
  Tensor beta({3}, {0.5, -1.0, 2.0});
  auto r = batchnorm2d_train(x, gamma, beta, 1e-5);
  for (int c = 0; c < 3; ++c)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 16; ++i)
        CHECK(r.y.data()[(static_cast<std::size_t>(b) * 3 + c) * 16 + i] == beta.data()[c]);
}

TEST_CASE("batchnorm rejects zero-size batches and bad eps") {
  Tensor gamma = Tensor::full({2}, 1.0);
  Tensor beta = Tensor::zeros({2});
  Rng rng(5);
  Tensor x = random_tensor({1, 2, 2, 2}, rng);
  CHECK_THROWS_AS(batchnorm2d_train(x, gamma, beta, 0.0), std::runtime_error);
}

TEST_CASE("batchnorm gradient vs finite differences on random 2x3x4x4") {
  Rng rng(59);
  Tensor x = random_tensor({2, 3, 4, 4}, rng, -1, 1, true);
  Tensor gamma = random_tensor({3}, rng, 0.5, 1.5, true);
  Tensor beta = random_tensor({3}, rng, -0.5, 0.5, true);
  Tensor proj = random_tensor({2, 3, 4, 4}, rng);
  auto loss = [&] { return sum(mul(batchnorm2d_train(x, gamma, beta, 1e-5).y, proj)); };
  CHECK(gradcheck::run(loss, {x, gamma, beta}).max_rel_err < 1e-4);
}

TEST_CASE("cross entropy: uniform logits give ln C") {
  Tensor logits = Tensor::zeros({2, 4});
  Tensor loss = softmax_cross_entropy(logits, {1, 3});
  CHECK(loss.value() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy: saturated logit gives ~0 loss") {
  Tensor logits({1, 4}, {100, 0, 0, 0});
  CHECK(softmax_cross_entropy(logits, {0}).value() < 1e-9);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
  Tensor logits = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 3}), std::runtime_error);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1, 0}), std::runtime_error);
}

TEST_CASE("cross entropy gradient equals softmax minus one-hot") {
  Rng rng(61);
  Tensor logits = random_tensor({3, 4}, rng, -2, 2, true);
  const std::vector<int> labels{0, 2, 3};
  TapeScope scope;
  Tensor loss = softmax_cross_entropy(logits, labels);
  logits.zero_grad();
  scope.backward(loss);
  for (int b = 0; b < 3; ++b) {
    // row softmax
    double mx = -1e300, z = 0.0;
    for (int c = 0; c < 4; ++c) mx = std::max(mx, logits.data()[static_cast<std::size_t>(b) * 4 + c]);
    std::vector<double> p(4);
    for (int c = 0; c < 4; ++c) {
      p[static_cast<std::size_t>(c)] = std::exp(logits.data()[static_cast<std::size_t>(b) * 4 + c] - mx);
      z += p[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < 4; ++c) {
      const double soft = p[static_cast<std::size_t>(c)] / z;
      const double onehot = (c == labels[static_cast<std::size_t>(b)]) ? 1.0 : 0.0;
      CHECK(logits.grad()[static_cast<std::size_t>(b) * 4 + c] ==
            doctest::Approx((soft - onehot) / 3.0).epsilon(1e-9));
    }
  }
  auto loss_fn = [&] { return softmax_cross_entropy(logits, labels); };
  CHECK(gradcheck::run(loss_fn, {logits}).max_rel_err < 1e-4);
}
