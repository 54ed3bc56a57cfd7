#include <doctest.h>

#include <cmath>

#include "dnas/dataset.hpp"
#include "dnas/modules.hpp"
#include "dnas/nn_ops.hpp"
#include "dnas/optim.hpp"
#include "dnas/quantizers.hpp"
#include "grad_check.hpp"

using namespace dnas;
using namespace dnas::quant;

TEST_CASE("q_k grid values and tie rule") {
  CHECK(q_k(0.7, 1) == 1.0);
  CHECK(q_k(0.4, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(q_k(0.5, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));  // half away from zero
  for (int k = 1; k <= 8; ++k) {
    CHECK(q_k(0.0, k) == 0.0);
    CHECK(q_k(1.0, k) == 1.0);
  }
  CHECK_THROWS_AS(q_k(1.5, 4), std::runtime_error);
  CHECK_THROWS_AS(q_k(-0.5, 4), std::runtime_error);
  CHECK_THROWS_AS(q_k(0.5, 0), std::runtime_error);
  CHECK_THROWS_AS(q_k(0.5, 9), std::runtime_error);
}

TEST_CASE("q_k is nondecreasing") {
  Rng rng(5);
  for (int k = 1; k <= 8; ++k) {
    double prev_x = 0.0, prev_q = q_k(0.0, k);
    for (int i = 0; i < 500; ++i) {
      const double x = std::min(1.0, prev_x + rng.uniform01() * 0.01);
      const double q = q_k(x, k);
      CHECK(q >= prev_q);
      prev_x = x;
      prev_q = q;
    }
  }
}

TEST_CASE("q_k outputs land exactly on the grid") {
  Rng rng(7);
  for (int k = 1; k <= 8; ++k) {
    const double levels = static_cast<double>((1 << k) - 1);
    for (int i = 0; i < 1000; ++i) {
      const double q = q_k(rng.uniform01(), k);
      const double idx = std::round(q * levels);
      CHECK(q == idx / levels);
    }
  }
}

TEST_CASE("dorefa extreme and symmetry cases") {
  Tensor single({1}, {0.37});
  CHECK(dorefa_weights(single, 4).data() == std::vector<double>{1.0});
  Tensor pair({2}, {-0.8, 0.8});
  auto q = dorefa_weights(pair, 3).data();
  CHECK(q[0] == -1.0);
  CHECK(q[1] == 1.0);
}

TEST_CASE("dorefa worked example W=[0,1], k=2") {
  Tensor w({2}, {0.0, 1.0});
  auto q = dorefa_weights(w, 2).data();
  // tanh(0)/(2 tanh(1)) + 0.5 = 0.5 -> q_2 = 2/3 -> 2*(2/3)-1 = 1/3
  CHECK(q[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("dorefa all-zero tensor maps to zeros without dividing") {
  Tensor w({3}, {0.0, 0.0, 0.0});
  CHECK(dorefa_weights(w, 4).data() == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(dorefa_weights(Tensor({1, 0, 1}, {}), 4), std::runtime_error);
}

TEST_CASE("dorefa outputs lie on the 2^k-point grid in [-1,1]; k=32 is identity") {
  Rng rng(11);
  for (int k : {1, 2, 3, 4, 5, 6, 7, 8}) {
    std::vector<double> v(64);
    for (auto& x : v) x = rng.uniform(-2, 2);
    Tensor w({64}, v);
    auto q = dorefa_weights(w, k).data();
    const double levels = static_cast<double>((1 << k) - 1);
    for (double e : q) {
      CHECK(e >= -1.0);
      CHECK(e <= 1.0);
      const double idx = std::round((e + 1.0) / 2.0 * levels);
      CHECK(e == 2.0 * (idx / levels) - 1.0);
    }
  }
  std::vector<double> v(16);
  for (auto& x : v) x = rng.uniform(-2, 2);
  Tensor w({16}, v);
  CHECK(dorefa_weights(w, 32).data() == v);
}

TEST_CASE("pact_clip closed form") {
  Tensor alpha = Tensor::scalar(6.0);
  CHECK(pact_clip(Tensor({1}, {-3.0}), alpha).data()[0] == 0.0);   // 0.5(3-9+6)
  CHECK(pact_clip(Tensor({1}, {8.0}), alpha).data()[0] == 6.0);    // 0.5(8-2+6)
  CHECK(pact_clip(Tensor({1}, {3.0}), alpha).data()[0] == 3.0);
  CHECK_THROWS_AS(pact_clip(Tensor({1}, {1.0}), Tensor::scalar(-1.0)), std::runtime_error);
  // agrees with the abs formulation everywhere
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double a = rng.uniform(0.1, 5.0);
    const double x = rng.uniform(-6.0, 6.0);
    const double want = 0.5 * (std::abs(x) - std::abs(x - a) + a);
    const double got = pact_clip(Tensor({1}, {x}), Tensor::scalar(a)).data()[0];
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("pact_clip is nondecreasing in x") {
  Tensor alpha = Tensor::scalar(2.5);
  Rng rng(13);
  double prev_x = -5.0, prev_y = pact_clip(Tensor({1}, {prev_x}), alpha).data()[0];
  for (int i = 0; i < 300; ++i) {
    const double x = prev_x + rng.uniform01() * 0.1;
    const double y = pact_clip(Tensor({1}, {x}), alpha).data()[0];
    CHECK(y >= prev_y);
    prev_x = x;
    prev_y = y;
  }
}

TEST_CASE("pact_clip gradients: indicator in x, indicator in alpha") {
  Tensor alpha = Tensor::scalar(2.0, true);
  Tensor x({4}, {-1.0, 0.5, 1.5, 3.0}, true);
  TapeScope scope;
  Tensor y = pact_clip(x, alpha);
  Tensor loss = sum(y);
  x.zero_grad();
  alpha.zero_grad();
  scope.backward(loss);
  CHECK(x.grad() == std::vector<double>{0.0, 1.0, 1.0, 0.0});
  CHECK(alpha.grad() == std::vector<double>{1.0});  // only x=3 >= alpha
}

TEST_CASE("pact_quantize endpoints, worked example and grids") {
  Tensor alpha = Tensor::scalar(6.0);
  CHECK(pact_quantize(Tensor({1}, {6.0}), alpha, 3).data()[0] == 6.0);
  CHECK(pact_quantize(Tensor({1}, {0.0}), alpha, 3).data()[0] == 0.0);
  // q_2(0.5)*6 = (2/3)*6 = 4
  CHECK(pact_quantize(Tensor({1}, {3.0}), alpha, 2).data()[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(pact_quantize(Tensor({1}, {1.0}), Tensor::scalar(0.0), 2), std::runtime_error);

  Rng rng(17);
  for (int k : {1, 3, 5, 8}) {
    const double a = 3.7;
    Tensor al = Tensor::scalar(a);
    const double levels = static_cast<double>((1 << k) - 1);
    for (int i = 0; i < 500; ++i) {
      const double y = rng.uniform(0, a);
      const double q = pact_quantize(Tensor({1}, {y}), al, k).data()[0];
      const double idx = std::round(q / a * levels);
      CHECK(q == a * (idx / levels));
    }
  }
  // k=32 identity
  Tensor y({3}, {0.1, 2.2, 5.9});
  CHECK(pact_quantize(y, alpha, 32).data() == y.data());
}

TEST_CASE("straight-through gradients match the bypassed surrogate") {
  Rng rng(19);
  std::vector<double> wv(12);
  for (auto& v : wv) v = rng.uniform(-1.2, 1.2);
  Tensor w({12}, wv, true);
  Tensor proj({12}, std::vector<double>(12, 0.0));
  for (auto& v : proj.mutable_data()) v = rng.uniform(-1, 1);

  QuantRoundingBypass bypass;  // forward evaluates the STE surrogate directly
  auto loss = [&] { return sum(mul(dorefa_weights(w, 3), proj)); };
  CHECK(gradcheck::run(loss, {w}).max_rel_err < 1e-5);

  Tensor alpha = Tensor::scalar(1.3, true);
  std::vector<double> xv(12);
  for (auto& v : xv) v = rng.uniform(-1.0, 2.0);
  Tensor x({12}, xv, true);
  auto loss2 = [&] {
    return sum(mul(pact_quantize(pact_clip(x, alpha), alpha, 4), proj));
  };
  CHECK(gradcheck::run(loss2, {x, alpha}).max_rel_err < 1e-5);
}

TEST_CASE("quantized linear classifier reaches 100% on separable blobs within 200 steps") {
  for (int k : {2, 4}) {
    Dataset d = synth_blobs(64, 2, 6, 0.0, 33);
    const int feat = 36;
    Tensor w = Tensor::zeros({feat, 2}, true);
    Tensor b = Tensor::zeros({2}, true);
    Rng rng(97);
    for (auto& v : w.mutable_data()) v = 0.1 * rng.normal();
    SgdMomentum opt({{"w", w}, {"b", b}}, 0.1, 0.9);

    Tensor x = reshape(d.images, {64, feat});
    bool perfect = false;
    for (int step = 0; step < 200 && !perfect; ++step) {
      TapeScope scope;
      Tensor logits = add_rowvec(matmul(x, quant::dorefa_weights(w, k)), b);
      Tensor loss = softmax_cross_entropy(logits, d.labels);
      opt.zero_grad();
      scope.backward(loss);
      opt.step();
      // train accuracy with the quantized weights
      NoGradScope ng;
      Tensor lg = add_rowvec(matmul(x, quant::dorefa_weights(w, k)), b);
      int correct = 0;
      for (int i = 0; i < 64; ++i) {
        const int pred = lg.data()[static_cast<std::size_t>(i) * 2] >
                                 lg.data()[static_cast<std::size_t>(i) * 2 + 1]
                             ? 0
                             : 1;
        if (pred == d.labels[static_cast<std::size_t>(i)]) ++correct;
      }
      perfect = (correct == 64);
    }
    CHECK(perfect);
  }
}
