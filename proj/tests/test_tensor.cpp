#include <doctest.h>

#include <cmath>
#include <limits>

#include "dnas/rng.hpp"
#include "dnas/tensor.hpp"
#include "grad_check.hpp"

using namespace dnas;

TEST_CASE("matmul identity and zero") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor z({2, 2}, {0, 0, 0, 0});
  CHECK(matmul(a, eye).data() == std::vector<double>{1, 2, 3, 4});
  CHECK(matmul(a, z).data() == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("matmul shape mismatch reports both shapes") {
  Tensor a({2, 3}, std::vector<double>(6, 1.0));
  Tensor b({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), std::runtime_error);
}

TEST_CASE("matmul gradient matches finite differences on random 3x4 * 4x2") {
  Rng rng(7);
  std::vector<double> av(12), bv(8);
  for (auto& v : av) v = rng.uniform(-1, 1);
  for (auto& v : bv) v = rng.uniform(-1, 1);
  Tensor a({3, 4}, av, true);
  Tensor b({4, 2}, bv, true);
  auto loss = [&] { return sum(matmul(a, b)); };
  auto rep = gradcheck::run(loss, {a, b});
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("backward of sum gives ones; sum of squares gives 2x") {
  Tensor x({3}, {1.0, -2.0, 0.5}, true);
  {
    TapeScope scope;
    Tensor loss = sum(x);
    x.zero_grad();
    scope.backward(loss);
    CHECK(x.grad() == std::vector<double>{1, 1, 1});
  }
  {
    TapeScope scope;
    Tensor loss = sum(mul(x, x));
    x.zero_grad();
    scope.backward(loss);
    CHECK(x.grad() == std::vector<double>{2.0, -4.0, 1.0});
  }
}

TEST_CASE("backward requires a scalar recorded on the tape") {
  Tensor x({2}, {1.0, 2.0}, true);
  TapeScope scope;
  Tensor y = scale(x, 2.0);
  CHECK_THROWS_AS(scope.backward(y), std::runtime_error);  // non-scalar
  Tensor detached = Tensor::scalar(1.0);
  CHECK_THROWS_AS(scope.backward(detached), std::runtime_error);  // not on tape
}

TEST_CASE("gradients accumulate over fan-out") {
  Tensor x({2}, {3.0, 4.0}, true);
  TapeScope scope;
  Tensor y = add(x, x);  // dy/dx = 2
  Tensor loss = sum(y);
  x.zero_grad();
  scope.backward(loss);
  CHECK(x.grad() == std::vector<double>{2.0, 2.0});
}

TEST_CASE("relu sign cases and subgradient at zero") {
  Tensor x({3}, {-1.0, 0.0, 2.0}, true);
  TapeScope scope;
  Tensor y = relu(x);
  CHECK(y.data() == std::vector<double>{0.0, 0.0, 2.0});
  Tensor loss = sum(y);
  x.zero_grad();
  scope.backward(loss);
  CHECK(x.grad() == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("softmax1d sums to one and is shift invariant") {
  Tensor a({3}, {0.3, -1.2, 2.0});
  Tensor b({3}, {100.3, 98.8, 102.0});
  auto pa = softmax1d(a).data();
  auto pb = softmax1d(b).data();
  double s = 0.0;
  for (double v : pa) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
}

TEST_CASE("weighted_sum and dot_const backward") {
  Rng rng(11);
  std::vector<double> mv{0.2, 0.3, 0.5};
  Tensor mask({3}, mv, true);
  std::vector<Tensor> parts;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> v(4);
    for (auto& x : v) x = rng.uniform(-1, 1);
    parts.push_back(Tensor({4}, v, true));
  }
  auto loss = [&] { return sum(weighted_sum(mask, parts)); };
  std::vector<Tensor> params{mask, parts[0], parts[1], parts[2]};
  CHECK(gradcheck::run(loss, params).max_rel_err < 1e-8);

  auto loss2 = [&] { return dot_const(mask, {5.0, 3.0, 2.0}, 1.0); };
  auto rep2 = gradcheck::run(loss2, {mask});
  CHECK(rep2.max_rel_err < 1e-9);
  {
    TapeScope scope;
    Tensor c = dot_const(mask, {5.0, 3.0, 2.0}, 1.0);
    mask.zero_grad();
    scope.backward(c);
    CHECK(mask.grad() == std::vector<double>{5.0, 3.0, 2.0});
  }
}

TEST_CASE("scalar chain: log, pow, mul") {
  Tensor x = Tensor::scalar(3.0, true);
  Tensor y = Tensor::scalar(2.0, true);
  auto loss = [&] { return mul(y, pow_const(log_op(x), 0.6)); };
  CHECK(gradcheck::run(loss, {x, y}).max_rel_err < 1e-8);
  CHECK(loss().value() == doctest::Approx(2.0 * std::pow(std::log(3.0), 0.6)));
}

TEST_CASE("max_abs routes subgradient to first argmax") {
  Tensor x({4}, {1.0, -3.0, 2.0, 3.0}, true);  // first max-|.| entry is index 1
  TapeScope scope;
  Tensor m = max_abs(x);
  CHECK(m.value() == 3.0);
  x.zero_grad();
  scope.backward(m);
  CHECK(x.grad() == std::vector<double>{0.0, -1.0, 0.0, 0.0});
}

TEST_CASE("rng determinism: same seed, same stream; state round-trips") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
  const std::string state = a.save_state();
  const double expect_gumbel = a.gumbel();
  Rng c(0);
  c.load_state(state);
  CHECK(c.gumbel() == expect_gumbel);
}

TEST_CASE("rng gumbel draws stay finite") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) CHECK(std::isfinite(rng.gumbel()));
}

TEST_CASE("tensor invariants: shape/data length and finiteness checks") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::runtime_error);
  Tensor bad({2}, {1.0, std::numeric_limits<double>::infinity()});
  CHECK_FALSE(bad.all_finite());
  CHECK_THROWS_AS(bad.check_finite("test"), std::runtime_error);
}
