#include "plantscan/tensor.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace plantscan;
using namespace plantscan::testing;

TEST_CASE("matmul identity and zero cases") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(eye, m) == m);

  Tensor row({1, 2}, {1, 2});
  Tensor zeros({2, 1}, {0, 0});
  const auto z = matmul(row, zeros);
  CHECK(z.shape() == Shape{1, 1});
  CHECK(z[0] == 0.0f);
}

TEST_CASE("matmul agrees with a triple loop") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_tensor<float>(rng, {5, 7});
    auto b = random_tensor<float>(rng, {7, 3});
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) <= 1e-6);
    CHECK(max_abs_diff(matmul_bt(a, transpose(b)), naive_matmul(a, b)) <= 1e-6);
    CHECK(max_abs_diff(matmul_at(transpose(a), b), naive_matmul(a, b)) <= 1e-6);
  }
}

TEST_CASE("matmul rejects mismatched shapes and names both") {
  Tensor a({2, 3}), b({2, 3});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x3]", msg.find("[2x3]") + 1) != std::string::npos);
  }
}

TEST_CASE("matmul is bit-deterministic") {
  Rng rng(11);
  auto a = random_tensor<float>(rng, {33, 65});
  auto b = random_tensor<float>(rng, {65, 17});
  const auto c1 = matmul(a, b), c2 = matmul(a, b);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0);
}

TEST_CASE("tensor rejects inconsistent shapes") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
}

TEST_CASE("softmax examples") {
  const auto even = softmax(Tensor({1, 4}, {0, 0, 0, 0}));
  for (float v : even.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-7));

  const auto big = softmax(Tensor({1, 2}, {1000, 0}));
  CHECK(big.all_finite());
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] >= 0.0f);
  CHECK(big[1] < 1e-30f);

  const auto ratio = softmax(TensorD({1, 3}, {std::log(1.0), std::log(2.0), std::log(3.0)}));
  CHECK(ratio[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(ratio[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(ratio[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and stay inside (0, 1)") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cols = 1 + rng.below(10);
    auto x = random_tensor<float>(rng, {6, cols}, -5, 5);
    const auto p = softmax(x);
    for (std::size_t r = 0; r < 6; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < cols; ++c) {
        CHECK(p(r, c) > 0.0f);
        if (cols > 1) CHECK(p(r, c) < 1.0f);
        s += p(r, c);
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("relu values and zero subgradient") {
  const auto y = relu(Tensor({3}, {-1, 0, 2}));
  CHECK(y == Tensor({3}, {0, 0, 2}));
  CHECK(relu(Tensor({2, 2}, -3.0f)) == Tensor({2, 2}, 0.0f));
  const auto g = relu_backward(Tensor({3}, 1.0f), Tensor({3}, {-1, 0, 2}));
  CHECK(g == Tensor({3}, {0, 0, 1}));
}

TEST_CASE("reduction gradients") {
  Rng rng(5);
  auto w = random_tensor<double>(rng, {3, 4, 2});
  CHECK(sum_backward(w) == TensorD(w.shape(), 1.0));
  TensorD v({2}, {3, -2});
  CHECK(half_squared_norm(v) == doctest::Approx(6.5));
  CHECK(half_squared_norm_backward(v) == TensorD({2}, {3, -2}));
  CHECK(relative_error(half_squared_norm_backward(w),
                       numeric_gradient(w, [&] { return half_squared_norm(w); })) <= 1e-6);
}

// 100 probe points per elementwise op, loss = sum(op(x) * r).
TEST_CASE("activation gradients at random probe points") {
  Rng rng(17);
  for (int probe = 0; probe < 100; ++probe) {
    auto x = away_from_zero<double>(rng, {1, 5}, 0.01);
    for (auto& v : x.values()) v *= 3.0;
    const auto r = random_tensor<double>(rng, {1, 5});

    const auto relu_fd = numeric_gradient(x, [&] { return projection(relu(x), r); });
    CHECK(relative_error(relu_backward(r, x), relu_fd) <= 1e-3);

    const auto gelu_fd = numeric_gradient(x, [&] { return projection(gelu(x), r); });
    CHECK(relative_error(gelu_backward(r, x), gelu_fd) <= 1e-3);

    const auto sm_fd = numeric_gradient(x, [&] { return projection(softmax(x), r); });
    CHECK(relative_error(softmax_backward(r, softmax(x)), sm_fd) <= 1e-3);
  }
}

TEST_CASE("matmul gradients") {
  Rng rng(23);
  for (auto [m, k, n] : {std::tuple{2, 3, 4}, {5, 1, 2}, {3, 6, 3}}) {
    auto a = random_tensor<double>(rng, {std::size_t(m), std::size_t(k)});
    auto b = random_tensor<double>(rng, {std::size_t(k), std::size_t(n)});
    const auto r = random_tensor<double>(rng, {std::size_t(m), std::size_t(n)});
    auto loss = [&] { return projection(matmul(a, b), r); };
    CHECK(relative_error(matmul_bt(r, b), numeric_gradient(a, loss)) <= 1e-3);
    CHECK(relative_error(matmul_at(a, r), numeric_gradient(b, loss)) <= 1e-3);
  }
}
