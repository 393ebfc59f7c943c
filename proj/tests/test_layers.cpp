#include "plantscan/layers/conv2d.hpp"
#include "plantscan/layers/encoder.hpp"
#include "plantscan/layers/patch_embedding.hpp"
#include "plantscan/layers/pooling.hpp"
#include "support/gradient_suite.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace plantscan;
using namespace plantscan::testing;

TEST_CASE("every layer backward matches finite differences") {
  const auto cases = gradient_suite();
  std::map<std::string, int> per_layer;
  for (const auto& c : cases) {
    INFO(c.layer << " " << c.shape << " error " << c.error);
    CHECK(c.error <= 1e-3);
    ++per_layer[c.layer];
  }
  CHECK(per_layer.size() == 8);
  for (const auto& [layer, n] : per_layer) {
    INFO(layer);
    CHECK(n >= 3);
  }
}

TEST_CASE("float layers agree with finite differences at float precision") {
  Rng rng(31);
  Conv2D<float> conv("conv", 2, 3, 3, rng);
  auto x = random_tensor<float>(rng, {5, 5, 2});
  Conv2D<float>::Cache cache;
  const auto y = conv.forward(x, &cache);
  const auto r = random_tensor<float>(rng, y.shape());
  const auto dx = conv.backward(r, cache);
  auto loss = [&] { return projection(conv.forward(x), r); };
  CHECK(relative_error(dx, numeric_gradient(x, loss)) <= 1e-3);
  CHECK(relative_error(conv.kernel.grad, numeric_gradient(conv.kernel.value, loss)) <= 1e-3);
}

TEST_CASE("conv2d on an all-ones image with an all-ones filter") {
  Rng rng(1);
  Conv2D<float> conv("c", 1, 1, 3, rng);
  conv.kernel.value.fill(1.0f);
  const auto y = conv.forward(Tensor({4, 4, 1}, 1.0f));
  CHECK(y(1, 1, 0) == 9.0f);
  CHECK(y(2, 2, 0) == 9.0f);
  CHECK(y(0, 0, 0) == 4.0f);
  CHECK(y(0, 3, 0) == 4.0f);
  CHECK(y(3, 0, 0) == 4.0f);
  CHECK(y(3, 3, 0) == 4.0f);
  CHECK(y(0, 1, 0) == 6.0f);
  CHECK(y(1, 0, 0) == 6.0f);
  CHECK(y(3, 2, 0) == 6.0f);
  CHECK(y(2, 3, 0) == 6.0f);
}

TEST_CASE("conv2d keeps spatial size for odd kernels") {
  Rng rng(2);
  for (std::size_t k : {1, 3, 5, 7}) {
    Conv2D<float> conv("c", 2, 3, k, rng);
    CHECK(conv.forward(Tensor({9, 6, 2})).shape() == Shape{9, 6, 3});
    CHECK(conv.param_count() == k * k * 2 * 3 + 3);
  }
  Conv2D<float> first("conv2d_1", 3, 16, 3, rng);
  CHECK(first.forward(Tensor({256, 256, 3})).shape() == Shape{256, 256, 16});
  CHECK(first.param_count() == 448);
}

TEST_CASE("conv2d matches a nested-loop oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    Conv2D<float> conv("c", 2, 3, 3, rng);
    for (auto& v : conv.bias.value.values()) v = static_cast<float>(rng.uniform(-1, 1));
    const auto x = random_tensor<float>(rng, {6, 6, 2});
    CHECK(max_abs_diff(conv.forward(x), naive_conv2d(x, conv.kernel.value, conv.bias.value)) <=
          1e-5);
  }
}

TEST_CASE("conv2d rejects bad configurations") {
  Rng rng(4);
  Conv2D<float> conv("c", 3, 4, 3, rng);
  CHECK_THROWS_AS(conv.forward(Tensor({4, 4, 2})), ShapeError);
  CHECK_THROWS_AS(Conv2D<float>("c", 3, 4, 2, rng), std::invalid_argument);
}

TEST_CASE("maxpool2d examples") {
  MaxPool2D<float> pool;
  const auto y = pool.forward(Tensor({2, 2, 1}, {1, 2, 3, 4}));
  CHECK(y.shape() == Shape{1, 1, 1});
  CHECK(y[0] == 4.0f);
  CHECK(pool.forward(Tensor({6, 4, 2}, 0.7f)) == Tensor({3, 2, 2}, 0.7f));
  CHECK(pool.forward(Tensor({256, 256, 16})).shape() == Shape{128, 128, 16});
  CHECK_THROWS_AS(pool.forward(Tensor({3, 4, 1})), ShapeError);
}

TEST_CASE("maxpool2d covers its window and routes gradient once") {
  Rng rng(5);
  MaxPool2D<float> pool;
  const auto x = random_tensor<float>(rng, {8, 6, 3});
  MaxPool2D<float>::Cache cache;
  const auto y = pool.forward(x, &cache);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) CHECK(y(r, c, k) >= x(2 * r + dy, 2 * c + dx, k));

  const auto g = random_tensor<float>(rng, y.shape());
  const auto dx = pool.backward(g, cache);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 3; ++k) {
        float mass = 0;
        int nonzero = 0;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t ddx = 0; ddx < 2; ++ddx) {
            const float v = dx(2 * r + dy, 2 * c + ddx, k);
            mass += v;
            nonzero += v != 0.0f;
          }
        CHECK(mass == g(r, c, k));
        CHECK(nonzero == 1);
      }
}

TEST_CASE("maxpool2d ties go to the first element in row-major order") {
  MaxPool2D<float> pool;
  MaxPool2D<float>::Cache cache;
  pool.forward(Tensor({2, 2, 1}, {1, 5, 5, 5}), &cache);
  const auto dx = pool.backward(Tensor({1, 1, 1}, {2.0f}), cache);
  CHECK(dx == Tensor({2, 2, 1}, {0, 2, 0, 0}));
}

TEST_CASE("dense examples and parameter counts") {
  Rng rng(6);
  Dense<float> dense("d", 3, 3, rng);
  dense.weights.value = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor x({2, 3}, {1, -2, 3, 0.5f, 4, -1});
  CHECK(dense.forward(x) == x);
  CHECK_THROWS_AS(dense.forward(Tensor({2, 4})), ShapeError);

  CHECK(Dense<float>("dense_1", 65536, 256, rng).param_count() == 16777472);
  CHECK(Dense<float>("dense_2", 256, 4, rng).param_count() == 1028);
}

TEST_CASE("layer norm examples") {
  LayerNorm<double> ln("ln", 4);
  const auto zeros = ln.forward(TensorD({1, 4}, 3.0));
  for (double v : zeros.values()) CHECK(v == 0.0);

  LayerNorm<double> ln2("ln", 2);
  const auto y = ln2.forward(TensorD({1, 2}, {1, -1}));
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("layer norm output statistics follow gain and shift") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 8 + rng.below(24);
    const double gain = rng.uniform(-3, 3), shift = rng.uniform(-2, 2);
    LayerNorm<double> ln("ln", d);
    ln.gain.value.fill(gain);
    ln.shift.value.fill(shift);
    const auto x = random_tensor<double>(rng, {3, d}, -5, 5);
    const auto y = ln.forward(x);
    for (std::size_t r = 0; r < 3; ++r) {
      double mean = 0, in_mean = 0, in_var = 0;
      for (std::size_t j = 0; j < d; ++j) {
        mean += y(r, j);
        in_mean += x(r, j);
      }
      mean /= double(d);
      in_mean /= double(d);
      double var = 0;
      for (std::size_t j = 0; j < d; ++j) {
        var += (y(r, j) - mean) * (y(r, j) - mean);
        in_var += (x(r, j) - in_mean) * (x(r, j) - in_mean);
      }
      var /= double(d);
      in_var /= double(d);
      CHECK(mean == doctest::Approx(shift).epsilon(1e-9));
      // The epsilon inside the root shrinks the spread by sqrt(var / (var + eps)).
      CHECK(std::sqrt(var) ==
            doctest::Approx(std::abs(gain) * std::sqrt(in_var / (in_var + 1e-5))).epsilon(1e-9));
      CHECK(std::sqrt(var) == doctest::Approx(std::abs(gain)).epsilon(1e-4));
    }
  }
}

namespace {

// Scalar-loop attention straight from the definition.
TensorD attention_oracle(const MultiHeadSelfAttention<float>& m, const Tensor& x) {
  const std::size_t t = x.dim(0), d = x.dim(1), h = m.heads(), dh = d / h;
  auto project = [&](const Dense<float>& layer, const TensorD& in) {
    TensorD out({in.dim(0), layer.out_features()});
    for (std::size_t i = 0; i < in.dim(0); ++i)
      for (std::size_t o = 0; o < layer.out_features(); ++o) {
        double acc = layer.bias.value[o];
        for (std::size_t j = 0; j < in.dim(1); ++j) acc += in(i, j) * layer.weights.value(j, o);
        out(i, o) = acc;
      }
    return out;
  };
  const auto xd = x.cast<double>();
  const auto q = project(m.query, xd), k = project(m.key, xd), v = project(m.value, xd);
  TensorD context({t, d});
  for (std::size_t head = 0; head < h; ++head) {
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<double> s(t);
      double mx = -1e300;
      for (std::size_t j = 0; j < t; ++j) {
        double dot = 0;
        for (std::size_t e = 0; e < dh; ++e) dot += q(i, head * dh + e) * k(j, head * dh + e);
        s[j] = dot / std::sqrt(double(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (auto& sj : s) z += (sj = std::exp(sj - mx));
      for (std::size_t e = 0; e < dh; ++e) {
        double acc = 0;
        for (std::size_t j = 0; j < t; ++j) acc += s[j] / z * v(j, head * dh + e);
        context(i, head * dh + e) = acc;
      }
    }
  }
  return project(m.output, context);
}

}  // namespace

TEST_CASE("attention matches a scalar-loop oracle") {
  Rng rng(8);
  for (auto [d, heads] : {std::pair<std::size_t, std::size_t>{8, 2}, {6, 3}, {4, 1}}) {
    MultiHeadSelfAttention<float> mhsa("a", d, heads, rng);
    for (auto* p : {&mhsa.query.bias, &mhsa.key.bias, &mhsa.value.bias, &mhsa.output.bias}) {
      for (auto& v : p->value.values()) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    }
    const auto x = random_tensor<float>(rng, {4, d});
    CHECK(max_abs_diff(mhsa.forward(x), attention_oracle(mhsa, x)) <= 1e-5);
  }
}

TEST_CASE("attention on a single token and on identical tokens") {
  Rng rng(9);
  MultiHeadSelfAttention<float> mhsa("a", 8, 4, rng);
  for (auto* p : {&mhsa.value.bias, &mhsa.output.bias}) {
    for (auto& v : p->value.values()) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  }
  const auto token = random_tensor<float>(rng, {1, 8});
  MultiHeadSelfAttention<float>::Cache cache;
  const auto y = mhsa.forward(token, &cache);
  for (const auto& w : cache.weights) CHECK(w[0] == 1.0f);
  CHECK(y == mhsa.output.forward(mhsa.value.forward(token)));

  Tensor twins({2, 8});
  for (std::size_t j = 0; j < 8; ++j) twins(0, j) = twins(1, j) = token[j];
  mhsa.forward(twins, &cache);
  for (const auto& w : cache.weights) {
    for (float v : w.values()) CHECK(v == 0.5f);
  }
}

TEST_CASE("attention rows sum to one for every head") {
  Rng rng(10);
  MultiHeadSelfAttention<float> mhsa("a", 12, 3, rng);
  MultiHeadSelfAttention<float>::Cache cache;
  mhsa.forward(random_tensor<float>(rng, {7, 12}, -3, 3), &cache);
  CHECK(cache.weights.size() == 3);
  for (const auto& w : cache.weights) {
    for (std::size_t r = 0; r < 7; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 7; ++c) s += w(r, c);
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }
  CHECK_THROWS_AS(MultiHeadSelfAttention<float>("a", 10, 3, rng), std::invalid_argument);
}

TEST_CASE("attention is permutation equivariant over non-CLS tokens") {
  Rng rng(11);
  MultiHeadSelfAttention<float> mhsa("a", 8, 2, rng);
  const auto x = random_tensor<float>(rng, {6, 8});
  std::vector<std::size_t> perm{0, 3, 5, 1, 4, 2};
  Tensor xp(x.shape());
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 8; ++j) xp(i, j) = x(perm[i], j);
  const auto y = mhsa.forward(x), yp = mhsa.forward(xp);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(yp(i, j) - y(perm[i], j)) <= 1e-5);
}

TEST_CASE("patch embedding token counts and layout") {
  Rng rng(12);
  PatchEmbedding<float> big("pe", 256, 256, 3, 16, 64, rng);
  CHECK(big.num_tokens() == 257);
  CHECK(big.forward(Tensor({256, 256, 3})).shape() == Shape{257, 64});
  PatchEmbedding<float> small("pe", 64, 64, 3, 16, 64, rng);
  CHECK(small.forward(Tensor({64, 64, 3})).shape() == Shape{17, 64});
  CHECK_THROWS_AS(PatchEmbedding<float>("pe", 60, 64, 3, 16, 8, rng), std::invalid_argument);
  CHECK_THROWS_AS(small.forward(Tensor({32, 64, 3})), ShapeError);

  const auto tokens = small.forward(Tensor({64, 64, 3}));
  for (std::size_t t = 1; t < 17; ++t)
    for (std::size_t j = 0; j < 64; ++j) CHECK(tokens(t, j) == small.position.value(t, j));
  for (std::size_t j = 0; j < 64; ++j) {
    CHECK(tokens(0, j) == small.position.value(0, j) + small.cls.value[j]);
  }
}

TEST_CASE("patches are flattened row-major within a row-major grid") {
  Rng rng(13);
  PatchEmbedding<float> pe("pe", 4, 6, 1, 2, 3, rng);
  Tensor image({4, 6, 1});
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = float(i);
  const auto patches = pe.extract_patches(image);
  CHECK(patches.shape() == Shape{6, 4});
  // Patch 4 is grid row 1, column 1: pixels (2,2), (2,3), (3,2), (3,3).
  CHECK(patches(4, 0) == 14.0f);
  CHECK(patches(4, 1) == 15.0f);
  CHECK(patches(4, 2) == 20.0f);
  CHECK(patches(4, 3) == 21.0f);
}
