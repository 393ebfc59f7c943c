// Finite-difference checks of every layer's backward pass in double
// precision. Each case reports the worst relative error over the input
// gradient and every parameter gradient.
#pragma once

#include "plantscan/layers/conv2d.hpp"
#include "plantscan/layers/encoder.hpp"
#include "plantscan/layers/patch_embedding.hpp"
#include "plantscan/layers/pooling.hpp"
#include "plantscan/loss.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>
#include <vector>

namespace plantscan::testing {

struct GradientCase {
  std::string layer;
  std::string shape;
  double error = 0;
};

inline void randomize(const ParameterList<double>& params, Rng& rng, double scale = 0.5) {
  for (auto* p : params) {
    for (auto& v : p->value.values()) v = rng.uniform(-scale, scale);
  }
}

/// loss = sum(forward(x) * r); compares backward(r) with central differences.
template <typename Layer>
double layer_gradient_error(Layer& layer, TensorD x, const ParameterList<double>& params,
                            Rng& rng, double eps = 1e-3) {
  typename Layer::Cache cache;
  const auto y = layer.forward(x, &cache);
  const auto r = random_tensor<double>(rng, y.shape());
  zero_gradients(params);
  const auto dx = layer.backward(r, cache);
  auto loss = [&] { return projection(layer.forward(x), r); };
  double worst = relative_error(dx, numeric_gradient(x, loss, eps));
  for (auto* p : params) {
    worst = std::max(worst, relative_error(p->grad, numeric_gradient(p->value, loss, eps)));
  }
  return worst;
}

/// Distinct, well-separated values so a small perturbation never moves an
/// argmax.
inline TensorD spread_tensor(Rng& rng, Shape shape) {
  TensorD t(std::move(shape));
  std::vector<double> v(t.size());
  std::iota(v.begin(), v.end(), 0.0);
  rng.shuffle(std::span<double>(v));
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = 0.05 * v[i] - 0.5;
  return t;
}

inline std::vector<GradientCase> gradient_suite(std::uint64_t seed = 2024) {
  Rng rng(seed);
  std::vector<GradientCase> out;
  auto dims = [](std::initializer_list<std::size_t> d) { return shape_string(Shape(d)); };

  for (auto [h, w, cin, k, cout] : {std::array<std::size_t, 5>{5, 5, 2, 3, 3},
                                    {4, 6, 1, 3, 2},
                                    {6, 4, 3, 5, 2},
                                    {3, 3, 2, 1, 4}}) {
    Conv2D<double> conv("conv", cin, cout, k, rng);
    randomize({&conv.kernel, &conv.bias}, rng);
    out.push_back({"conv2d", dims({h, w, cin}) + " k" + std::to_string(k),
                   layer_gradient_error(conv, random_tensor<double>(rng, {h, w, cin}),
                                        {&conv.kernel, &conv.bias}, rng)});
  }

  for (auto [h, w, c] : {std::array<std::size_t, 3>{4, 4, 1}, {2, 6, 3}, {6, 4, 2}}) {
    MaxPool2D<double> pool;
    out.push_back({"maxpool2d", dims({h, w, c}),
                   layer_gradient_error(pool, spread_tensor(rng, {h, w, c}), {}, rng)});
  }

  for (auto [b, in, o] : {std::array<std::size_t, 3>{1, 3, 2}, {4, 5, 3}, {2, 8, 1}}) {
    Dense<double> dense("dense", in, o, rng);
    randomize({&dense.weights, &dense.bias}, rng);
    out.push_back({"dense", dims({b, in}) + "->" + std::to_string(o),
                   layer_gradient_error(dense, random_tensor<double>(rng, {b, in}),
                                        {&dense.weights, &dense.bias}, rng)});
  }

  for (auto [r, d] : {std::array<std::size_t, 2>{1, 4}, {3, 6}, {5, 3}}) {
    LayerNorm<double> ln("ln", d);
    randomize({&ln.gain, &ln.shift}, rng, 1.0);
    out.push_back({"layer_norm", dims({r, d}),
                   layer_gradient_error(ln, random_tensor<double>(rng, {r, d}),
                                        {&ln.gain, &ln.shift}, rng)});
  }

  for (auto [t, d, heads] : {std::array<std::size_t, 3>{1, 4, 1}, {3, 4, 2}, {5, 6, 3}}) {
    MultiHeadSelfAttention<double> mhsa("mhsa", d, heads, rng);
    ParameterList<double> params{&mhsa.query.weights, &mhsa.query.bias, &mhsa.key.weights,
                                 &mhsa.key.bias,      &mhsa.value.weights, &mhsa.value.bias,
                                 &mhsa.output.weights, &mhsa.output.bias};
    randomize(params, rng);
    out.push_back({"mhsa", dims({t, d}) + " heads " + std::to_string(heads),
                   layer_gradient_error(mhsa, random_tensor<double>(rng, {t, d}), params, rng)});
  }

  for (auto [h, w, c, p, d] : {std::array<std::size_t, 5>{4, 4, 1, 2, 3},
                               {6, 4, 2, 2, 4},
                               {8, 8, 3, 4, 5}}) {
    PatchEmbedding<double> pe("pe", h, w, c, p, d, rng);
    ParameterList<double> params{&pe.projection, &pe.bias, &pe.position, &pe.cls};
    randomize(params, rng);
    out.push_back({"patch_embedding", dims({h, w, c}) + " p" + std::to_string(p),
                   layer_gradient_error(pe, random_tensor<double>(rng, {h, w, c}), params, rng)});
  }

  for (auto [t, d, heads, hidden] : {std::array<std::size_t, 4>{3, 4, 2, 6},
                                     {5, 6, 3, 4},
                                     {2, 3, 1, 3}}) {
    EncoderBlock<double> block("block", d, heads, hidden, rng);
    ParameterList<double> params{
        &block.norm1.gain,          &block.norm1.shift,          &block.attention.query.weights,
        &block.attention.query.bias, &block.attention.key.weights, &block.attention.key.bias,
        &block.attention.value.weights, &block.attention.value.bias,
        &block.attention.output.weights, &block.attention.output.bias, &block.norm2.gain,
        &block.norm2.shift,         &block.fc1.weights,          &block.fc1.bias,
        &block.fc2.weights,         &block.fc2.bias};
    randomize(params, rng);
    out.push_back({"encoder_block", dims({t, d}) + " heads " + std::to_string(heads),
                   layer_gradient_error(block, random_tensor<double>(rng, {t, d}), params, rng)});
  }

  for (auto [n, c] : {std::array<std::size_t, 2>{1, 3}, {4, 4}, {6, 2}}) {
    auto logits = random_tensor<double>(rng, {n, c}, -2, 2);
    std::vector<std::size_t> labels(n);
    for (auto& y : labels) y = static_cast<std::size_t>(rng.below(c));
    const auto analytic = sparse_ce_softmax_grad(softmax(logits), std::span<const std::size_t>(labels));
    const auto numeric = numeric_gradient(
        logits, [&] { return sparse_ce_loss(softmax(logits), std::span<const std::size_t>(labels)); });
    out.push_back({"softmax_cross_entropy", dims({n, c}), relative_error(analytic, numeric)});
  }
  return out;
}

}  // namespace plantscan::testing
