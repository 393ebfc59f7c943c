// A hand-wired classifier whose prediction is the input channel that is lit.
#pragma once

#include "plantscan/network.hpp"
#include "plantscan/training.hpp"

namespace plantscan::testing {

/// 2x2x4 input -> 1x1 conv (identity) -> pool -> dense (identity) -> head
/// (100 * identity). Predicts the channel holding the largest value.
inline Model channel_oracle_model() {
  ModelSpec spec;
  spec.height = spec.width = 2;
  spec.channels = 4;
  spec.class_names = {"BIT", "Hydro", "Natural Gas", "Solar"};
  spec.cnn.filters = {4};
  spec.cnn.kernel_size = 1;
  spec.cnn.dense_units = 4;
  auto model = build_cnn(spec, 0);
  auto& conv = model.cnn()->convs[0];
  conv.kernel.value.fill(0.0f);
  conv.bias.value.fill(0.0f);
  model.cnn()->hidden.weights.value.fill(0.0f);
  model.cnn()->hidden.bias.value.fill(0.0f);
  model.head.weights.value.fill(0.0f);
  model.head.bias.value.fill(0.0f);
  for (std::size_t k = 0; k < 4; ++k) {
    conv.kernel.value[k * 4 + k] = 1.0f;
    model.cnn()->hidden.weights.value(k, k) = 1.0f;
    model.head.weights.value(k, k) = 100.0f;
  }
  return model;
}

inline Example lit_channel(std::size_t channel, std::size_t label) {
  Tensor x({2, 2, 4});
  for (std::size_t px = 0; px < 4; ++px) x[px * 4 + channel] = 1.0f;
  return {x, label};
}

}  // namespace plantscan::testing
