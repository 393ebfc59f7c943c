// Small architectures that keep tests fast.
#pragma once

#include "plantscan/model_spec.hpp"

namespace plantscan::testing {

inline ModelSpec tiny_spec(ModelKind kind, bool mask = false) {
  ModelSpec s;
  s.kind = kind;
  s.height = s.width = 8;
  s.class_names = {"a", "b", "c"};
  s.mask_channel = mask;
  s.cnn.filters = {2, 3};
  s.cnn.dense_units = 5;
  s.vit.patch_size = 4;
  s.vit.embed_dim = 4;
  s.vit.heads = 2;
  s.vit.depth = 1;
  s.vit.mlp_hidden = 6;
  return s;
}

/// The reduced CNN used for end-to-end checks on 64x64 tiles.
inline ModelSpec reduced_cnn_spec() {
  ModelSpec s;
  s.height = s.width = 64;
  s.class_names = {"BIT", "Hydro", "Natural_Gas", "Solar"};
  s.cnn.filters = {8, 16, 32};
  s.cnn.dense_units = 64;
  return s;
}

}  // namespace plantscan::testing
