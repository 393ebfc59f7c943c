#pragma once

#include "plantscan/layers/attention.hpp"
#include "plantscan/layers/layer_norm.hpp"

namespace plantscan {

/// Pre-norm transformer encoder block:
///   x1 = x + MHSA(LN1(x));  y = x1 + FC2(GELU(FC1(LN2(x1))))
template <typename Scalar>
class EncoderBlock {
 public:
  struct Cache {
    typename LayerNorm<Scalar>::Cache norm1, norm2;
    typename MultiHeadSelfAttention<Scalar>::Cache attention;
    typename Dense<Scalar>::Cache fc1, fc2;
    BasicTensor<Scalar> hidden;  // FC1 output, pre-GELU
  };

  EncoderBlock() = default;
  EncoderBlock(const std::string& name, std::size_t embed_dim, std::size_t heads,
               std::size_t mlp_hidden, Rng& rng)
      : norm1(name + "/norm1", embed_dim),
        attention(name + "/attention", embed_dim, heads, rng),
        norm2(name + "/norm2", embed_dim),
        fc1(name + "/mlp/fc1", embed_dim, mlp_hidden, rng),
        fc2(name + "/mlp/fc2", mlp_hidden, embed_dim, rng) {}

  std::size_t param_count() const {
    return norm1.param_count() + attention.param_count() + norm2.param_count() +
           fc1.param_count() + fc2.param_count();
  }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& x, Cache* cache = nullptr) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    auto x1 = x + attention.forward(norm1.forward(x, &c.norm1), &c.attention);
    c.hidden = fc1.forward(norm2.forward(x1, &c.norm2), &c.fc1);
    return x1 + fc2.forward(gelu(c.hidden), &c.fc2);
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& c) {
    auto dhidden = gelu_backward(fc2.backward(grad_out, c.fc2), c.hidden);
    auto dx1 = grad_out + norm2.backward(fc1.backward(dhidden, c.fc1), c.norm2);
    return dx1 + norm1.backward(attention.backward(dx1, c.attention), c.norm1);
  }

  LayerNorm<Scalar> norm1;
  MultiHeadSelfAttention<Scalar> attention;
  LayerNorm<Scalar> norm2;
  Dense<Scalar> fc1;
  Dense<Scalar> fc2;
};

}  // namespace plantscan
