#pragma once

#include "plantscan/parameter.hpp"

namespace plantscan {

/// Fully connected layer, y = x W + b, on rows of x[B x in].
template <typename Scalar>
class Dense {
 public:
  struct Cache {
    BasicTensor<Scalar> input;
  };

  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
      : weights(name + "/kernel", glorot_uniform<Scalar>(rng, {in, out}, in, out)),
        bias(name + "/bias", BasicTensor<Scalar>({out})) {}

  std::size_t in_features() const { return weights.value.dim(0); }
  std::size_t out_features() const { return weights.value.dim(1); }
  std::size_t param_count() const { return weights.value.size() + bias.value.size(); }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& x, Cache* cache = nullptr) const {
    detail::require_rank(x, 2, "Dense");
    if (x.dim(1) != in_features()) {
      throw ShapeError("Dense: input " + shape_string(x.shape()) + " does not match " +
                       std::to_string(in_features()) + " input features");
    }
    auto y = matmul(x, weights.value);
    add_row_vector(y, bias.value);
    if (cache) cache->input = x;
    return y;
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& cache) {
    accumulate_matmul_at(cache.input, grad_out, weights.grad);
    accumulate_column_sums(grad_out, bias.grad);
    return matmul_bt(grad_out, weights.value);
  }

  Parameter<Scalar> weights;
  Parameter<Scalar> bias;
};

}  // namespace plantscan
