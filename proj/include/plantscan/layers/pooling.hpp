#pragma once

#include "plantscan/tensor.hpp"

namespace plantscan {

/// 2x2 max pooling with stride 2 over an H x W x C image.
///
/// Ties go to the first maximum in row-major window order, and backward
/// routes each window's gradient to that single position.
template <typename Scalar>
class MaxPool2D {
 public:
  struct Cache {
    Shape input_shape;
    std::vector<std::size_t> argmax;  // flat input index per output element
  };

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& x, Cache* cache = nullptr) const {
    detail::require_rank(x, 3, "MaxPool2D");
    const std::size_t h = x.dim(0), w = x.dim(1), ch = x.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
      throw ShapeError("MaxPool2D: spatial dimensions must be even, got " +
                       shape_string(x.shape()));
    }
    BasicTensor<Scalar> y({h / 2, w / 2, ch});
    std::vector<std::size_t> arg(y.size());
    for (std::size_t r = 0; r < h / 2; ++r) {
      for (std::size_t c = 0; c < w / 2; ++c) {
        for (std::size_t k = 0; k < ch; ++k) {
          std::size_t best = ((2 * r) * w + 2 * c) * ch + k;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((2 * r + dy) * w + 2 * c + dx) * ch + k;
              if (x[idx] > x[best]) best = idx;
            }
          }
          const std::size_t o = (r * (w / 2) + c) * ch + k;
          y[o] = x[best];
          arg[o] = best;
        }
      }
    }
    if (cache) {
      cache->input_shape = x.shape();
      cache->argmax = std::move(arg);
    }
    return y;
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& cache) const {
    if (grad_out.size() != cache.argmax.size()) {
      throw ShapeError("MaxPool2D backward: unexpected gradient shape " +
                       shape_string(grad_out.shape()));
    }
    BasicTensor<Scalar> dx(cache.input_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) dx[cache.argmax[i]] += grad_out[i];
    return dx;
  }
};

}  // namespace plantscan
