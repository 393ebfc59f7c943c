#pragma once

#include "plantscan/parameter.hpp"

namespace plantscan {

/// Per-row normalization to zero mean and unit variance followed by an
/// elementwise affine map. Variance is the biased estimator; eps = 1e-5.
template <typename Scalar>
class LayerNorm {
 public:
  static constexpr double kEpsilon = 1e-5;

  struct Cache {
    BasicTensor<Scalar> normalized;
    std::vector<Scalar> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t dim)
      : gain(name + "/gamma", BasicTensor<Scalar>({dim}, Scalar(1))),
        shift(name + "/beta", BasicTensor<Scalar>({dim})) {}

  std::size_t dim() const { return gain.value.size(); }
  std::size_t param_count() const { return 2 * dim(); }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& x, Cache* cache = nullptr) const {
    if (x.cols() != dim()) {
      throw ShapeError("LayerNorm: input " + shape_string(x.shape()) + " does not match width " +
                       std::to_string(dim()));
    }
    const std::size_t d = dim();
    BasicTensor<Scalar> xhat(x.shape());
    BasicTensor<Scalar> y(x.shape());
    std::vector<Scalar> inv(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const Scalar* in = x.data() + r * d;
      Scalar mean = 0;
      for (std::size_t j = 0; j < d; ++j) mean += in[j];
      mean /= static_cast<Scalar>(d);
      Scalar var = 0;
      for (std::size_t j = 0; j < d; ++j) var += (in[j] - mean) * (in[j] - mean);
      var /= static_cast<Scalar>(d);
      inv[r] = Scalar(1) / std::sqrt(var + static_cast<Scalar>(kEpsilon));
      for (std::size_t j = 0; j < d; ++j) {
        const Scalar n = (in[j] - mean) * inv[r];
        xhat[r * d + j] = n;
        y[r * d + j] = n * gain.value[j] + shift.value[j];
      }
    }
    if (cache) {
      cache->normalized = std::move(xhat);
      cache->inv_std = std::move(inv);
    }
    return y;
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& cache) {
    const auto& xhat = cache.normalized;
    xhat.require_same_shape(grad_out, "LayerNorm backward");
    const std::size_t d = dim();
    BasicTensor<Scalar> dx(grad_out.shape());
    std::vector<Scalar> dxhat(d);
    for (std::size_t r = 0; r < grad_out.rows(); ++r) {
      const Scalar* g = grad_out.data() + r * d;
      const Scalar* n = xhat.data() + r * d;
      Scalar mean_d = 0, mean_dn = 0;
      for (std::size_t j = 0; j < d; ++j) {
        gain.grad[j] += g[j] * n[j];
        shift.grad[j] += g[j];
        dxhat[j] = g[j] * gain.value[j];
        mean_d += dxhat[j];
        mean_dn += dxhat[j] * n[j];
      }
      mean_d /= static_cast<Scalar>(d);
      mean_dn /= static_cast<Scalar>(d);
      for (std::size_t j = 0; j < d; ++j) {
        dx[r * d + j] = cache.inv_std[r] * (dxhat[j] - mean_d - n[j] * mean_dn);
      }
    }
    return dx;
  }

  Parameter<Scalar> gain;
  Parameter<Scalar> shift;
};

}  // namespace plantscan
