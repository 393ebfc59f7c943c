#pragma once

#include "plantscan/parameter.hpp"

namespace plantscan {

/// 2-D cross-correlation (no kernel flip), stride 1, zero "same" padding.
/// Input and output are single images laid out H x W x C; the kernel is
/// kh x kw x Cin x Cout.
template <typename Scalar>
class Conv2D {
 public:
  struct Cache {
    BasicTensor<Scalar> input;
  };

  Conv2D() = default;
  Conv2D(const std::string& name, std::size_t in_channels, std::size_t filters,
         std::size_t kernel_size, Rng& rng)
      : kernel(name + "/kernel",
               glorot_uniform<Scalar>(rng, {kernel_size, kernel_size, in_channels, filters},
                                      kernel_size * kernel_size * in_channels,
                                      kernel_size * kernel_size * filters)),
        bias(name + "/bias", BasicTensor<Scalar>({filters})) {
    if (kernel_size % 2 == 0) {
      throw std::invalid_argument("Conv2D: kernel size must be odd, got " +
                                  std::to_string(kernel_size));
    }
  }

  std::size_t kernel_size() const { return kernel.value.dim(0); }
  std::size_t in_channels() const { return kernel.value.dim(2); }
  std::size_t filters() const { return kernel.value.dim(3); }
  std::size_t param_count() const { return kernel.value.size() + bias.value.size(); }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& x, Cache* cache = nullptr) const {
    detail::require_rank(x, 3, "Conv2D");
    if (x.dim(2) != in_channels()) {
      throw ShapeError("Conv2D: input has " + std::to_string(x.dim(2)) +
                       " channels, kernel expects " + std::to_string(in_channels()));
    }
    const std::size_t h = x.dim(0), w = x.dim(1), cin = in_channels(), cout = filters();
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(kernel_size()), pad = k / 2;
    BasicTensor<Scalar> y({h, w, cout});
    const Scalar* wk = kernel.value.data();
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        Scalar* out = y.data() + (r * w + c) * cout;
        for (std::size_t o = 0; o < cout; ++o) out[o] = bias.value[o];
        for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(r) + ky - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(c) + kx - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const Scalar* in = x.data() + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
            const Scalar* wbase = wk + static_cast<std::size_t>(ky * k + kx) * cin * cout;
            for (std::size_t i = 0; i < cin; ++i) {
              const Scalar v = in[i];
              const Scalar* wrow = wbase + i * cout;
              for (std::size_t o = 0; o < cout; ++o) out[o] += v * wrow[o];
            }
          }
        }
      }
    }
    if (cache) cache->input = x;
    return y;
  }

  /// Accumulates kernel and bias gradients; returns the input gradient.
  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& cache) {
    const auto& x = cache.input;
    const std::size_t h = x.dim(0), w = x.dim(1), cin = in_channels(), cout = filters();
    if (grad_out.shape() != Shape{h, w, cout}) {
      throw ShapeError("Conv2D backward: unexpected gradient shape " +
                       shape_string(grad_out.shape()));
    }
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(kernel_size()), pad = k / 2;
    BasicTensor<Scalar> dx(x.shape());
    const Scalar* wk = kernel.value.data();
    Scalar* dwk = kernel.grad.data();
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const Scalar* g = grad_out.data() + (r * w + c) * cout;
        for (std::size_t o = 0; o < cout; ++o) bias.grad[o] += g[o];
        for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(r) + ky - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(c) + kx - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t offset = (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
            const Scalar* in = x.data() + offset;
            Scalar* din = dx.data() + offset;
            const std::size_t wofs = static_cast<std::size_t>(ky * k + kx) * cin * cout;
            for (std::size_t i = 0; i < cin; ++i) {
              const Scalar v = in[i];
              const Scalar* wrow = wk + wofs + i * cout;
              Scalar* dwrow = dwk + wofs + i * cout;
              Scalar acc = 0;
              for (std::size_t o = 0; o < cout; ++o) {
                acc += g[o] * wrow[o];
                dwrow[o] += v * g[o];
              }
              din[i] += acc;
            }
          }
        }
      }
    }
    return dx;
  }

  Parameter<Scalar> kernel;
  Parameter<Scalar> bias;
};

}  // namespace plantscan
