#pragma once

#include "plantscan/parameter.hpp"

namespace plantscan {

/// Splits an H x W x C image into non-overlapping p x p patches (patch grid
/// and patch contents both row-major), projects each patch linearly,
/// prepends a learned CLS token and adds learned positional embeddings.
/// Output is [(num_patches + 1) x embed_dim] with the CLS token in row 0.
template <typename Scalar>
class PatchEmbedding {
 public:
  struct Cache {
    Shape image_shape;
    BasicTensor<Scalar> patches;
  };

  PatchEmbedding() = default;
  PatchEmbedding(const std::string& name, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch, std::size_t embed_dim, Rng& rng)
      : patch_(patch), height_(height), width_(width), channels_(channels) {
    if (patch == 0 || height % patch != 0 || width % patch != 0) {
      throw std::invalid_argument("PatchEmbedding: image " + std::to_string(height) + "x" +
                                  std::to_string(width) + " is not divisible into " +
                                  std::to_string(patch) + "x" + std::to_string(patch) +
                                  " patches");
    }
    const std::size_t in = patch * patch * channels;
    projection = Parameter<Scalar>(name + "/projection/kernel",
                                   glorot_uniform<Scalar>(rng, {in, embed_dim}, in, embed_dim));
    bias = Parameter<Scalar>(name + "/projection/bias", BasicTensor<Scalar>({embed_dim}));
    position = Parameter<Scalar>(name + "/position",
                                 gaussian<Scalar>(rng, {num_patches() + 1, embed_dim}, 0.02));
    cls = Parameter<Scalar>(name + "/cls", gaussian<Scalar>(rng, {embed_dim}, 0.02));
  }

  std::size_t patch_size() const { return patch_; }
  std::size_t num_patches() const { return (height_ / patch_) * (width_ / patch_); }
  std::size_t num_tokens() const { return num_patches() + 1; }
  std::size_t embed_dim() const { return projection.value.dim(1); }
  std::size_t param_count() const {
    return projection.value.size() + bias.value.size() + position.value.size() + cls.value.size();
  }

  /// Flattened patches, [num_patches x p*p*C].
  BasicTensor<Scalar> extract_patches(const BasicTensor<Scalar>& image) const {
    detail::require_rank(image, 3, "PatchEmbedding");
    if (image.shape() != Shape{height_, width_, channels_}) {
      throw ShapeError("PatchEmbedding: expected image " +
                       shape_string({height_, width_, channels_}) + ", got " +
                       shape_string(image.shape()));
    }
    const std::size_t gw = width_ / patch_, row_len = patch_ * channels_;
    BasicTensor<Scalar> patches({num_patches(), patch_ * row_len});
    for (std::size_t n = 0; n < num_patches(); ++n) {
      const std::size_t pr = n / gw, pc = n % gw;
      Scalar* out = patches.data() + n * patch_ * row_len;
      for (std::size_t y = 0; y < patch_; ++y) {
        const Scalar* in = image.data() + ((pr * patch_ + y) * width_ + pc * patch_) * channels_;
        std::copy(in, in + row_len, out + y * row_len);
      }
    }
    return patches;
  }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    auto patches = extract_patches(image);
    auto embedded = matmul(patches, projection.value);
    add_row_vector(embedded, bias.value);
    const std::size_t d = embed_dim();
    BasicTensor<Scalar> tokens = position.value;
    for (std::size_t j = 0; j < d; ++j) tokens[j] += cls.value[j];
    for (std::size_t i = 0; i < embedded.size(); ++i) tokens[d + i] += embedded[i];
    if (cache) {
      cache->image_shape = image.shape();
      cache->patches = std::move(patches);
    }
    return tokens;
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& cache) {
    position.value.require_same_shape(grad_out, "PatchEmbedding backward");
    const std::size_t d = embed_dim();
    position.grad += grad_out;
    for (std::size_t j = 0; j < d; ++j) cls.grad[j] += grad_out[j];
    BasicTensor<Scalar> dembedded({num_patches(), d});
    std::copy(grad_out.data() + d, grad_out.data() + grad_out.size(), dembedded.data());
    accumulate_matmul_at(cache.patches, dembedded, projection.grad);
    accumulate_column_sums(dembedded, bias.grad);
    auto dpatches = matmul_bt(dembedded, projection.value);

    BasicTensor<Scalar> dimage(cache.image_shape);
    const std::size_t gw = width_ / patch_, row_len = patch_ * channels_;
    for (std::size_t n = 0; n < num_patches(); ++n) {
      const std::size_t pr = n / gw, pc = n % gw;
      const Scalar* in = dpatches.data() + n * patch_ * row_len;
      for (std::size_t y = 0; y < patch_; ++y) {
        Scalar* out = dimage.data() + ((pr * patch_ + y) * width_ + pc * patch_) * channels_;
        std::copy(in + y * row_len, in + (y + 1) * row_len, out);
      }
    }
    return dimage;
  }

  Parameter<Scalar> projection;
  Parameter<Scalar> bias;
  Parameter<Scalar> position;
  Parameter<Scalar> cls;

 private:
  std::size_t patch_ = 16, height_ = 0, width_ = 0, channels_ = 0;
};

}  // namespace plantscan
