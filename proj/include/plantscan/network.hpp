// The three classifier architectures: the reference CNN, a compact Vision
// Transformer, and the hybrid that fuses both feature vectors.
#pragma once

#include "plantscan/layers/conv2d.hpp"
#include "plantscan/layers/dense.hpp"
#include "plantscan/layers/encoder.hpp"
#include "plantscan/layers/patch_embedding.hpp"
#include "plantscan/layers/pooling.hpp"
#include "plantscan/model_spec.hpp"

#include <optional>
#include <string>
#include <vector>

namespace plantscan {

/// One row of a model summary. `output_shape` excludes the batch axis.
struct LayerInfo {
  std::string name;
  std::string type;
  Shape output_shape;
  std::size_t param_count = 0;
};

/// Convolution stages followed by flatten and a ReLU dense layer. Produces a
/// [1 x dense_units] feature row.
template <typename Scalar>
class CnnBranch {
 public:
  struct Cache {
    std::vector<typename Conv2D<Scalar>::Cache> conv;
    std::vector<BasicTensor<Scalar>> pre_relu;
    std::vector<typename MaxPool2D<Scalar>::Cache> pool;
    Shape flatten_from;
    typename Dense<Scalar>::Cache dense;
    BasicTensor<Scalar> dense_pre_relu;
  };

  CnnBranch() = default;
  CnnBranch(const ModelSpec& spec, const std::string& prefix, Rng& rng) {
    std::size_t in = spec.input_channels();
    for (std::size_t i = 0; i < spec.cnn.filters.size(); ++i) {
      convs.emplace_back(prefix + "conv2d_" + std::to_string(i + 1), in, spec.cnn.filters[i],
                         spec.cnn.kernel_size, rng);
      in = spec.cnn.filters[i];
    }
    const std::size_t factor = std::size_t{1} << spec.cnn.filters.size();
    flat_ = (spec.height / factor) * (spec.width / factor) * in;
    hidden = Dense<Scalar>(prefix + "dense_1", flat_, spec.cnn.dense_units, rng);
  }

  std::size_t feature_width() const { return hidden.out_features(); }
  std::size_t flatten_width() const { return flat_; }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    BasicTensor<Scalar> x = image;
    if (cache) {
      cache->conv.resize(convs.size());
      cache->pre_relu.resize(convs.size());
      cache->pool.resize(convs.size());
    }
    for (std::size_t i = 0; i < convs.size(); ++i) {
      auto z = convs[i].forward(x, cache ? &cache->conv[i] : nullptr);
      x = pool_.forward(relu(z), cache ? &cache->pool[i] : nullptr);
      if (cache) cache->pre_relu[i] = std::move(z);
    }
    if (cache) cache->flatten_from = x.shape();
    auto z = hidden.forward(x.reshaped({1, x.size()}), cache ? &cache->dense : nullptr);
    auto features = relu(z);
    if (cache) cache->dense_pre_relu = std::move(z);
    return features;
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_features, const Cache& c) {
    auto g = hidden.backward(relu_backward(grad_features, c.dense_pre_relu), c.dense)
                 .reshaped(c.flatten_from);
    for (std::size_t i = convs.size(); i-- > 0;) {
      g = relu_backward(pool_.backward(g, c.pool[i]), c.pre_relu[i]);
      g = convs[i].backward(g, c.conv[i]);
    }
    return g;
  }

  void collect(ParameterList<Scalar>& out) {
    for (auto& conv : convs) {
      out.push_back(&conv.kernel);
      out.push_back(&conv.bias);
    }
    out.push_back(&hidden.weights);
    out.push_back(&hidden.bias);
  }

  void describe(const std::string& prefix, const ModelSpec& spec,
                std::vector<LayerInfo>& rows) const {
    std::size_t h = spec.height, w = spec.width;
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const auto n = std::to_string(i + 1);
      rows.push_back({prefix + "conv2d_" + n, "Conv2D", {h, w, convs[i].filters()},
                      convs[i].param_count()});
      h /= 2;
      w /= 2;
      rows.push_back({prefix + "max_pooling2d_" + n, "MaxPooling2D", {h, w, convs[i].filters()}, 0});
    }
    rows.push_back({prefix + "flatten_1", "Flatten", {flat_}, 0});
    rows.push_back({prefix + "dense_1", "Dense", {hidden.out_features()}, hidden.param_count()});
  }

  std::vector<Conv2D<Scalar>> convs;
  Dense<Scalar> hidden;

 private:
  MaxPool2D<Scalar> pool_;
  std::size_t flat_ = 0;
};

/// Patch embedding, pre-norm encoder blocks and a final layer norm applied
/// to the CLS token. Produces a [1 x embed_dim] feature row.
template <typename Scalar>
class VitBranch {
 public:
  struct Cache {
    typename PatchEmbedding<Scalar>::Cache embed;
    std::vector<typename EncoderBlock<Scalar>::Cache> blocks;
    typename LayerNorm<Scalar>::Cache norm;
    std::size_t tokens = 0;
  };

  VitBranch() = default;
  VitBranch(const ModelSpec& spec, const std::string& prefix, Rng& rng)
      : embedding(prefix + "patch_embedding", spec.height, spec.width, spec.input_channels(),
                  spec.vit.patch_size, spec.vit.embed_dim, rng) {
    for (std::size_t i = 0; i < spec.vit.depth; ++i) {
      blocks.emplace_back(prefix + "encoder_block_" + std::to_string(i + 1), spec.vit.embed_dim,
                          spec.vit.heads, spec.vit.mlp_hidden, rng);
    }
    norm = LayerNorm<Scalar>(prefix + "cls_norm", spec.vit.embed_dim);
  }

  std::size_t feature_width() const { return embedding.embed_dim(); }

  /// Token matrix after the encoder blocks (before the CLS norm).
  BasicTensor<Scalar> encode(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    auto x = embedding.forward(image, cache ? &cache->embed : nullptr);
    if (cache) {
      cache->blocks.resize(blocks.size());
      cache->tokens = x.dim(0);
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      x = blocks[i].forward(x, cache ? &cache->blocks[i] : nullptr);
    }
    return x;
  }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    auto tokens = encode(image, cache);
    BasicTensor<Scalar> cls({1, tokens.dim(1)});
    std::copy(tokens.data(), tokens.data() + tokens.dim(1), cls.data());
    return norm.forward(cls, cache ? &cache->norm : nullptr);
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_features, const Cache& c) {
    auto dcls = norm.backward(grad_features, c.norm);
    BasicTensor<Scalar> g({c.tokens, feature_width()});
    std::copy(dcls.data(), dcls.data() + dcls.size(), g.data());
    for (std::size_t i = blocks.size(); i-- > 0;) g = blocks[i].backward(g, c.blocks[i]);
    return embedding.backward(g, c.embed);
  }

  void collect(ParameterList<Scalar>& out) {
    out.push_back(&embedding.projection);
    out.push_back(&embedding.bias);
    out.push_back(&embedding.position);
    out.push_back(&embedding.cls);
    for (auto& b : blocks) {
      for (auto* p : {&b.norm1.gain, &b.norm1.shift, &b.attention.query.weights,
                      &b.attention.query.bias, &b.attention.key.weights, &b.attention.key.bias,
                      &b.attention.value.weights, &b.attention.value.bias,
                      &b.attention.output.weights, &b.attention.output.bias, &b.norm2.gain,
                      &b.norm2.shift, &b.fc1.weights, &b.fc1.bias, &b.fc2.weights, &b.fc2.bias}) {
        out.push_back(p);
      }
    }
    out.push_back(&norm.gain);
    out.push_back(&norm.shift);
  }

  void describe(const std::string& prefix, std::vector<LayerInfo>& rows) const {
    const std::size_t t = embedding.num_tokens(), d = feature_width();
    rows.push_back({prefix + "patch_embedding", "PatchEmbedding", {t, d}, embedding.param_count()});
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      rows.push_back({prefix + "encoder_block_" + std::to_string(i + 1), "TransformerEncoder",
                      {t, d}, blocks[i].param_count()});
    }
    rows.push_back({prefix + "cls_norm", "LayerNormalization", {d}, norm.param_count()});
  }

  PatchEmbedding<Scalar> embedding;
  std::vector<EncoderBlock<Scalar>> blocks;
  LayerNorm<Scalar> norm;
};

/// A built classifier: branches selected by `spec.kind` plus a dense
/// classification head with softmax. Forward takes one H x W x C image and
/// returns a [1 x num_classes] probability row.
template <typename Scalar>
class Network {
 public:
  struct Cache {
    typename CnnBranch<Scalar>::Cache cnn;
    typename VitBranch<Scalar>::Cache vit;
    typename Dense<Scalar>::Cache head;
  };

  Network(const ModelSpec& spec, Rng& rng) : spec_(spec) {
    spec_.validate();
    const bool hybrid = spec_.kind == ModelKind::hybrid;
    std::size_t features = 0;
    if (spec_.kind != ModelKind::vit) {
      cnn_.emplace(spec_, hybrid ? "cnn/" : "", rng);
      features += cnn_->feature_width();
    }
    if (spec_.kind != ModelKind::cnn) {
      vit_.emplace(spec_, hybrid ? "vit/" : "", rng);
      features += vit_->feature_width();
    }
    head = Dense<Scalar>(spec_.kind == ModelKind::cnn ? "dense_2" : "dense_head", features,
                         spec_.num_classes(), rng);
  }

  const ModelSpec& spec() const { return spec_; }
  Shape input_shape() const { return {spec_.height, spec_.width, spec_.input_channels()}; }
  CnnBranch<Scalar>* cnn() { return cnn_ ? &*cnn_ : nullptr; }
  VitBranch<Scalar>* vit() { return vit_ ? &*vit_ : nullptr; }
  const CnnBranch<Scalar>* cnn() const { return cnn_ ? &*cnn_ : nullptr; }
  const VitBranch<Scalar>* vit() const { return vit_ ? &*vit_ : nullptr; }

  /// Concatenated branch features, [1 x head input width].
  BasicTensor<Scalar> features(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    if (image.shape() != input_shape()) {
      throw ShapeError("model expects input " + shape_string(input_shape()) + ", got " +
                       shape_string(image.shape()));
    }
    BasicTensor<Scalar> out({1, head.in_features()});
    std::size_t offset = 0;
    if (cnn_) {
      auto f = cnn_->forward(image, cache ? &cache->cnn : nullptr);
      std::copy(f.data(), f.data() + f.size(), out.data());
      offset = f.size();
    }
    if (vit_) {
      auto f = vit_->forward(image, cache ? &cache->vit : nullptr);
      std::copy(f.data(), f.data() + f.size(), out.data() + offset);
    }
    return out;
  }

  BasicTensor<Scalar> logits(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    return head.forward(features(image, cache), cache ? &cache->head : nullptr);
  }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& image, Cache* cache = nullptr) const {
    return softmax(logits(image, cache));
  }

  /// Accumulates parameter gradients from d(loss)/d(logits); returns the
  /// gradient with respect to the input image.
  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_logits, const Cache& c) {
    auto gf = head.backward(grad_logits, c.head);
    BasicTensor<Scalar> dimage(input_shape());
    std::size_t offset = 0;
    if (cnn_) {
      const std::size_t n = cnn_->feature_width();
      BasicTensor<Scalar> g({1, n}, std::vector<Scalar>(gf.data(), gf.data() + n));
      dimage += cnn_->backward(g, c.cnn);
      offset = n;
    }
    if (vit_) {
      const std::size_t n = vit_->feature_width();
      BasicTensor<Scalar> g({1, n},
                            std::vector<Scalar>(gf.data() + offset, gf.data() + offset + n));
      dimage += vit_->backward(g, c.vit);
    }
    return dimage;
  }

  ParameterList<Scalar> parameters() {
    ParameterList<Scalar> out;
    if (cnn_) cnn_->collect(out);
    if (vit_) vit_->collect(out);
    out.push_back(&head.weights);
    out.push_back(&head.bias);
    return out;
  }

  std::vector<const Parameter<Scalar>*> parameters() const {
    auto list = const_cast<Network*>(this)->parameters();
    return {list.begin(), list.end()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& row : layers()) n += row.param_count;
    return n;
  }

  std::vector<LayerInfo> layers() const {
    std::vector<LayerInfo> rows;
    const bool hybrid = spec_.kind == ModelKind::hybrid;
    if (cnn_) cnn_->describe(hybrid ? "cnn/" : "", spec_, rows);
    if (vit_) vit_->describe(hybrid ? "vit/" : "", rows);
    if (hybrid) rows.push_back({"concatenate", "Concatenate", {head.in_features()}, 0});
    rows.push_back({head.weights.name.substr(0, head.weights.name.find('/')), "Dense",
                    {head.out_features()}, head.param_count()});
    return rows;
  }

  Dense<Scalar> head;

 private:
  ModelSpec spec_;
  std::optional<CnnBranch<Scalar>> cnn_;
  std::optional<VitBranch<Scalar>> vit_;
};

using Model = Network<float>;

namespace detail {
inline void require_kind(const ModelSpec& spec, ModelKind kind) {
  if (spec.kind != kind) {
    throw std::invalid_argument("expected a " + to_string(kind) + " spec, got " +
                                to_string(spec.kind));
  }
}
}  // namespace detail

template <typename Scalar = float>
Network<Scalar> build_cnn(const ModelSpec& spec, std::uint64_t seed = 42) {
  detail::require_kind(spec, ModelKind::cnn);
  Rng rng(seed);
  return Network<Scalar>(spec, rng);
}

template <typename Scalar = float>
Network<Scalar> build_vit(const ModelSpec& spec, std::uint64_t seed = 42) {
  detail::require_kind(spec, ModelKind::vit);
  Rng rng(seed);
  return Network<Scalar>(spec, rng);
}

template <typename Scalar = float>
Network<Scalar> build_hybrid(const ModelSpec& spec, std::uint64_t seed = 42) {
  detail::require_kind(spec, ModelKind::hybrid);
  Rng rng(seed);
  return Network<Scalar>(spec, rng);
}

template <typename Scalar = float>
Network<Scalar> build_model(const ModelSpec& spec, std::uint64_t seed = 42) {
  Rng rng(seed);
  return Network<Scalar>(spec, rng);
}

/// Keras-style table: "Layer (type)", "Output Shape", "Param #", then totals.
std::string summarize(std::span<const LayerInfo> layers);

template <typename Scalar>
std::string summarize(const Network<Scalar>& model) {
  const auto rows = model.layers();
  return summarize(std::span<const LayerInfo>(rows));
}

/// "16802084" -> "16,802,084"
std::string group_thousands(std::size_t n);

}  // namespace plantscan
