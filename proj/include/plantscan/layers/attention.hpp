#pragma once

#include "plantscan/layers/dense.hpp"

namespace plantscan {

/// Multi-head self-attention over a token matrix x[T x d].
///
/// Each head h attends with softmax(Q_h K_h^T / sqrt(dh)) V_h where Q, K, V
/// are affine projections of x and Q_h is columns [h*dh, (h+1)*dh). Head
/// outputs are concatenated and passed through the output projection.
template <typename Scalar>
class MultiHeadSelfAttention {
 public:
  struct Cache {
    typename Dense<Scalar>::Cache q_in, k_in, v_in, o_in;
    BasicTensor<Scalar> q, k, v;
    std::vector<BasicTensor<Scalar>> weights;  // one T x T matrix per head
  };

  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(const std::string& name, std::size_t embed_dim, std::size_t heads,
                         Rng& rng)
      : heads_(heads) {
    if (heads == 0 || embed_dim % heads != 0) {
      throw std::invalid_argument("MultiHeadSelfAttention: embed_dim " +
                                  std::to_string(embed_dim) + " is not divisible by " +
                                  std::to_string(heads) + " heads");
    }
    query = Dense<Scalar>(name + "/query", embed_dim, embed_dim, rng);
    key = Dense<Scalar>(name + "/key", embed_dim, embed_dim, rng);
    value = Dense<Scalar>(name + "/value", embed_dim, embed_dim, rng);
    output = Dense<Scalar>(name + "/output", embed_dim, embed_dim, rng);
  }

  std::size_t heads() const { return heads_; }
  std::size_t embed_dim() const { return query.in_features(); }
  std::size_t head_dim() const { return embed_dim() / heads_; }
  std::size_t param_count() const {
    return query.param_count() + key.param_count() + value.param_count() + output.param_count();
  }

  BasicTensor<Scalar> forward(const BasicTensor<Scalar>& x, Cache* cache = nullptr) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.q = query.forward(x, &c.q_in);
    c.k = key.forward(x, &c.k_in);
    c.v = value.forward(x, &c.v_in);
    const std::size_t tokens = x.dim(0), dh = head_dim();
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    BasicTensor<Scalar> context({tokens, embed_dim()});
    c.weights.clear();
    for (std::size_t h = 0; h < heads_; ++h) {
      auto qh = columns(c.q, h * dh, dh);
      auto kh = columns(c.k, h * dh, dh);
      auto vh = columns(c.v, h * dh, dh);
      auto scores = matmul_bt(qh, kh);
      scores *= scale;
      auto attn = softmax(scores);
      set_columns(context, matmul(attn, vh), h * dh);
      c.weights.push_back(std::move(attn));
    }
    return output.forward(context, &c.o_in);
  }

  BasicTensor<Scalar> backward(const BasicTensor<Scalar>& grad_out, const Cache& c) {
    const std::size_t tokens = c.q.dim(0), dh = head_dim();
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    auto dcontext = output.backward(grad_out, c.o_in);
    BasicTensor<Scalar> dq({tokens, embed_dim()}), dk(dq.shape()), dv(dq.shape());
    for (std::size_t h = 0; h < heads_; ++h) {
      auto qh = columns(c.q, h * dh, dh);
      auto kh = columns(c.k, h * dh, dh);
      auto vh = columns(c.v, h * dh, dh);
      auto dctx = columns(dcontext, h * dh, dh);
      const auto& attn = c.weights[h];
      auto dattn = matmul_bt(dctx, vh);
      set_columns(dv, matmul_at(attn, dctx), h * dh);
      auto dscores = softmax_backward(dattn, attn);
      dscores *= scale;
      set_columns(dq, matmul(dscores, kh), h * dh);
      set_columns(dk, matmul_at(dscores, qh), h * dh);
    }
    auto dx = query.backward(dq, c.q_in);
    dx += key.backward(dk, c.k_in);
    dx += value.backward(dv, c.v_in);
    return dx;
  }

  Dense<Scalar> query, key, value, output;

 private:
  static BasicTensor<Scalar> columns(const BasicTensor<Scalar>& m, std::size_t first,
                                     std::size_t count) {
    BasicTensor<Scalar> out({m.dim(0), count});
    out.matrix() = m.matrix().middleCols(static_cast<Eigen::Index>(first),
                                         static_cast<Eigen::Index>(count));
    return out;
  }

  static void set_columns(BasicTensor<Scalar>& m, const BasicTensor<Scalar>& block,
                          std::size_t first) {
    m.matrix().middleCols(static_cast<Eigen::Index>(first),
                          static_cast<Eigen::Index>(block.dim(1))) = block.matrix();
  }

  std::size_t heads_ = 1;
};

}  // namespace plantscan
