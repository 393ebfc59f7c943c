#pragma once

#include "plantscan/tensor.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace plantscan {

/// Probabilities are clamped to at least this before taking the log.
inline constexpr double kProbabilityFloor = 1e-7;

namespace detail {
template <typename Scalar>
void check_labels(const BasicTensor<Scalar>& probs, std::span<const std::size_t> labels) {
  detail::require_rank(probs, 2, "sparse_ce_loss");
  if (labels.size() != probs.dim(0)) {
    throw ShapeError("sparse_ce_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(probs.dim(0)) + " rows");
  }
  for (auto y : labels) {
    if (y >= probs.dim(1)) {
      throw std::out_of_range("sparse_ce_loss: label " + std::to_string(y) +
                              " out of range for " + std::to_string(probs.dim(1)) + " classes");
    }
  }
}
}  // namespace detail

/// Sparse categorical cross-entropy, -(1/N) sum_i log p[i, y_i].
template <typename Scalar>
double sparse_ce_loss(const BasicTensor<Scalar>& probs, std::span<const std::size_t> labels) {
  detail::check_labels(probs, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::max(static_cast<double>(probs(i, labels[i])), kProbabilityFloor);
    total -= std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

/// Gradient of sparse_ce_loss(softmax(logits)) with respect to the logits:
/// (p - onehot(y)) / N. `scale_rows` overrides N when a batch is processed
/// one sample at a time.
template <typename Scalar>
BasicTensor<Scalar> sparse_ce_softmax_grad(const BasicTensor<Scalar>& probs,
                                           std::span<const std::size_t> labels,
                                           std::size_t scale_rows = 0) {
  detail::check_labels(probs, labels);
  const std::size_t n = scale_rows ? scale_rows : labels.size();
  BasicTensor<Scalar> grad = probs;
  for (std::size_t i = 0; i < labels.size(); ++i) grad(i, labels[i]) -= Scalar(1);
  grad *= Scalar(1) / static_cast<Scalar>(n);
  return grad;
}

}  // namespace plantscan
