#pragma once

#include "plantscan/parameter.hpp"

#include <cmath>

namespace plantscan {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates per parameter, plus the step counter.
template <typename Scalar>
struct AdamState {
  std::vector<BasicTensor<Scalar>> m;
  std::vector<BasicTensor<Scalar>> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update using the gradients stored in `params`:
///   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename Scalar>
void adam_step(const ParameterList<Scalar>& params, AdamState<Scalar>& state,
               const AdamOptions& opt) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " +
                                std::to_string(state.m.size()) + " tensors, got " +
                                std::to_string(params.size()));
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(opt.beta1), b2 = static_cast<Scalar>(opt.beta2);
  const auto c1 = static_cast<Scalar>(1.0 / (1.0 - std::pow(opt.beta1, t)));
  const auto c2 = static_cast<Scalar>(1.0 / (1.0 - std::pow(opt.beta2, t)));
  const auto lr = static_cast<Scalar>(opt.learning_rate);
  const auto eps = static_cast<Scalar>(opt.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    p.value.require_same_shape(p.grad, "adam_step");
    p.value.require_same_shape(state.m[i], "adam_step");
    auto g = p.grad.array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    p.value.array() -= lr * (m * c1) / ((v * c2).sqrt() + eps);
  }
}

}  // namespace plantscan
