// Trainable parameters and their gradient buffers.
#pragma once

#include "plantscan/random.hpp"
#include "plantscan/tensor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace plantscan {

/// A named tensor plus the gradient accumulated into it by backward passes.
/// `grad` always has the shape of `value`.
template <typename Scalar>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name_, BasicTensor<Scalar> value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  std::string name;
  BasicTensor<Scalar> value;
  BasicTensor<Scalar> grad;

  void zero_grad() { grad.fill(Scalar(0)); }
};

/// The gradient tape of this library: the ordered list of a model's
/// parameters, each carrying its own accumulated gradient.
template <typename Scalar>
using ParameterList = std::vector<Parameter<Scalar>*>;

template <typename Scalar>
void zero_gradients(const ParameterList<Scalar>& params) {
  for (auto* p : params) p->zero_grad();
}

template <typename Scalar>
std::size_t count_scalars(const ParameterList<Scalar>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

template <typename Scalar>
BasicTensor<Scalar> glorot_uniform(Rng& rng, Shape shape, std::size_t fan_in,
                                   std::size_t fan_out) {
  BasicTensor<Scalar> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = static_cast<Scalar>(rng.uniform(-limit, limit));
  return t;
}

template <typename Scalar>
BasicTensor<Scalar> gaussian(Rng& rng, Shape shape, double stddev) {
  BasicTensor<Scalar> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<Scalar>(rng.normal(0.0, stddev));
  return t;
}

}  // namespace plantscan
