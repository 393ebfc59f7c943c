// Dense row-major n-dimensional arrays and the elementwise, reduction and
// matrix kernels the layers are built from.
//
// Images are stored height x width x channels. All kernels are serial and
// sum in a fixed order, so identical inputs always produce identical bytes.
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plantscan {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename Scalar>
class BasicTensor {
 public:
  using value_type = Scalar;
  using MatrixMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ArrayMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
  using ConstArrayMap = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    check_dims();
  }

  BasicTensor(Shape shape, std::vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  BasicTensor(Shape shape, std::initializer_list<Scalar> data)
      : BasicTensor(std::move(shape), std::vector<Scalar>(data)) {}

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  const std::vector<Scalar>& storage() const { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  Scalar& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const Scalar& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Same data viewed under a new shape with the same element count.
  BasicTensor reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
  }

  /// Rows are the product of all leading dimensions, columns the last one.
  MatrixMap matrix() {
    return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows()),
                     static_cast<Eigen::Index>(cols()));
  }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows()),
                          static_cast<Eigen::Index>(cols()));
  }
  ArrayMap array() { return ArrayMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }
  ConstArrayMap array() const {
    return ConstArrayMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
  }

  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : data_.size() / cols(); }

  void fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename Other>
  BasicTensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return BasicTensor<Other>(shape_, std::move(out));
  }

  BasicTensor& operator+=(const BasicTensor& other) {
    require_same_shape(other, "+=");
    array() += other.array();
    return *this;
  }

  BasicTensor& operator*=(Scalar s) {
    array() *= s;
    return *this;
  }

  friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  void require_same_shape(const BasicTensor& other, const char* what) const {
    if (shape_ != other.shape_) {
      throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(shape_) +
                       " vs " + shape_string(other.shape_));
    }
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
  }

 private:
  void check_dims() const {
    for (auto d : shape_) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    }
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

namespace detail {

template <typename Scalar>
void require_rank(const BasicTensor<Scalar>& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_string(t.shape()));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix products. Every output element sums over k from 0 upwards.

/// a[m x k] * b[k x n]
template <typename Scalar>
BasicTensor<Scalar> matmul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  BasicTensor<Scalar> c({m, n});
  const Scalar* pa = a.data();
  const Scalar* pb = b.data();
  Scalar* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    Scalar* row = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Scalar av = pa[i * k + p];
      const Scalar* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return c;
}

/// a[m x k] * b[n x k]^T
template <typename Scalar>
BasicTensor<Scalar> matmul_bt(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  detail::require_rank(a, 2, "matmul_bt");
  detail::require_rank(b, 2, "matmul_bt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_bt: inner dimensions disagree, " + shape_string(a.shape()) +
                     " x " + shape_string(b.shape()) + "^T");
  }
  BasicTensor<Scalar> c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const Scalar* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const Scalar* brow = b.data() + j * k;
      Scalar acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c(i, j) = acc;
    }
  }
  return c;
}

/// out[m x n] += a[k x m]^T * b[k x n]
template <typename Scalar>
void accumulate_matmul_at(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                          BasicTensor<Scalar>& out) {
  detail::require_rank(a, 2, "matmul_at");
  detail::require_rank(b, 2, "matmul_at");
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul_at: inner dimensions disagree, " + shape_string(a.shape()) +
                     "^T x " + shape_string(b.shape()));
  }
  if (out.size() != m * n) {
    throw ShapeError("matmul_at: output " + shape_string(out.shape()) + " cannot hold " +
                     std::to_string(m) + "x" + std::to_string(n));
  }
  for (std::size_t p = 0; p < k; ++p) {
    const Scalar* arow = a.data() + p * m;
    const Scalar* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const Scalar av = arow[i];
      Scalar* crow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// a[k x m]^T * b[k x n]
template <typename Scalar>
BasicTensor<Scalar> matmul_at(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  detail::require_rank(a, 2, "matmul_at");
  detail::require_rank(b, 2, "matmul_at");
  BasicTensor<Scalar> c({a.dim(1), b.dim(1)});
  accumulate_matmul_at(a, b, c);
  return c;
}

template <typename Scalar>
BasicTensor<Scalar> transpose(const BasicTensor<Scalar>& a) {
  detail::require_rank(a, 2, "transpose");
  BasicTensor<Scalar> t({a.dim(1), a.dim(0)});
  t.matrix() = a.matrix().transpose();
  return t;
}

/// Adds `bias` (length = last dimension) to every row.
template <typename Scalar>
void add_row_vector(BasicTensor<Scalar>& x, const BasicTensor<Scalar>& bias) {
  if (bias.size() != x.cols()) {
    throw ShapeError("bias length " + std::to_string(bias.size()) + " does not match " +
                     shape_string(x.shape()));
  }
  x.matrix().rowwise() += bias.matrix().row(0);
}

/// Column sums accumulated into `out` (row order is fixed).
template <typename Scalar>
void accumulate_column_sums(const BasicTensor<Scalar>& x, BasicTensor<Scalar>& out) {
  const std::size_t n = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Scalar* row = x.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
}

// ---------------------------------------------------------------------------
// Activations.

/// Row-wise softmax over the last dimension, shifted by the row maximum.
template <typename Scalar>
BasicTensor<Scalar> softmax(const BasicTensor<Scalar>& logits) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  BasicTensor<Scalar> out = logits;
  const std::size_t n = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    Scalar* row = out.data() + r * n;
    const Scalar mx = *std::max_element(row, row + n);
    Scalar total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
  return out;
}

/// Gradient of a row-wise softmax given its output `probs`.
template <typename Scalar>
BasicTensor<Scalar> softmax_backward(const BasicTensor<Scalar>& grad_out,
                                     const BasicTensor<Scalar>& probs) {
  probs.require_same_shape(grad_out, "softmax_backward");
  BasicTensor<Scalar> grad = grad_out;
  const std::size_t n = probs.cols();
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const Scalar* p = probs.data() + r * n;
    const Scalar* g = grad_out.data() + r * n;
    Scalar dot = 0;
    for (std::size_t j = 0; j < n; ++j) dot += p[j] * g[j];
    Scalar* out = grad.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) out[j] = p[j] * (g[j] - dot);
  }
  return grad;
}

template <typename Scalar>
BasicTensor<Scalar> relu(BasicTensor<Scalar> x) {
  x.array() = x.array().max(Scalar(0));
  return x;
}

/// Subgradient at exactly zero is taken as 0.
template <typename Scalar>
BasicTensor<Scalar> relu_backward(const BasicTensor<Scalar>& grad_out,
                                  const BasicTensor<Scalar>& input) {
  input.require_same_shape(grad_out, "relu_backward");
  BasicTensor<Scalar> grad = grad_out;
  grad.array() = (input.array() > Scalar(0)).select(grad_out.array(), Scalar(0));
  return grad;
}

/// Exact GELU, x * Phi(x).
template <typename Scalar>
BasicTensor<Scalar> gelu(BasicTensor<Scalar> x) {
  for (auto& v : x.values()) {
    v = Scalar(0.5) * v * (Scalar(1) + std::erf(v / std::sqrt(Scalar(2))));
  }
  return x;
}

template <typename Scalar>
BasicTensor<Scalar> gelu_backward(const BasicTensor<Scalar>& grad_out,
                                  const BasicTensor<Scalar>& input) {
  input.require_same_shape(grad_out, "gelu_backward");
  const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
  const Scalar inv_sqrt2pi = Scalar(1) / std::sqrt(Scalar(2) * Scalar(EIGEN_PI));
  BasicTensor<Scalar> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const Scalar x = input[i];
    const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * inv_sqrt2));
    const Scalar pdf = inv_sqrt2pi * std::exp(Scalar(-0.5) * x * x);
    grad[i] = grad_out[i] * (cdf + x * pdf);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Scalar reductions and their gradients.

template <typename Scalar>
Scalar sum(const BasicTensor<Scalar>& x) {
  Scalar acc = 0;
  for (Scalar v : x.values()) acc += v;
  return acc;
}

template <typename Scalar>
BasicTensor<Scalar> sum_backward(const BasicTensor<Scalar>& x) {
  return BasicTensor<Scalar>(x.shape(), Scalar(1));
}

/// 0.5 * sum(x^2)
template <typename Scalar>
Scalar half_squared_norm(const BasicTensor<Scalar>& x) {
  Scalar acc = 0;
  for (Scalar v : x.values()) acc += v * v;
  return acc / Scalar(2);
}

template <typename Scalar>
BasicTensor<Scalar> half_squared_norm_backward(const BasicTensor<Scalar>& x) {
  return x;
}

template <typename Scalar>
std::size_t argmax(std::span<Scalar> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace plantscan
