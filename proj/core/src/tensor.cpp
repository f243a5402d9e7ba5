#include "ninr/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "ninr/error.hpp"

namespace ninr {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " elements, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("tensor: axis out of range");
  return shape_[axis];
}

std::size_t Tensor::rows() const { return shape_.empty() ? 1 : shape_[0]; }

std::size_t Tensor::row_size() const {
  if (shape_.empty()) return 1;
  return shape_[0] == 0 ? shape_size(Shape(shape_.begin() + 1, shape_.end()))
                        : data_.size() / shape_[0];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data_[r * row_size() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data_[r * row_size() + c]; }

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t w = row_size();
  return {data_.data() + r * w, w};
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t w = row_size();
  return {data_.data() + r * w, w};
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw ShapeError("slice_rows: range out of bounds");
  Shape s = shape_;
  s[0] = end - begin;
  const std::size_t w = row_size();
  return Tensor(std::move(s), std::vector<double>(data_.begin() + begin * w,
                                                  data_.begin() + end * w));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  Shape s = shape_;
  s[0] = indices.size();
  Tensor out(std::move(s));
  const std::size_t w = row_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(data_.begin() + indices[i] * w, w, out.data_.begin() + i * w);
  }
  return out;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Tensor::norm() const noexcept { return std::sqrt(squared_norm()); }

double Tensor::sum() const noexcept {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

Tensor tensor_matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                     shape_string(b.shape()));
  }
  Tensor c({a.dim(0), b.dim(1)});
  kernels::gemm_nn(a.dim(0), b.dim(1), a.dim(1), a.data().data(), b.data().data(),
                   c.data().data());
  return c;
}

double max_relative_difference(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_relative_difference: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return worst;
}

namespace kernels {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate) {
  const auto mi = static_cast<Eigen::Index>(m), ni = static_cast<Eigen::Index>(n),
             ki = static_cast<Eigen::Index>(k);
  Map out(c, mi, ni);
  if (accumulate) {
    out.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
  } else {
    out.noalias() = ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate) {
  const auto mi = static_cast<Eigen::Index>(m), ni = static_cast<Eigen::Index>(n),
             ki = static_cast<Eigen::Index>(k);
  Map out(c, mi, ni);
  if (accumulate) {
    out.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ki, ni);
  } else {
    out.noalias() = ConstMap(a, ki, mi).transpose() * ConstMap(b, ki, ni);
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate) {
  const auto mi = static_cast<Eigen::Index>(m), ni = static_cast<Eigen::Index>(n),
             ki = static_cast<Eigen::Index>(k);
  Map out(c, mi, ni);
  if (accumulate) {
    out.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ni, ki).transpose();
  } else {
    out.noalias() = ConstMap(a, mi, ki) * ConstMap(b, ni, ki).transpose();
  }
}

}  // namespace kernels
}  // namespace ninr
