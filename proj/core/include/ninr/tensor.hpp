#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ninr {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major n-dimensional array of doubles.
///
/// The flat buffer always holds exactly `shape_size(shape())` elements.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t axis) const;

  /// Rows/cols of the tensor viewed as a matrix: leading axis x product of the rest.
  std::size_t rows() const;
  std::size_t row_size() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  /// Same buffer, new extents. Throws ShapeError if element counts differ.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Rows [begin, end) along axis 0.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;
  /// Gathers rows along axis 0 in the given order.
  Tensor gather_rows(std::span<const std::size_t> indices) const;

  void fill(double v);
  bool all_finite() const noexcept;
  double squared_norm() const noexcept;
  double norm() const noexcept;
  double sum() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Rank-2 matrix product. Throws ShapeError unless a is m x k and b is k x n.
Tensor tensor_matmul(const Tensor& a, const Tensor& b);

/// Largest |a_i - b_i| / max(1, |b_i|). Shapes must agree.
double max_relative_difference(const Tensor& a, const Tensor& b);

namespace kernels {

// Raw row-major GEMM kernels used by the layers; c is overwritten unless `accumulate`.
// c(m x n) = a(m x k) * b(k x n)
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate = false);
// c(m x n) = a^T * b, a is (k x m), b is (k x n)
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate = false);
// c(m x n) = a * b^T, a is (m x k), b is (n x k)
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate = false);

}  // namespace kernels

}  // namespace ninr
