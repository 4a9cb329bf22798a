#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fct/core/error.hpp"

namespace fct {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_product(const Shape& shape);

// Dense row-major array of doubles. A rank-0 tensor holds a single scalar.
// Every dimension is strictly positive and data().size() == product(shape).
class RealTensor {
 public:
  RealTensor() : data_(1, 0.0) {}
  explicit RealTensor(Shape shape);
  RealTensor(Shape shape, std::vector<double> data);

  static RealTensor scalar(double value);
  static RealTensor filled(Shape shape, double value);
  // Builds a rows x cols matrix from nested initializer lists.
  static RealTensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static RealTensor vector(std::initializer_list<double> values);
  static RealTensor vector(std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  // Matrix accessors; require rank 2.
  std::size_t rows() const;
  std::size_t cols() const;
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double item() const;

  // Same payload, new shape with equal element count.
  RealTensor reshaped(Shape shape) const;

  bool same_shape(const RealTensor& other) const noexcept { return shape_ == other.shape_; }
  bool operator==(const RealTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Real and imaginary planes of identical shape.
struct ComplexTensor {
  RealTensor re;
  RealTensor im;

  ComplexTensor() = default;
  ComplexTensor(RealTensor real, RealTensor imag);
  explicit ComplexTensor(const Shape& shape) : re(shape), im(shape) {}

  const Shape& shape() const noexcept { return re.shape(); }
};

// --- products -------------------------------------------------------------

// a[m x k] * b[k x n]; accumulation runs over k in increasing order.
RealTensor matmul(const RealTensor& a, const RealTensor& b);
// a[m x k] * b[n x k]^T
RealTensor matmul_nt(const RealTensor& a, const RealTensor& b);
// a[k x m]^T * b[k x n]
RealTensor matmul_tn(const RealTensor& a, const RealTensor& b);
RealTensor transpose(const RealTensor& a);

ComplexTensor complex_matmul(const ComplexTensor& a, const ComplexTensor& b);

// --- elementwise ----------------------------------------------------------
// Binary operations accept equal shapes or a rank-0 scalar on either side.

RealTensor add(const RealTensor& a, const RealTensor& b);
RealTensor sub(const RealTensor& a, const RealTensor& b);
RealTensor mul(const RealTensor& a, const RealTensor& b);
RealTensor scale(const RealTensor& a, double s);
RealTensor abs(const RealTensor& a);
// Throws DomainError on any entry <= 0.
RealTensor log(const RealTensor& a);
RealTensor exp(const RealTensor& a);

// --- reductions and comparisons -------------------------------------------

double sum(const RealTensor& a);
double max_abs(const RealTensor& a);
double frobenius_norm(const RealTensor& a);
bool all_finite(const RealTensor& a);
double max_abs_diff(const RealTensor& a, const RealTensor& b);
// max|a - b| / max(max|b|, tiny); 0 when both are zero.
double relative_error(const RealTensor& a, const RealTensor& b);

}  // namespace fct
