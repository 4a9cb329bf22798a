#include "fct/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace fct {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

void check_dims(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
  }
}

bool is_scalar(const RealTensor& t) { return t.rank() == 0; }

template <typename Op>
RealTensor binary(const RealTensor& a, const RealTensor& b, const char* name, Op op) {
  if (a.same_shape(b)) {
    RealTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
    return out;
  }
  if (is_scalar(b)) {
    RealTensor out(a.shape());
    const double s = b.item();
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], s);
    return out;
  }
  if (is_scalar(a)) {
    RealTensor out(b.shape());
    const double s = a.item();
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = op(s, b[i]);
    return out;
  }
  throw DimensionError(std::string(name) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                       shape_to_string(b.shape()));
}

template <typename Op>
RealTensor unary(const RealTensor& a, Op op) {
  RealTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i]);
  return out;
}

void require_matrix(const RealTensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " + shape_to_string(t.shape()));
  }
}

[[noreturn]] void inner_mismatch(const char* op, const RealTensor& a, const RealTensor& b) {
  throw DimensionError(std::string(op) + ": inner dimensions disagree for " + shape_to_string(a.shape()) + " and " +
                       shape_to_string(b.shape()));
}

}  // namespace

RealTensor::RealTensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

RealTensor::RealTensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("payload of " + std::to_string(data_.size()) + " values does not match shape " +
                         shape_to_string(shape_));
  }
}

RealTensor RealTensor::scalar(double value) { return RealTensor({}, {value}); }

RealTensor RealTensor::filled(Shape shape, double value) {
  RealTensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

RealTensor RealTensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("matrix literal has ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return RealTensor({r, c}, std::move(data));
}

RealTensor RealTensor::vector(std::initializer_list<double> values) {
  return RealTensor({values.size()}, std::vector<double>(values));
}

RealTensor RealTensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return RealTensor({n}, std::move(values));
}

std::size_t RealTensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape_));
  }
  return shape_[axis];
}

std::size_t RealTensor::rows() const {
  require_matrix(*this, "rows");
  return shape_[0];
}

std::size_t RealTensor::cols() const {
  require_matrix(*this, "cols");
  return shape_[1];
}

double RealTensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape_));
  return data_[0];
}

RealTensor RealTensor::reshaped(Shape shape) const {
  if (shape_product(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return RealTensor(std::move(shape), data_);
}

ComplexTensor::ComplexTensor(RealTensor real, RealTensor imag) : re(std::move(real)), im(std::move(imag)) {
  if (!re.same_shape(im)) {
    throw DimensionError("complex planes differ in shape: " + shape_to_string(re.shape()) + " vs " +
                         shape_to_string(im.shape()));
  }
}

RealTensor matmul(const RealTensor& a, const RealTensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) inner_mismatch("matmul", a, b);
  RealTensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

RealTensor matmul_nt(const RealTensor& a, const RealTensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) inner_mismatch("matmul_nt", a, b);
  RealTensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      pc[i * n + j] = acc;
    }
  }
  return c;
}

RealTensor matmul_tn(const RealTensor& a, const RealTensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) inner_mismatch("matmul_tn", a, b);
  RealTensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = pa + p * m;
    const double* brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

RealTensor transpose(const RealTensor& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  RealTensor t({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

ComplexTensor complex_matmul(const ComplexTensor& a, const ComplexTensor& b) {
  RealTensor rr = matmul(a.re, b.re);
  RealTensor ii = matmul(a.im, b.im);
  RealTensor ri = matmul(a.re, b.im);
  RealTensor ir = matmul(a.im, b.re);
  return ComplexTensor(sub(rr, ii), add(ri, ir));
}

RealTensor add(const RealTensor& a, const RealTensor& b) {
  return binary(a, b, "add", std::plus<>{});
}

RealTensor sub(const RealTensor& a, const RealTensor& b) {
  return binary(a, b, "sub", std::minus<>{});
}

RealTensor mul(const RealTensor& a, const RealTensor& b) {
  return binary(a, b, "mul", std::multiplies<>{});
}

RealTensor scale(const RealTensor& a, double s) {
  return unary(a, [s](double v) { return v * s; });
}

RealTensor abs(const RealTensor& a) {
  return unary(a, [](double v) { return std::fabs(v); });
}

RealTensor log(const RealTensor& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(a[i]) + " at index " + std::to_string(i));
    }
  }
  return unary(a, [](double v) { return std::log(v); });
}

RealTensor exp(const RealTensor& a) {
  return unary(a, [](double v) { return std::exp(v); });
}

double sum(const RealTensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

double max_abs(const RealTensor& a) {
  double m = 0.0;
  for (double v : a.data()) {
    if (std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
    m = std::max(m, std::fabs(v));
  }
  return m;
}

double frobenius_norm(const RealTensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

bool all_finite(const RealTensor& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const RealTensor& a, const RealTensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("max_abs_diff: shapes " + shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double relative_error(const RealTensor& a, const RealTensor& b) {
  const double diff = max_abs_diff(a, b);
  const double ref = std::max(max_abs(a), max_abs(b));
  if (ref == 0.0) return diff;
  return diff / ref;
}

}  // namespace fct
