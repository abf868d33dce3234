#ifndef MLGAN_TENSOR_H_
#define MLGAN_TENSOR_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlgan {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible operand shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside an operation's mathematical domain (e.g. log of <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A computation produced NaN/Inf, or a NaN entered from outside.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message carries the offending line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);
std::size_t ShapeSize(const Shape& shape);

// Dense row-major array of doubles of rank 0, 1 or 2.
//
// Rank-0 and rank-1 tensors are viewed as a single row for the matrix
// accessors, so a vector of length n behaves as a 1 x n matrix.
class Tensor {
 public:
  // A scalar zero.
  Tensor() : shape_(), data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor(Shape{}, {value}); }
  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // The single value of a one-element tensor.
  double item() const;

  // Copy of row r as a rank-1 tensor.
  Tensor row(std::size_t r) const;

  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Stacks equal-length rank-1 tensors into a matrix.
Tensor StackRows(std::span<const Tensor> rows);

}  // namespace mlgan

#endif  // MLGAN_TENSOR_H_
