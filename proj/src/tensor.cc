#include "mlgan/tensor.h"

#include <cmath>
#include <sstream>

namespace mlgan {

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  if (shape.size() == 1) out << ",";
  out << ")";
  return out.str();
}

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(ShapeSize(shape_), fill) {
  if (shape_.size() > 2) {
    throw ShapeError("tensors of rank > 2 are not supported: " +
                     ShapeString(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) {
    throw ShapeError("tensors of rank > 2 are not supported: " +
                     ShapeString(shape_));
  }
  if (ShapeSize(shape_) != data_.size()) {
    throw ShapeError("shape " + ShapeString(shape_) + " needs " +
                     std::to_string(ShapeSize(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::Vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeString(shape_));
  }
  return data_[0];
}

Tensor Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return Tensor::Vector(std::vector<double>(data_.begin() + r * c,
                                            data_.begin() + (r + 1) * c));
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor StackRows(std::span<const Tensor> rows) {
  if (rows.empty()) return Tensor(Shape{0, 0});
  const std::size_t c = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * c);
  for (const Tensor& r : rows) {
    if (r.size() != c) {
      throw ShapeError("StackRows: row lengths differ (" +
                       std::to_string(c) + " vs " + std::to_string(r.size()) +
                       ")");
    }
    data.insert(data.end(), r.data().begin(), r.data().end());
  }
  return Tensor::Matrix(rows.size(), c, std::move(data));
}

}  // namespace mlgan
