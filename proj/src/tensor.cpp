#include "grlforge/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "grlforge/errors.hpp"

namespace grlforge {

std::size_t checked_element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(checked_element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  std::size_t expect = checked_element_count(shape_);
  if (expect != data_.size()) {
    std::ostringstream msg;
    msg << "tensor data length " << data_.size() << " does not match shape "
        << shape_str() << " (" << expect << " elements)";
    throw ShapeError(msg.str());
  }
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  if (checked_element_count(new_shape) != data_.size()) {
    throw ShapeError("reshape from " + shape_str() + " changes element count");
  }
  return Tensor(std::move(new_shape), data_);
}

Tensor Tensor::first_rows(std::size_t rows) const {
  if (shape_.empty() || rows > shape_[0]) {
    throw ShapeError("first_rows(" + std::to_string(rows) + ") out of range for " +
                     shape_str());
  }
  std::vector<std::size_t> out_shape = shape_;
  out_shape[0] = rows;
  std::size_t per_row = data_.size() / shape_[0];
  std::vector<double> out(data_.begin(),
                          data_.begin() + static_cast<std::ptrdiff_t>(rows * per_row));
  return Tensor(std::move(out_shape), std::move(out));
}

std::string Tensor::shape_str() const {
  std::ostringstream s;
  s << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s << " x ";
    s << shape_[i];
  }
  s << "]";
  return s.str();
}

}  // namespace grlforge
