#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace grlforge {

/// Dense N-dimensional array of 64-bit floats, row-major.
///
/// A default-constructed Tensor is empty (no shape, no data). Non-empty
/// tensors have strictly positive dimension sizes and product(shape)
/// elements.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 4-D accessors for the shapes the layer kernels use.
  double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& at4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }
  double at4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  /// Returns a copy with a new shape of equal element count.
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  /// Copies the first `rows` entries along dimension 0.
  Tensor first_rows(std::size_t rows) const;

  /// "[d0 x d1 x ...]" for error messages.
  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Checks positive dims and returns product(shape); throws ShapeError.
std::size_t checked_element_count(const std::vector<std::size_t>& shape);

}  // namespace grlforge
