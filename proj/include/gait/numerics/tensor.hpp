#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gait/errors.hpp"

namespace gait {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array. Rank-5 tensors follow the (N, C, T, H, W) layout:
/// batch, channels, frames, rows, columns.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0)) : shape_(std::move(shape)), data_(numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel(shape_)) {
      throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                       to_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  const std::vector<Real>& storage() const noexcept { return data_; }

  Real& operator[](std::size_t i) noexcept { return data_[i]; }
  const Real& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Element of a rank-5 tensor.
  Real& at(std::size_t n, std::size_t c, std::size_t t, std::size_t h, std::size_t w) {
    return data_[offset5(n, c, t, h, w)];
  }
  const Real& at(std::size_t n, std::size_t c, std::size_t t, std::size_t h, std::size_t w) const {
    return data_[offset5(n, c, t, h, w)];
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const& {
    Tensor out = *this;
    out.reshape_in_place(std::move(shape));
    return out;
  }
  Tensor reshaped(Shape shape) && {
    reshape_in_place(std::move(shape));
    return std::move(*this);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  void reshape_in_place(Shape shape) {
    if (numel(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    shape_ = std::move(shape);
  }

  std::size_t offset5(std::size_t n, std::size_t c, std::size_t t, std::size_t h, std::size_t w) const {
    return (((n * shape_[1] + c) * shape_[2] + t) * shape_[3] + h) * shape_[4] + w;
  }

  Shape shape_;
  std::vector<Real> data_;
};

/// Named view of a rank-5 shape.
struct Dims5 {
  std::size_t n, c, t, h, w;

  static Dims5 of(const Shape& shape);
  std::size_t frame_size() const { return h * w; }
  Shape shape() const { return {n, c, t, h, w}; }
};

template <typename Real>
Dims5 dims5(const Tensor<Real>& x) {
  return Dims5::of(x.shape());
}

/// True when every element is finite.
template <typename Real>
bool all_finite(const Tensor<Real>& x);

}  // namespace gait
