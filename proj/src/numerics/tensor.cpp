#include "gait/numerics/tensor.hpp"

#include <cmath>

namespace gait {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Dims5 Dims5::of(const Shape& shape) {
  if (shape.size() != 5) throw ShapeError("expected a rank-5 (N, C, T, H, W) tensor, got " + to_string(shape));
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("rank-5 tensor with an empty axis: " + to_string(shape));
  }
  return {shape[0], shape[1], shape[2], shape[3], shape[4]};
}

template <typename Real>
bool all_finite(const Tensor<Real>& x) {
  for (Real v : x.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template bool all_finite<float>(const Tensor<float>&);
template bool all_finite<double>(const Tensor<double>&);

}  // namespace gait
