#pragma once

#include <cmath>
#include <random>

#include "gait/numerics/tensor.hpp"

namespace gait {

using Rng = std::mt19937_64;

template <typename Real>
Tensor<Real> uniform_tensor(Shape shape, Rng& rng, double lo, double hi) {
  Tensor<Real> out(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : out.values()) v = static_cast<Real>(dist(rng));
  return out;
}

/// He-uniform initialization for a weight whose rows see `fan_in` inputs.
template <typename Real>
Tensor<Real> he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  return uniform_tensor<Real>(std::move(shape), rng, -bound, bound);
}

}  // namespace gait
