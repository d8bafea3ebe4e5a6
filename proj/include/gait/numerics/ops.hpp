#pragma once

// Differentiable primitives shared by the encoder, fusion block and head.

#include <optional>
#include <type_traits>

#include "gait/numerics/autodiff.hpp"

namespace gait {

enum class NormMode { Train, Eval };

/// Running statistics of one batch-normalization layer. Both tensors are
/// non-trainable ParamStore buffers of shape (C).
template <typename Real>
struct NormStats {
  Parameter<Real>* running_mean = nullptr;
  Parameter<Real>* running_var = nullptr;
};

template <typename Real>
struct NormOptions {
  NormMode mode = NormMode::Train;
  Real momentum = Real(0.1);
  Real eps = Real(1e-5);
};

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b);

/// Elementwise product of equal shapes.
template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b);

template <typename Real>
Var<Real> scale(const Var<Real>& a, Real factor);

template <typename Real>
Var<Real> relu(const Var<Real>& x);

template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape);

/// Sum of all elements, as a one-element tensor.
template <typename Real>
Var<Real> sum(const Var<Real>& x);

/// Sum of squared elements, as a one-element tensor.
template <typename Real>
Var<Real> sum_squares(const Var<Real>& x);

/// Concatenation along axis 1. Shapes must agree on every other axis.
template <typename Real>
Var<Real> concat_channels(const Var<Real>& a, const Var<Real>& b);

/// Channels [begin, begin + count) of axis 1.
template <typename Real>
Var<Real> slice_channels(const Var<Real>& x, std::size_t begin, std::size_t count);

/// Per-frame convolution over a (N, C, T, H, W) input.
///
/// `weight` has shape (C_out, C_in, kt, k, k) with odd kt and k in {1, 3, 5}.
/// Spatial padding is (k-1)/2 and temporal padding (kt-1)/2, so H and W map to
/// ceil(H / stride), ceil(W / stride) and T is preserved. `bias`, when
/// present, has shape (C_out).
template <typename Real>
Var<Real> conv_spatial(const Var<Real>& x, const Var<Real>& weight,
                       const std::type_identity_t<std::optional<Var<Real>>>& bias,
                       std::size_t stride);

/// Batch normalization over every axis except axis 1 (channels), followed by
/// the per-channel affine `gamma * xhat + beta`. In train mode the batch
/// moments are used and the running statistics updated; a channel with a
/// single sample falls back to the running statistics. Eval mode always
/// uses the running statistics.
template <typename Real>
Var<Real> batch_norm(const Var<Real>& x, const Var<Real>& gamma, const Var<Real>& beta, NormStats<Real> stats,
                     const NormOptions<Real>& options);

/// Numerically stabilized softmax along `axis`.
template <typename Real>
Var<Real> softmax_axis(const Var<Real>& x, std::size_t axis);

}  // namespace gait
