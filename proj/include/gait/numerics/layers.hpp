#pragma once

// Named-parameter building blocks: convolution, batch norm and the
// ReLU/BN activation pair used throughout the encoder and fusion block.

#include <string>

#include "gait/numerics/init.hpp"
#include "gait/numerics/ops.hpp"

namespace gait {

/// Graph, parameters and normalization mode for one forward pass.
template <typename Real>
struct Context {
  Graph<Real>& graph;
  ParamStore<Real>& params;
  NormMode mode = NormMode::Train;
};

enum class GammaOrder {
  Paper,         // BN(ReLU(x))
  Conventional,  // ReLU(BN(x))
};

struct ConvSpec {
  std::string name;
  std::size_t in = 1;
  std::size_t out = 1;
  std::size_t k = 3;
  std::size_t kt = 1;
  std::size_t stride = 1;
  bool bias = false;
};

template <typename Real>
void add_conv(ParamStore<Real>& params, const ConvSpec& spec, Rng& rng) {
  params.add(spec.name + ".weight",
             he_uniform<Real>({spec.out, spec.in, spec.kt, spec.k, spec.k}, spec.in * spec.kt * spec.k * spec.k, rng));
  if (spec.bias) params.add(spec.name + ".bias", Tensor<Real>({spec.out}));
}

template <typename Real>
Var<Real> apply_conv(Context<Real>& ctx, const ConvSpec& spec, const Var<Real>& x) {
  std::optional<Var<Real>> bias;
  if (spec.bias) bias = ctx.graph.param(ctx.params.get(spec.name + ".bias"));
  return conv_spatial(x, ctx.graph.param(ctx.params.get(spec.name + ".weight")), bias, spec.stride);
}

template <typename Real>
void add_norm(ParamStore<Real>& params, const std::string& name, std::size_t channels) {
  params.add(name + ".gamma", Tensor<Real>({channels}, Real(1)));
  params.add(name + ".beta", Tensor<Real>({channels}, Real(0)));
  params.add(name + ".running_mean", Tensor<Real>({channels}, Real(0)), false);
  params.add(name + ".running_var", Tensor<Real>({channels}, Real(1)), false);
}

template <typename Real>
Var<Real> apply_norm(Context<Real>& ctx, const std::string& name, const Var<Real>& x) {
  NormStats<Real> stats{&ctx.params.get(name + ".running_mean"), &ctx.params.get(name + ".running_var")};
  NormOptions<Real> options;
  options.mode = ctx.mode;
  return batch_norm(x, ctx.graph.param(ctx.params.get(name + ".gamma")),
                    ctx.graph.param(ctx.params.get(name + ".beta")), stats, options);
}

/// The activation pair that follows every convolution.
template <typename Real>
Var<Real> apply_gamma(Context<Real>& ctx, const std::string& norm_name, const Var<Real>& x, GammaOrder order) {
  if (order == GammaOrder::Paper) return apply_norm(ctx, norm_name, relu(x));
  return relu(apply_norm(ctx, norm_name, x));
}

}  // namespace gait
