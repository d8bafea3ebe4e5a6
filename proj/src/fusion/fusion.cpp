#include "gait/fusion/fusion.hpp"

#include <algorithm>

namespace gait {

std::string to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::MCF: return "mcf";
    case FusionKind::Plus: return "plus";
    case FusionKind::Cat: return "cat";
    case FusionKind::Attention: return "attention";
  }
  return "?";
}

FusionKind parse_fusion_kind(const std::string& text) {
  for (auto k : {FusionKind::MCF, FusionKind::Plus, FusionKind::Cat, FusionKind::Attention}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown fusion method '" + text + "' (expected mcf, plus, cat or attention)");
}

std::vector<std::size_t> resolved_stages(const FusionConfig& config, std::size_t stage_count) {
  std::vector<std::size_t> stages = config.stages;
  if (stages.empty()) {
    if (config.kind == FusionKind::MCF) {
      for (std::size_t i = 1; i <= stage_count; ++i) stages.push_back(i);
    } else {
      stages.push_back(std::min<std::size_t>(2, stage_count));
    }
  }
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  for (auto s : stages) {
    if (s < 1 || s > stage_count) {
      throw ConfigError("fusion stage " + std::to_string(s) + " outside 1.." + std::to_string(stage_count));
    }
  }
  return stages;
}

std::size_t msse_inner_width(std::size_t two_c, std::size_t reduction) {
  if (reduction == 0) throw ConfigError("fusion: reduction ratio must be positive");
  return std::max<std::size_t>(two_c / reduction, 2);
}

template <typename Real>
Var<Real> concat_modalities(const Var<Real>& fs, const Var<Real>& fd) {
  if (fs.shape() != fd.shape()) {
    throw ShapeError("concat_modalities: " + to_string(fs.shape()) + " vs " + to_string(fd.shape()));
  }
  return concat_channels(fs, fd);
}

template <typename Real>
Var<Real> m_atf(const Var<Real>& local, const Var<Real>& global) {
  Var<Real> scores = global.defined() ? add(local, global) : local;
  const Shape& s = scores.shape();
  if (s.size() != 5 || s[1] % 2 != 0) throw ShapeError("m_atf: scores must be (N, 2C, T, H, W)");
  return softmax_axis(reshape(scores, Shape{s[0], 2, s[1] / 2, s[2], s[3], s[4]}), 1);
}

template <typename Real>
Var<Real> weighted_fuse(const Var<Real>& fs, const Var<Real>& fd, const Var<Real>& weights) {
  if (fs.shape() != fd.shape()) throw ShapeError("weighted_fuse: branch shapes differ");
  const Dims5 d = dims5(fs.value());
  const Shape& ws = weights.shape();
  const bool broadcast = ws.size() == 6 && ws[2] == 1 && d.c != 1;
  if (ws.size() != 6 || ws[0] != d.n || ws[1] != 2 || (ws[2] != d.c && !broadcast) || ws[3] != d.t || ws[4] != d.h ||
      ws[5] != d.w) {
    throw ShapeError("weighted_fuse: weights " + to_string(ws) + " do not match features " + to_string(fs.shape()));
  }
  const std::size_t inner = d.t * d.h * d.w;
  const std::size_t wc = ws[2];
  const Real* a = fs.value().data();
  const Real* b = fd.value().data();
  const Real* w = weights.value().data();
  Tensor<Real> out(fs.shape());
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t c = 0; c < d.c; ++c) {
      const std::size_t f = (n * d.c + c) * inner;
      const Real* w0 = w + ((n * 2 + 0) * wc + (broadcast ? 0 : c)) * inner;
      const Real* w1 = w + ((n * 2 + 1) * wc + (broadcast ? 0 : c)) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        out[f + i] = a[f + i] == b[f + i] ? a[f + i] : a[f + i] * w0[i] + b[f + i] * w1[i];
      }
    }
  }
  return fs.graph().record(std::move(out), {fs, fd, weights}, [fs, fd, weights, d, inner, wc, broadcast](const Tensor<Real>& g) {
    const Real* a = fs.value().data();
    const Real* b = fd.value().data();
    const Real* w = weights.value().data();
    Real* da = fs.requires_grad() ? fs.node()->grad_buffer().data() : nullptr;
    Real* db = fd.requires_grad() ? fd.node()->grad_buffer().data() : nullptr;
    Real* dw = weights.requires_grad() ? weights.node()->grad_buffer().data() : nullptr;
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t c = 0; c < d.c; ++c) {
        const std::size_t f = (n * d.c + c) * inner;
        const std::size_t o0 = ((n * 2 + 0) * wc + (broadcast ? 0 : c)) * inner;
        const std::size_t o1 = ((n * 2 + 1) * wc + (broadcast ? 0 : c)) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const Real gi = g[f + i];
          if (da) da[f + i] += gi * w[o0 + i];
          if (db) db[f + i] += gi * w[o1 + i];
          if (dw) {
            dw[o0 + i] += gi * a[f + i];
            dw[o1 + i] += gi * b[f + i];
          }
        }
      }
    }
  });
}

template <typename Real>
Var<Real> cross_level(const Var<Real>& fused, const Var<Real>& fs, const Var<Real>& fd, std::size_t stage,
                      FsdRule rule) {
  if (stage < 2 || rule == FsdRule::Zero) return fused;
  const Var<Real> both = add(fs, fd);
  return add(fused, rule == FsdRule::Mean ? scale(both, Real(0.5)) : both);
}

template <typename Real>
Var<Real> plus_fusion(const Var<Real>& fs, const Var<Real>& fd) {
  return add(fs, fd);
}

template <typename Real>
FusionBlock<Real>::FusionBlock(std::string prefix, std::size_t channels, FusionConfig config)
    : prefix_(std::move(prefix)), channels_(channels), config_(std::move(config)) {
  if (channels_ == 0) throw ConfigError("fusion: channel count must be positive");
  msse_inner_width(2 * channels_, config_.reduction);
}

template <typename Real>
std::size_t FusionBlock<Real>::score_channels() const {
  return config_.granularity == WeightGranularity::PerChannel ? 2 * channels_ : 2;
}

template <typename Real>
void FusionBlock<Real>::init_branch(ParamStore<Real>& params, Rng& rng, const std::string& name, std::size_t k) const {
  const std::size_t inner = inner_width();
  const bool bias = config_.score_bias;
  add_conv(params, ConvSpec{name + ".reduce", 2 * channels_, inner, 1, 1, 1, bias}, rng);
  add_norm(params, name + ".norm1", inner);
  add_conv(params, ConvSpec{name + ".spatial", inner, inner, k, 1, 1, bias}, rng);
  add_norm(params, name + ".norm2", inner);
  add_conv(params, ConvSpec{name + ".expand", inner, score_channels(), 1, 1, 1, bias}, rng);
}

template <typename Real>
void FusionBlock<Real>::init(ParamStore<Real>& params, Rng& rng) const {
  switch (config_.kind) {
    case FusionKind::MCF:
      init_branch(params, rng, prefix_ + ".local", 3);
      init_branch(params, rng, prefix_ + ".global", 5);
      break;
    case FusionKind::Attention:
      init_branch(params, rng, prefix_ + ".local", 3);
      break;
    case FusionKind::Cat:
      add_conv(params, ConvSpec{prefix_ + ".project", 2 * channels_, channels_, 1, 1, 1, true}, rng);
      break;
    case FusionKind::Plus:
      break;
  }
}

template <typename Real>
Var<Real> FusionBlock<Real>::score_branch(Context<Real>& ctx, const std::string& name, std::size_t k,
                                         const Var<Real>& concat) const {
  const std::size_t inner = inner_width();
  const bool bias = config_.score_bias;
  Var<Real> h = apply_conv(ctx, ConvSpec{name + ".reduce", 2 * channels_, inner, 1, 1, 1, bias}, concat);
  h = apply_gamma(ctx, name + ".norm1", h, config_.gamma);
  h = apply_conv(ctx, ConvSpec{name + ".spatial", inner, inner, k, 1, 1, bias}, h);
  h = apply_gamma(ctx, name + ".norm2", h, config_.gamma);
  return apply_conv(ctx, ConvSpec{name + ".expand", inner, score_channels(), 1, 1, 1, bias}, h);
}

template <typename Real>
std::pair<Var<Real>, Var<Real>> FusionBlock<Real>::msse_scores(Context<Real>& ctx, const Var<Real>& concat) const {
  if (concat.shape().size() != 5 || concat.shape()[1] != 2 * channels_) {
    throw ShapeError("msse_scores: expected " + std::to_string(2 * channels_) + " channels, got " +
                     to_string(concat.shape()));
  }
  Var<Real> local = score_branch(ctx, prefix_ + ".local", 3, concat);
  if (config_.kind == FusionKind::Attention) return {local, Var<Real>()};
  return {local, score_branch(ctx, prefix_ + ".global", 5, concat)};
}

template <typename Real>
Var<Real> FusionBlock<Real>::forward(Context<Real>& ctx, const Var<Real>& fs, const Var<Real>& fd, std::size_t stage,
                                     FusionTrace<Real>* trace) const {
  if (fs.shape() != fd.shape()) throw ShapeError("fusion: branch shapes differ");
  if (fs.shape().size() != 5 || fs.shape()[1] != channels_) {
    throw ShapeError("fusion: expected " + std::to_string(channels_) + " channels, got " + to_string(fs.shape()));
  }
  Var<Real> out;
  switch (config_.kind) {
    case FusionKind::Plus:
      out = plus_fusion(fs, fd);
      if (trace) trace->fused = out.value();
      break;
    case FusionKind::Cat: {
      const Var<Real> concat = concat_modalities(fs, fd);
      out = apply_conv(ctx, ConvSpec{prefix_ + ".project", 2 * channels_, channels_, 1, 1, 1, true}, concat);
      if (trace) {
        trace->concat = concat.value();
        trace->fused = out.value();
      }
      break;
    }
    case FusionKind::Attention:
    case FusionKind::MCF: {
      const Var<Real> concat = concat_modalities(fs, fd);
      const auto [local, global] = msse_scores(ctx, concat);
      const Var<Real> weights = m_atf(local, global);
      const Var<Real> fused = weighted_fuse(fs, fd, weights);
      out = config_.kind == FusionKind::MCF ? cross_level(fused, fs, fd, stage, config_.fsd) : fused;
      if (trace) {
        trace->concat = concat.value();
        trace->local = local.value();
        if (global.defined()) trace->global = global.value();
        trace->weights = weights.value();
        trace->fused = fused.value();
      }
      break;
    }
  }
  if (trace) trace->output = out.value();
  return out;
}

#define GAIT_INSTANTIATE(Real)                                                                                  \
  template Var<Real> concat_modalities<Real>(const Var<Real>&, const Var<Real>&);                               \
  template Var<Real> m_atf<Real>(const Var<Real>&, const Var<Real>&);                                           \
  template Var<Real> weighted_fuse<Real>(const Var<Real>&, const Var<Real>&, const Var<Real>&);                 \
  template Var<Real> cross_level<Real>(const Var<Real>&, const Var<Real>&, const Var<Real>&, std::size_t, FsdRule); \
  template Var<Real> plus_fusion<Real>(const Var<Real>&, const Var<Real>&);                                     \
  template class FusionBlock<Real>;

GAIT_INSTANTIATE(float)
GAIT_INSTANTIATE(double)
#undef GAIT_INSTANTIATE

}  // namespace gait
