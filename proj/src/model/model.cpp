#include "gait/model/model.hpp"

#include <algorithm>

namespace gait {

template <typename Real>
DepthGait<Real>::DepthGait(ModelConfig config)
    : config_(std::move(config)),
      fusion_stages_(config_.modality == Modality::Both ? resolved_stages(config_.fusion, config_.encoder.stages.size())
                                                        : std::vector<std::size_t>{}),
      sfe_("sfe", config_.encoder),
      dfe_("dfe", config_.encoder),
      head_("head", config_.encoder.stages.back().out_channels, config_.head) {
  FusionConfig fc = config_.fusion;
  fc.gamma = config_.encoder.gamma;
  fusion_.resize(config_.encoder.stages.size());
  for (std::size_t s : fusion_stages_) {
    fusion_[s - 1] = std::make_unique<FusionBlock<Real>>("fusion.stage" + std::to_string(s),
                                                         config_.encoder.stages[s - 1].out_channels, fc);
  }
}

template <typename Real>
void DepthGait<Real>::init(ParamStore<Real>& params, std::uint64_t seed) const {
  Rng rng(seed);
  if (config_.modality != Modality::Depth) sfe_.init(params, rng);
  if (config_.modality != Modality::Silhouette) dfe_.init(params, rng);
  for (const auto& block : fusion_) {
    if (block) block->init(params, rng);
  }
  head_.init(params, rng);
}

template <typename Real>
Var<Real> DepthGait<Real>::single_branch(Context<Real>& ctx, const Branch<Real>& branch, const Var<Real>& x,
                                         std::vector<StageTrace<Real>>* trace, bool silhouette) const {
  Var<Real> h = branch.stem(ctx, x);
  for (std::size_t i = 0; i < config_.encoder.stages.size(); ++i) {
    StageTrace<Real> st;
    if (trace) (silhouette ? st.sfe_input : st.dfe_input) = h.value();
    h = branch.encode_stage(ctx, i, h);
    if (trace) {
      (silhouette ? st.fs : st.fd) = h.value();
      st.output = h.value();
      trace->push_back(std::move(st));
    }
  }
  return h;
}

template <typename Real>
Var<Real> DepthGait<Real>::forward_dual(Context<Real>& ctx, const Var<Real>& silhouette, const Var<Real>& depth,
                                        std::vector<StageTrace<Real>>* trace) const {
  if (trace) trace->clear();
  if (config_.modality == Modality::Silhouette) return single_branch(ctx, sfe_, silhouette, trace, true);
  if (config_.modality == Modality::Depth) return single_branch(ctx, dfe_, depth, trace, false);
  if (silhouette.shape() != depth.shape()) {
    throw ShapeError("forward_dual: silhouette " + to_string(silhouette.shape()) + " vs depth " +
                     to_string(depth.shape()));
  }

  Var<Real> s = sfe_.stem(ctx, silhouette);
  Var<Real> d = dfe_.stem(ctx, depth);
  Var<Real> y;
  bool unified = false;
  for (std::size_t i = 0; i < config_.encoder.stages.size(); ++i) {
    const FusionBlock<Real>* block = fusion_[i].get();
    StageTrace<Real> st;
    const Var<Real>& sfe_in = unified ? y : s;
    const Var<Real>& dfe_in = unified ? y : d;
    if (unified && block == nullptr) {
      if (trace) st.sfe_input = y.value();
      y = sfe_.encode_stage(ctx, i, y);
      if (trace) {
        st.fs = y.value();
        st.output = y.value();
        trace->push_back(std::move(st));
      }
      continue;
    }
    if (trace) {
      st.sfe_input = sfe_in.value();
      st.dfe_input = dfe_in.value();
    }
    const Var<Real> fs = sfe_.encode_stage(ctx, i, sfe_in);
    const Var<Real> fd = dfe_.encode_stage(ctx, i, dfe_in);
    if (trace) {
      st.fs = fs.value();
      st.fd = fd.value();
    }
    if (block != nullptr) {
      y = block->forward(ctx, fs, fd, i + 1, trace ? &st.fusion : nullptr);
      unified = true;
      st.fused = true;
      if (trace) st.output = y.value();
    } else {
      s = fs;
      d = fd;
    }
    if (trace) trace->push_back(std::move(st));
  }
  return y;
}

template <typename Real>
ForwardResult<Real> DepthGait<Real>::forward(Context<Real>& ctx, const Var<Real>& silhouette, const Var<Real>& depth,
                                             std::vector<StageTrace<Real>>* trace) const {
  ForwardResult<Real> out;
  out.features = forward_dual(ctx, silhouette, depth, trace);
  out.head = head_.forward(ctx, out.features);
  return out;
}

template class DepthGait<float>;
template class DepthGait<double>;

}  // namespace gait
