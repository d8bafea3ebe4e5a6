#pragma once

// Modality fusion between the silhouette and depth branches: the multi-scale
// cross-level block (MCF) and the Plus / Cat / Attention baselines.

#include <string>
#include <vector>

#include "gait/numerics/layers.hpp"

namespace gait {

enum class FusionKind { MCF, Plus, Cat, Attention };
enum class FsdRule { Mean, Sum, Zero };
enum class WeightGranularity { PerChannel, PerPixel };

struct FusionConfig {
  FusionKind kind = FusionKind::MCF;
  std::vector<std::size_t> stages;  // 1-based active stages; empty selects the default for `kind`
  std::size_t reduction = 4;
  FsdRule fsd = FsdRule::Mean;
  WeightGranularity granularity = WeightGranularity::PerChannel;
  bool score_bias = true;
  GammaOrder gamma = GammaOrder::Paper;
};

std::string to_string(FusionKind kind);
FusionKind parse_fusion_kind(const std::string& text);

/// Active stages, sorted. MCF defaults to every stage, the baselines to
/// stage 2 (stage 1 for a single-stage encoder).
std::vector<std::size_t> resolved_stages(const FusionConfig& config, std::size_t stage_count);

/// Inner width of a score branch: max(2C / r, 2).
std::size_t msse_inner_width(std::size_t two_c, std::size_t reduction);

/// Per-stage values recorded for tests and ablation. Entries a variant does
/// not produce stay empty.
template <typename Real>
struct FusionTrace {
  Tensor<Real> concat;  // F_t
  Tensor<Real> local;   // L_S
  Tensor<Real> global;  // G_S
  Tensor<Real> weights; // W_S, (N, 2, C or 1, T, H, W)
  Tensor<Real> fused;   // X_f
  Tensor<Real> output;  // Y_f
};

/// F_t = [F_s ; F_d] along channels.
template <typename Real>
Var<Real> concat_modalities(const Var<Real>& fs, const Var<Real>& fd);

/// Softmax over the modality axis of reshape(L_S + G_S). `global` may be
/// undefined (single-scale attention). Scores with 2C channels give
/// per-channel weights (N, 2, C, T, H, W); 2 channels give per-pixel weights
/// (N, 2, 1, T, H, W).
template <typename Real>
Var<Real> m_atf(const Var<Real>& local, const Var<Real>& global);

/// X_f = F_s * W[:, 0] + F_d * W[:, 1], broadcasting a size-1 channel axis of
/// W. Positions where F_s == F_d yield F_s exactly.
template <typename Real>
Var<Real> weighted_fuse(const Var<Real>& fs, const Var<Real>& fd, const Var<Real>& weights);

/// Y_f = X_f + F_sd for stages >= 2 (1-based), X_f at stage 1.
template <typename Real>
Var<Real> cross_level(const Var<Real>& fused, const Var<Real>& fs, const Var<Real>& fd, std::size_t stage, FsdRule rule);

template <typename Real>
Var<Real> plus_fusion(const Var<Real>& fs, const Var<Real>& fd);

/// One fusion site with its own parameters, operating on C-channel features.
template <typename Real>
class FusionBlock {
 public:
  FusionBlock(std::string prefix, std::size_t channels, FusionConfig config);

  void init(ParamStore<Real>& params, Rng& rng) const;

  /// (L_S, G_S); G_S is undefined for Attention.
  std::pair<Var<Real>, Var<Real>> msse_scores(Context<Real>& ctx, const Var<Real>& concat) const;

  Var<Real> forward(Context<Real>& ctx, const Var<Real>& fs, const Var<Real>& fd, std::size_t stage,
                    FusionTrace<Real>* trace = nullptr) const;

  std::size_t inner_width() const { return msse_inner_width(2 * channels_, config_.reduction); }
  std::size_t score_channels() const;

 private:
  Var<Real> score_branch(Context<Real>& ctx, const std::string& name, std::size_t k, const Var<Real>& concat) const;
  void init_branch(ParamStore<Real>& params, Rng& rng, const std::string& name, std::size_t k) const;

  std::string prefix_;
  std::size_t channels_;
  FusionConfig config_;
};

}  // namespace gait
