#pragma once

// Prediction head: temporal and horizontal pooling, per-part FCs, BNNeck,
// and the triplet + cross-entropy training objective.

#include <vector>

#include "gait/numerics/layers.hpp"

namespace gait {

enum class TemporalPoolMode { Max, Mean };

struct HeadConfig {
  std::size_t parts = 16;
  std::size_t embedding = 64;
  std::size_t classes = 8;
  TemporalPoolMode temporal = TemporalPoolMode::Max;
};

struct LossWeights {
  double alpha = 1.0;   // triplet
  double beta = 1.0;    // cross-entropy
  double margin = 0.2;
};

/// (N, C, T, H, W) -> (N, C, H, W), max or mean over frames. Max routes the
/// gradient to the first maximal frame.
template <typename Real>
Var<Real> temporal_pool(const Var<Real>& x, TemporalPoolMode mode = TemporalPoolMode::Max);

/// (N, C, H, W) -> (N, C, P). Rows are split into bands of ceil(H / P); a
/// short last band is pooled over its real rows only. Each band contributes
/// max + mean over (rows x W). Throws ConfigError when P > H or a band would
/// be empty.
template <typename Real>
Var<Real> horizontal_pool(const Var<Real>& x, std::size_t parts);

/// Independent linear map per part: x (N, C_in, P), weight (P, C_in, C_out)
/// -> (N, C_out, P). No bias.
template <typename Real>
Var<Real> part_linear(const Var<Real>& x, const Var<Real>& weight);

/// Batch-all triplet loss on f (N, E, P): per part, the mean of
/// max(0, d(a,p) - d(a,n) + margin) over triplets with positive loss, then
/// the mean over parts. d = sqrt(max(|a - b|^2, 1e-12)).
template <typename Real>
Var<Real> triplet_loss(const Var<Real>& f, const std::vector<std::size_t>& labels, double margin);

/// Softmax cross-entropy on logits (N, K, P), averaged over batch and parts.
template <typename Real>
Var<Real> cross_entropy(const Var<Real>& logits, const std::vector<std::size_t>& labels);

template <typename Real>
struct LossTerms {
  Var<Real> total;
  Var<Real> triplet;
  Var<Real> ce;
};

/// alpha * L_tri + beta * L_ce.
template <typename Real>
LossTerms<Real> combined_loss(const Var<Real>& f, const Var<Real>& logits, const std::vector<std::size_t>& labels,
                              const LossWeights& weights);

template <typename Real>
struct HeadOutput {
  Var<Real> embedding;  // f, (N, E, P)
  Var<Real> logits;     // p, (N, K, P)
};

template <typename Real>
class Head {
 public:
  Head(std::string prefix, std::size_t in_channels, HeadConfig config);

  void init(ParamStore<Real>& params, Rng& rng) const;

  /// Pools Y_f and applies FCs then BNNeck + classifier.
  HeadOutput<Real> forward(Context<Real>& ctx, const Var<Real>& features) const;

  /// BNNeck on f followed by the per-part classifier.
  Var<Real> bnneck(Context<Real>& ctx, const Var<Real>& f) const;

  const HeadConfig& config() const { return config_; }

 private:
  std::string prefix_;
  std::size_t in_channels_;
  HeadConfig config_;
};

}  // namespace gait
