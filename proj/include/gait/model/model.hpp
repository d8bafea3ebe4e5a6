#pragma once

// DepthGait: silhouette and depth branches joined by stage-wise fusion,
// followed by the pooling / embedding head.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gait/encoder/encoder.hpp"
#include "gait/fusion/fusion.hpp"
#include "gait/head/head.hpp"

namespace gait {

enum class Modality { Both, Silhouette, Depth };

struct ModelConfig {
  EncoderConfig encoder;
  FusionConfig fusion;
  HeadConfig head;
  Modality modality = Modality::Both;
};

template <typename Real>
struct StageTrace {
  Tensor<Real> sfe_input;  // empty when the branch did not run
  Tensor<Real> dfe_input;
  Tensor<Real> fs;
  Tensor<Real> fd;
  bool fused = false;
  FusionTrace<Real> fusion;
  Tensor<Real> output;     // what the next stage consumes
};

template <typename Real>
struct ForwardResult {
  Var<Real> features;  // final Y_f
  HeadOutput<Real> head;
};

template <typename Real>
class DepthGait {
 public:
  explicit DepthGait(ModelConfig config);

  /// Registers every parameter, drawing initial values from `seed`.
  void init(ParamStore<Real>& params, std::uint64_t seed) const;

  /// Encoder and fusion only. Before the first active fusion stage the two
  /// branches run on their own inputs; from then on both consume the fused
  /// Y_f of the previous stage, and stages without fusion run the silhouette
  /// branch alone. Single-modality configs run one branch throughout.
  Var<Real> forward_dual(Context<Real>& ctx, const Var<Real>& silhouette, const Var<Real>& depth,
                         std::vector<StageTrace<Real>>* trace = nullptr) const;

  ForwardResult<Real> forward(Context<Real>& ctx, const Var<Real>& silhouette, const Var<Real>& depth,
                              std::vector<StageTrace<Real>>* trace = nullptr) const;

  const ModelConfig& config() const { return config_; }
  const std::vector<std::size_t>& fusion_stages() const { return fusion_stages_; }
  const Branch<Real>& sfe() const { return sfe_; }
  const Branch<Real>& dfe() const { return dfe_; }

 private:
  Var<Real> single_branch(Context<Real>& ctx, const Branch<Real>& branch, const Var<Real>& x,
                          std::vector<StageTrace<Real>>* trace, bool silhouette) const;

  ModelConfig config_;
  std::vector<std::size_t> fusion_stages_;
  Branch<Real> sfe_;
  Branch<Real> dfe_;
  std::vector<std::unique_ptr<FusionBlock<Real>>> fusion_;  // indexed by stage, null when inactive
  Head<Real> head_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;  // frozen run config
  ParamStore<float> params;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& config_text, const ParamStore<float>& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gait
