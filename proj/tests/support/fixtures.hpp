#pragma once

// Shared builders for gradient checks and model fixtures.

#include <filesystem>
#include <memory>
#include <string>

#include "gait/fusion/fusion.hpp"
#include "gait/head/head.hpp"
#include "gait/model/model.hpp"
#include "gait/numerics/grad_check.hpp"

namespace gait::testing {

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("gait_test_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

/// Loss sum(Y * R) over the fusion block output for a fixed random R, so
/// every output element carries a distinct weight.
inline LossBuilder fusion_block_loss(std::shared_ptr<FusionBlock<double>> block, ParamStore<double>& params,
                                     std::size_t stage, Tensor<double> readout) {
  return [block, &params, stage, readout](Graph<double>& g, const std::vector<Var<double>>& in) {
    Context<double> ctx{g, params, NormMode::Train};
    const Var<double> y = block->forward(ctx, in[0], in[1], stage);
    return sum(mul(y, g.constant(readout)));
  };
}

inline ModelConfig tiny_model_config(FusionKind kind = FusionKind::MCF, std::size_t classes = 4) {
  ModelConfig cfg;
  cfg.encoder = staged_profile(2);
  cfg.fusion.kind = kind;
  cfg.head.parts = 4;
  cfg.head.embedding = 8;
  cfg.head.classes = classes;
  return cfg;
}

}  // namespace gait::testing
