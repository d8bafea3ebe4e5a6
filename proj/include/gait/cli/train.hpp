#pragma once

// Training loop: P x K clips -> forward_dual -> head losses -> SGD.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include "gait/cli/config.hpp"

namespace gait {

/// lr at 1-based `step`: base * 0.1^(number of milestones m < step).
double learning_rate(const OptimSettings& optim, std::size_t step);

/// SGD with momentum and L2 weight decay on every trainable entry:
///   v = momentum * v + (g + wd * w);  w -= lr * v
class Sgd {
 public:
  explicit Sgd(const OptimSettings& settings) : settings_(settings) {}
  void step(ParamStore<float>& params, double lr);

 private:
  OptimSettings settings_;
  std::map<std::string, std::vector<float>> velocity_;
};

/// Scans `data.root` and loads every sequence, preprocessing raw trees.
SequenceStore load_dataset(const RunConfig& config);

/// Gallery / probe split of `protocol` embedded with the current weights.
EvalReport evaluate_model(const DepthGait<float>& model, const ParamStore<float>& params, const SequenceStore& store,
                          const EvalProtocol& protocol, std::size_t threads);

struct TrainOutcome {
  std::size_t steps = 0;          // optimizer steps taken
  bool stopped_early = false;
  std::optional<double> rank1;    // last in-training evaluation, mean rank-1
  std::filesystem::path checkpoint;
  std::string frozen_config;      // with head.classes resolved
};

/// Runs training into `config.train.out`: config.txt (frozen), train.log
/// (`step loss l_tri l_ce lr`), eval.log when evaluating, and model.ckpt
/// (every checkpoint_every steps and at the end, written atomically). A
/// non-finite loss throws NonFiniteError and leaves the last checkpoint.
TrainOutcome train(const RunConfig& config, const SequenceStore& store);

/// Rebuilds the model of a checkpoint from its frozen config.
struct LoadedModel {
  RunConfig config;
  std::unique_ptr<DepthGait<float>> model;
  ParamStore<float> params;
};
LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace gait
