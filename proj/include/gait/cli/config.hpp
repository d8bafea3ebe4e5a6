#pragma once

// Run configuration: flat `section.key = value` text over a named profile.
// Parsing rejects unknown keys; the frozen (fully resolved) rendering lists
// every key and reproduces the same config when parsed again.

#include <map>
#include <string>
#include <vector>

#include "gait/config/keyvalue.hpp"
#include "gait/data/sampler.hpp"
#include "gait/eval/eval.hpp"
#include "gait/model/model.hpp"

namespace gait {

struct DataSettings {
  std::string root;
  bool aligned = false;  // already preprocessed by `gait preprocess`
  PreprocessOptions preprocess;
};

struct ModelSettings {
  std::size_t base_channels = 32;
  std::size_t channel_divisor = 8;  // stage-1 width c = base_channels / channel_divisor
  std::size_t blocks = 1;
  std::size_t temporal_kernel = 1;
  GammaOrder gamma = GammaOrder::Paper;
  Modality modality = Modality::Both;
};

struct OptimSettings {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::vector<std::size_t> milestones{800, 1400};
};

struct TrainSettings {
  std::size_t steps = 2000;
  std::size_t checkpoint_every = 500;
  std::size_t eval_every = 0;  // 0 disables in-training evaluation
  double stop_rank1 = 0;       // stop once mean rank-1 reaches this; 0 disables
  std::uint64_t seed = 0;
  std::string out = "runs/default";
  std::size_t threads = 1;     // evaluation workers
};

struct RunConfig {
  std::string profile = "desk";
  DataSettings data;
  ModelSettings model;
  FusionConfig fusion;
  HeadConfig head;  // classes 0: number of training subjects
  LossWeights loss;
  SamplerConfig sampler;
  OptimSettings optim;
  TrainSettings train;
  EvalProtocol eval;
};

/// Defaults of a named profile: "desk" or "paper-ccpg".
RunConfig profile_defaults(const std::string& name);

/// Every recognized key, in canonical order.
const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError for an unknown key or a bad value.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// `GAIT_<SECTION>_<KEY>` variables mapped to `section.key`. GAIT_SIMD is
/// left to the kernel dispatch; any other GAIT_ variable must name a key.
KeyValues env_overrides(const std::vector<std::string>& environment);
KeyValues process_env_overrides();

/// Profile defaults, then file values, then `overrides`; validated.
RunConfig parse_run_config(const std::string& text, const std::string& origin, const KeyValues& overrides = {});
RunConfig load_run_config(const std::filesystem::path& file, const KeyValues& overrides = {});

void validate(const RunConfig& config);

/// Fully resolved rendering, one `key = value` per line.
std::string freeze(const RunConfig& config);

/// Stage-1 width c.
std::size_t stage_width(const RunConfig& config);

ModelConfig model_config(const RunConfig& config, std::size_t classes);

}  // namespace gait
