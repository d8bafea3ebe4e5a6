#pragma once

// Staged feature extractor. SFE and DFE are two instances with separate
// parameters: a 3x3 stem followed by stages of [conv 3x3 -> Gamma] blocks.

#include <string>
#include <vector>

#include "gait/numerics/layers.hpp"

namespace gait {

struct StageConfig {
  std::size_t out_channels = 4;
  std::size_t stride = 1;
  std::size_t blocks = 1;
  std::size_t temporal_kernel = 1;  // 1 or 3
};

struct EncoderConfig {
  std::size_t in_channels = 1;
  std::size_t stem_channels = 4;
  std::vector<StageConfig> stages;
  GammaOrder gamma = GammaOrder::Paper;

  /// Channel count entering stage `i` (0-based).
  std::size_t stage_input_channels(std::size_t i) const {
    return i == 0 ? stem_channels : stages.at(i - 1).out_channels;
  }
};

/// Four stages, strides (1, 2, 2, 1), widths c * (1, 2, 4, 8).
EncoderConfig staged_profile(std::size_t c, std::size_t blocks = 1);

void validate(const EncoderConfig& config);

/// Output (C, H, W) of stage `i` for an H x W input.
Shape stage_output_shape(const EncoderConfig& config, std::size_t i, const Shape& input);

template <typename Real>
class Branch {
 public:
  Branch(std::string prefix, EncoderConfig config);

  void init(ParamStore<Real>& params, Rng& rng) const;

  Var<Real> stem(Context<Real>& ctx, const Var<Real>& x) const;
  Var<Real> encode_stage(Context<Real>& ctx, std::size_t stage, const Var<Real>& x) const;

  const std::string& prefix() const { return prefix_; }
  const EncoderConfig& config() const { return config_; }

 private:
  ConvSpec block_conv(std::size_t stage, std::size_t block) const;
  std::string block_name(std::size_t stage, std::size_t block) const;

  std::string prefix_;
  EncoderConfig config_;
};

}  // namespace gait
