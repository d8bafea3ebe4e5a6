#include "gait/encoder/encoder.hpp"

namespace gait {

EncoderConfig staged_profile(std::size_t c, std::size_t blocks) {
  if (c == 0) throw ConfigError("encoder: base channel count must be positive");
  EncoderConfig config;
  config.stem_channels = c;
  const std::size_t widths[] = {c, 2 * c, 4 * c, 8 * c};
  const std::size_t strides[] = {1, 2, 2, 1};
  for (std::size_t i = 0; i < 4; ++i) config.stages.push_back({widths[i], strides[i], blocks, 1});
  return config;
}

void validate(const EncoderConfig& config) {
  if (config.stages.empty()) throw ConfigError("encoder: at least one stage is required");
  if (config.in_channels == 0 || config.stem_channels == 0) throw ConfigError("encoder: channel counts must be positive");
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& s = config.stages[i];
    const std::string where = "encoder stage " + std::to_string(i + 1);
    if (s.out_channels == 0) throw ConfigError(where + ": out_channels must be positive");
    if (s.stride != 1 && s.stride != 2) throw ConfigError(where + ": stride must be 1 or 2");
    if (s.blocks == 0) throw ConfigError(where + ": blocks must be positive");
    if (s.temporal_kernel != 1 && s.temporal_kernel != 3) throw ConfigError(where + ": temporal kernel must be 1 or 3");
  }
}

Shape stage_output_shape(const EncoderConfig& config, std::size_t i, const Shape& input) {
  if (input.size() != 2) throw ShapeError("stage_output_shape: expects (H, W)");
  std::size_t h = input[0], w = input[1];
  for (std::size_t s = 0; s <= i; ++s) {
    const std::size_t stride = config.stages.at(s).stride;
    h = (h + stride - 1) / stride;
    w = (w + stride - 1) / stride;
  }
  return {config.stages.at(i).out_channels, h, w};
}

template <typename Real>
Branch<Real>::Branch(std::string prefix, EncoderConfig config) : prefix_(std::move(prefix)), config_(std::move(config)) {
  validate(config_);
}

template <typename Real>
std::string Branch<Real>::block_name(std::size_t stage, std::size_t block) const {
  return prefix_ + ".stage" + std::to_string(stage + 1) + ".block" + std::to_string(block + 1);
}

template <typename Real>
ConvSpec Branch<Real>::block_conv(std::size_t stage, std::size_t block) const {
  const auto& s = config_.stages.at(stage);
  ConvSpec spec;
  spec.name = block_name(stage, block) + ".conv";
  spec.in = block == 0 ? config_.stage_input_channels(stage) : s.out_channels;
  spec.out = s.out_channels;
  spec.k = 3;
  spec.kt = s.temporal_kernel;
  spec.stride = block == 0 ? s.stride : 1;
  return spec;
}

template <typename Real>
void Branch<Real>::init(ParamStore<Real>& params, Rng& rng) const {
  add_conv(params, ConvSpec{prefix_ + ".stem.conv", config_.in_channels, config_.stem_channels, 3}, rng);
  add_norm(params, prefix_ + ".stem.norm", config_.stem_channels);
  for (std::size_t i = 0; i < config_.stages.size(); ++i) {
    for (std::size_t b = 0; b < config_.stages[i].blocks; ++b) {
      add_conv(params, block_conv(i, b), rng);
      add_norm(params, block_name(i, b) + ".norm", config_.stages[i].out_channels);
    }
  }
}

template <typename Real>
Var<Real> Branch<Real>::stem(Context<Real>& ctx, const Var<Real>& x) const {
  const ConvSpec spec{prefix_ + ".stem.conv", config_.in_channels, config_.stem_channels, 3};
  return apply_gamma(ctx, prefix_ + ".stem.norm", apply_conv(ctx, spec, x), config_.gamma);
}

template <typename Real>
Var<Real> Branch<Real>::encode_stage(Context<Real>& ctx, std::size_t stage, const Var<Real>& x) const {
  if (stage >= config_.stages.size()) throw ConfigError("encode_stage: no stage " + std::to_string(stage + 1));
  Var<Real> h = x;
  for (std::size_t b = 0; b < config_.stages[stage].blocks; ++b) {
    h = apply_gamma(ctx, block_name(stage, b) + ".norm", apply_conv(ctx, block_conv(stage, b), h), config_.gamma);
  }
  return h;
}

template class Branch<float>;
template class Branch<double>;

}  // namespace gait
