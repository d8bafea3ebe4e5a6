#include "gait/cli/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

extern char** environ;

namespace gait {
namespace {

template <typename E>
struct Names {
  std::vector<std::pair<E, std::string>> items;

  std::string name(E v) const {
    for (const auto& [e, n] : items)
      if (e == v) return n;
    return "?";
  }
  E parse(const std::string& key, const std::string& text) const {
    const std::string t = to_lower(text);
    std::string allowed;
    for (const auto& [e, n] : items) {
      if (n == t) return e;
      allowed += (allowed.empty() ? "" : ", ") + n;
    }
    throw ConfigError(key + ": '" + text + "' is not one of " + allowed);
  }
};

const Names<GammaOrder> kGamma{{{GammaOrder::Paper, "paper"}, {GammaOrder::Conventional, "conventional"}}};
const Names<Modality> kModality{
    {{Modality::Both, "both"}, {Modality::Silhouette, "silhouette"}, {Modality::Depth, "depth"}}};
const Names<FsdRule> kFsd{{{FsdRule::Mean, "mean"}, {FsdRule::Sum, "sum"}, {FsdRule::Zero, "zero"}}};
const Names<WeightGranularity> kGranularity{
    {{WeightGranularity::PerChannel, "channel"}, {WeightGranularity::PerPixel, "pixel"}}};
const Names<TemporalPoolMode> kTemporal{{{TemporalPoolMode::Max, "max"}, {TemporalPoolMode::Mean, "mean"}}};
const Names<ShortClipPolicy> kShortClip{{{ShortClipPolicy::Wrap, "wrap"}, {ShortClipPolicy::Discard, "discard"}}};
const Names<NormalizationScope> kScope{
    {{NormalizationScope::Frame, "frame"}, {NormalizationScope::Sequence, "sequence"}}};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string uint_list(const std::vector<std::size_t>& v) {
  std::vector<std::string> items;
  for (auto x : v) items.push_back(std::to_string(x));
  return join_list(items);
}

struct Setting {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
};

#define GAIT_SIZE(KEY, FIELD)                                                        \
  Setting {                                                                          \
    KEY, [](const RunConfig& c) { return std::to_string(c.FIELD); },                 \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_uint(k, v); } \
  }
#define GAIT_REAL(KEY, FIELD)                                                         \
  Setting {                                                                           \
    KEY, [](const RunConfig& c) { return num(c.FIELD); },                             \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_double(k, v); } \
  }
#define GAIT_BOOL(KEY, FIELD)                                                              \
  Setting {                                                                                \
    KEY, [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); },       \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = parse_bool(k, v); } \
  }
#define GAIT_TEXT(KEY, FIELD)                                                       \
  Setting {                                                                         \
    KEY, [](const RunConfig& c) { return c.FIELD; },                                \
        [](RunConfig& c, const std::string&, const std::string& v) { c.FIELD = v; } \
  }
#define GAIT_ENUM(KEY, FIELD, NAMES)                                                 \
  Setting {                                                                          \
    KEY, [](const RunConfig& c) { return NAMES.name(c.FIELD); },                     \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = NAMES.parse(k, v); } \
  }
#define GAIT_LIST(KEY, FIELD)                                                                  \
  Setting {                                                                                    \
    KEY, [](const RunConfig& c) { return join_list(c.FIELD); },                                \
        [](RunConfig& c, const std::string&, const std::string& v) { c.FIELD = split_list(v); } \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> all{
      GAIT_TEXT("run.profile", profile),
      GAIT_TEXT("data.root", data.root),
      GAIT_BOOL("data.aligned", data.aligned),
      GAIT_SIZE("data.height", data.preprocess.align.height),
      GAIT_SIZE("data.crop_width", data.preprocess.align.crop_width),
      GAIT_SIZE("data.final_width", data.preprocess.align.final_width),
      GAIT_ENUM("data.scope", data.preprocess.scope, kScope),
      GAIT_SIZE("model.base_channels", model.base_channels),
      GAIT_SIZE("model.channel_divisor", model.channel_divisor),
      GAIT_SIZE("model.blocks", model.blocks),
      GAIT_SIZE("model.temporal_kernel", model.temporal_kernel),
      GAIT_ENUM("model.gamma", model.gamma, kGamma),
      GAIT_ENUM("model.modality", model.modality, kModality),
      Setting{"fusion.method", [](const RunConfig& c) { return to_string(c.fusion.kind); },
              [](RunConfig& c, const std::string&, const std::string& v) { c.fusion.kind = parse_fusion_kind(v); }},
      Setting{"fusion.stages",
              [](const RunConfig& c) { return c.fusion.stages.empty() ? std::string("default") : uint_list(c.fusion.stages); },
              [](RunConfig& c, const std::string& k, const std::string& v) {
                c.fusion.stages = to_lower(v) == "default" ? std::vector<std::size_t>{} : parse_uint_list(k, v);
              }},
      GAIT_SIZE("fusion.reduction", fusion.reduction),
      GAIT_ENUM("fusion.fsd", fusion.fsd, kFsd),
      GAIT_ENUM("fusion.granularity", fusion.granularity, kGranularity),
      GAIT_BOOL("fusion.score_bias", fusion.score_bias),
      GAIT_SIZE("head.parts", head.parts),
      GAIT_SIZE("head.embedding", head.embedding),
      GAIT_SIZE("head.classes", head.classes),
      GAIT_ENUM("head.temporal_pool", head.temporal, kTemporal),
      GAIT_REAL("loss.alpha", loss.alpha),
      GAIT_REAL("loss.beta", loss.beta),
      GAIT_REAL("loss.margin", loss.margin),
      GAIT_SIZE("sampler.subjects", sampler.subjects),
      GAIT_SIZE("sampler.sequences", sampler.sequences),
      GAIT_SIZE("sampler.clip_length", sampler.clip_length),
      GAIT_ENUM("sampler.short_clip", sampler.short_clip, kShortClip),
      GAIT_REAL("optim.lr", optim.lr),
      GAIT_REAL("optim.momentum", optim.momentum),
      GAIT_REAL("optim.weight_decay", optim.weight_decay),
      Setting{"optim.milestones", [](const RunConfig& c) { return uint_list(c.optim.milestones); },
              [](RunConfig& c, const std::string& k, const std::string& v) { c.optim.milestones = parse_uint_list(k, v); }},
      GAIT_SIZE("train.steps", train.steps),
      GAIT_SIZE("train.checkpoint_every", train.checkpoint_every),
      GAIT_SIZE("train.eval_every", train.eval_every),
      GAIT_REAL("train.stop_rank1", train.stop_rank1),
      GAIT_SIZE("train.seed", train.seed),
      GAIT_TEXT("train.out", train.out),
      GAIT_SIZE("train.threads", train.threads),
      GAIT_LIST("eval.gallery_conditions", eval.gallery.conditions),
      GAIT_LIST("eval.gallery_views", eval.gallery.views),
      GAIT_LIST("eval.probe_conditions", eval.probe.conditions),
      GAIT_LIST("eval.probe_views", eval.probe.views),
      GAIT_BOOL("eval.exclude_identical_view", eval.exclude_identical_view),
      GAIT_LIST("eval.conditions", eval.conditions),
      Setting{"eval.ranks", [](const RunConfig& c) { return uint_list(c.eval.ranks); },
              [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.ranks = parse_uint_list(k, v); }},
  };
  return all;
}

#undef GAIT_SIZE
#undef GAIT_REAL
#undef GAIT_BOOL
#undef GAIT_TEXT
#undef GAIT_ENUM
#undef GAIT_LIST

}  // namespace

RunConfig profile_defaults(const std::string& name) {
  RunConfig c;
  c.profile = name;
  c.head.classes = 0;
  c.eval.gallery.conditions = {"nm"};
  c.eval.probe.conditions = {"cl", "up", "dn", "bg"};
  c.eval.conditions = {"CL", "UP", "DN", "BG"};
  c.eval.exclude_identical_view = false;
  if (name == "desk") return c;
  if (name == "paper-ccpg") {
    c.model.base_channels = 64;
    c.model.channel_divisor = 1;
    c.head.embedding = 256;
    c.sampler = SamplerConfig{8, 16, 30, ShortClipPolicy::Wrap};
    c.optim.milestones = {20000, 30000, 40000};
    c.train.steps = 60000;
    c.train.checkpoint_every = 5000;
    c.eval.exclude_identical_view = true;
    return c;
  }
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper-ccpg)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& s : settings()) out.push_back(s.key);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& s : settings()) {
    if (s.key == key) {
      s.set(config, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key: " + key);
}

KeyValues env_overrides(const std::vector<std::string>& environment) {
  KeyValues out;
  const std::string prefix = "GAIT_";
  for (const auto& entry : environment) {
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(prefix.size(), eq - prefix.size());
    if (name == "SIMD") continue;  // kernel backend selection, not a config key
    const auto sep = name.find('_');
    if (sep == std::string::npos || sep == 0 || sep + 1 == name.size()) {
      throw ConfigError("environment override " + entry.substr(0, eq) + " is not GAIT_<SECTION>_<KEY>");
    }
    const std::string key = to_lower(name.substr(0, sep)) + "." + to_lower(name.substr(sep + 1));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      throw ConfigError("environment override " + entry.substr(0, eq) + " names unknown key " + key);
    }
    out[key] = entry.substr(eq + 1);
  }
  return out;
}

KeyValues process_env_overrides() {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) env.emplace_back(*e);
  return env_overrides(env);
}

RunConfig parse_run_config(const std::string& text, const std::string& origin, const KeyValues& overrides) {
  KeyValues values = parse_key_values(text, origin);
  for (const auto& [k, v] : overrides) values[k] = v;
  const auto profile = values.find("run.profile");
  RunConfig config = profile_defaults(profile == values.end() ? "desk" : profile->second);
  for (const auto& [k, v] : values) apply_setting(config, k, v);
  validate(config);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& file, const KeyValues& overrides) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_run_config(s.str(), file.string(), overrides);
}

std::size_t stage_width(const RunConfig& config) { return config.model.base_channels / config.model.channel_divisor; }

void validate(const RunConfig& c) {
  if (c.model.channel_divisor == 0 || c.model.base_channels % c.model.channel_divisor != 0 || stage_width(c) == 0) {
    throw ConfigError("model.base_channels must be a positive multiple of model.channel_divisor");
  }
  if (c.model.blocks == 0) throw ConfigError("model.blocks must be >= 1");
  if (c.model.temporal_kernel != 1 && c.model.temporal_kernel != 3) throw ConfigError("model.temporal_kernel must be 1 or 3");
  if (c.fusion.reduction == 0) throw ConfigError("fusion.reduction must be >= 1");
  resolved_stages(c.fusion, 4);
  if (c.head.parts == 0 || c.head.embedding == 0) throw ConfigError("head.parts and head.embedding must be positive");
  if (c.head.parts > c.data.preprocess.align.height / 4) {
    throw ConfigError("head.parts exceeds the rows left after the encoder strides");
  }
  if (c.loss.alpha < 0 || c.loss.beta < 0 || c.loss.alpha + c.loss.beta <= 0) {
    throw ConfigError("loss.alpha and loss.beta must be non-negative with a positive sum");
  }
  if (c.loss.margin < 0) throw ConfigError("loss.margin must be non-negative");
  if (c.sampler.subjects < 2 || c.sampler.sequences < 2 || c.sampler.clip_length < 1) {
    throw ConfigError("sampler needs subjects >= 2, sequences >= 2, clip_length >= 1");
  }
  if (!(c.optim.lr > 0) || c.optim.momentum < 0 || c.optim.momentum >= 1 || c.optim.weight_decay < 0) {
    throw ConfigError("optim: lr > 0, momentum in [0, 1), weight_decay >= 0");
  }
  if (!std::is_sorted(c.optim.milestones.begin(), c.optim.milestones.end())) {
    throw ConfigError("optim.milestones must be nondecreasing");
  }
  if (c.train.checkpoint_every == 0) throw ConfigError("train.checkpoint_every must be >= 1");
  if (c.train.threads == 0) throw ConfigError("train.threads must be >= 1");
  if (c.train.stop_rank1 < 0 || c.train.stop_rank1 > 100) throw ConfigError("train.stop_rank1 must be in [0, 100]");
  if (c.eval.ranks.empty()) throw ConfigError("eval.ranks must not be empty");
  for (auto k : c.eval.ranks)
    if (k == 0) throw ConfigError("eval.ranks entries must be >= 1");
  const auto& a = c.data.preprocess.align;
  if (a.final_width > a.crop_width || (a.crop_width - a.final_width) % 2 != 0 || a.height == 0) {
    throw ConfigError("data: final_width must not exceed crop_width and differ by an even amount");
  }
}

std::string freeze(const RunConfig& config) {
  std::string out;
  for (const auto& s : settings()) out += s.key + " = " + s.get(config) + "\n";
  return out;
}

ModelConfig model_config(const RunConfig& config, std::size_t classes) {
  ModelConfig m;
  m.encoder = staged_profile(stage_width(config), config.model.blocks);
  m.encoder.gamma = config.model.gamma;
  for (auto& st : m.encoder.stages) st.temporal_kernel = config.model.temporal_kernel;
  m.fusion = config.fusion;
  m.fusion.gamma = config.model.gamma;
  m.head = config.head;
  m.head.classes = config.head.classes != 0 ? config.head.classes : classes;
  if (m.head.classes == 0) throw ConfigError("head.classes could not be resolved");
  m.modality = config.model.modality;
  return m;
}

}  // namespace gait
