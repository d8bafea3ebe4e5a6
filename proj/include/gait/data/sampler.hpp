#pragma once

// P x K batch sampling of fixed-length clips.

#include <cstdint>
#include <string>
#include <vector>

#include "gait/data/dataset.hpp"

namespace gait {

enum class ShortClipPolicy { Wrap, Discard };

struct SamplerConfig {
  std::size_t subjects = 4;   // P
  std::size_t sequences = 4;  // K per subject
  std::size_t clip_length = 10;
  ShortClipPolicy short_clip = ShortClipPolicy::Wrap;
};

struct ClipRef {
  std::size_t entry = 0;             // index into DatasetIndex::entries
  std::vector<std::size_t> frames;   // clip_length frame indices
  std::size_t label = 0;             // position of the subject in DatasetIndex::subjects()
};

struct BatchPlan {
  std::vector<ClipRef> clips;  // subject-major: P groups of K
};

/// Draws P distinct subjects and K sequences each (with replacement only when
/// a subject has fewer than K usable sequences), then a uniformly placed
/// contiguous window per sequence. Throws ConfigError on an invalid config
/// and DataError when fewer than P subjects are usable.
BatchPlan sample_batch(const DatasetIndex& index, const SamplerConfig& config, std::uint64_t seed);

/// Seed for step `step` of a run seeded with `run_seed`.
std::uint64_t step_seed(std::uint64_t run_seed, std::uint64_t step);

struct Batch {
  Tensor<float> silhouette;  // (P*K, 1, L, H, W)
  Tensor<float> depth;
  std::vector<std::size_t> labels;
};

Batch materialize(const SequenceStore& store, const BatchPlan& plan);

}  // namespace gait
