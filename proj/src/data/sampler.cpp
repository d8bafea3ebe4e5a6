#include "gait/data/sampler.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "gait/errors.hpp"
#include "gait/numerics/init.hpp"

namespace gait {

std::uint64_t step_seed(std::uint64_t run_seed, std::uint64_t step) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (step + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

BatchPlan sample_batch(const DatasetIndex& index, const SamplerConfig& config, std::uint64_t seed) {
  if (config.subjects < 2 || config.sequences < 2 || config.clip_length < 1) {
    throw ConfigError("sampler: need P >= 2, K >= 2 and L >= 1");
  }
  const auto subjects = index.subjects();
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    const auto& e = index.entries[i];
    if (config.short_clip == ShortClipPolicy::Discard && e.frames < config.clip_length) continue;
    by_subject[e.subject].push_back(i);
  }
  std::vector<std::size_t> usable;  // positions into `subjects`
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (by_subject.count(subjects[s]) != 0) usable.push_back(s);
  }
  if (usable.size() < config.subjects) {
    throw DataError("sampler: " + std::to_string(usable.size()) + " usable subjects, need " +
                    std::to_string(config.subjects));
  }

  Rng rng(seed);
  std::shuffle(usable.begin(), usable.end(), rng);
  BatchPlan plan;
  for (std::size_t p = 0; p < config.subjects; ++p) {
    const std::size_t label = usable[p];
    std::vector<std::size_t> pool = by_subject.at(subjects[label]);
    std::vector<std::size_t> chosen;
    if (pool.size() >= config.sequences) {
      std::shuffle(pool.begin(), pool.end(), rng);
      chosen.assign(pool.begin(), pool.begin() + static_cast<long>(config.sequences));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t k = 0; k < config.sequences; ++k) chosen.push_back(pool[pick(rng)]);
    }
    for (std::size_t entry : chosen) {
      const std::size_t n = index.entries[entry].frames;
      const std::size_t max_start = n > config.clip_length ? n - config.clip_length : 0;
      std::uniform_int_distribution<std::size_t> start_dist(0, max_start);
      const std::size_t start = start_dist(rng);
      ClipRef clip{entry, {}, label};
      for (std::size_t t = 0; t < config.clip_length; ++t) clip.frames.push_back((start + t) % n);
      plan.clips.push_back(std::move(clip));
    }
  }
  return plan;
}

Batch materialize(const SequenceStore& store, const BatchPlan& plan) {
  if (plan.clips.empty()) throw DataError("materialize: empty batch");
  const auto& first = store.sequence(plan.clips.front().entry);
  const std::size_t h = first.height, w = first.width, hw = h * w;
  const std::size_t L = plan.clips.front().frames.size();
  Batch batch;
  batch.silhouette = Tensor<float>({plan.clips.size(), 1, L, h, w});
  batch.depth = Tensor<float>({plan.clips.size(), 1, L, h, w});
  for (std::size_t n = 0; n < plan.clips.size(); ++n) {
    const auto& clip = plan.clips[n];
    const auto& seq = store.sequence(clip.entry);
    if (seq.height != h || seq.width != w || clip.frames.size() != L) throw DataError("materialize: ragged batch");
    for (std::size_t t = 0; t < L; ++t) {
      const std::size_t src = clip.frames[t] * hw, dst = (n * L + t) * hw;
      std::copy_n(seq.silhouette.begin() + static_cast<long>(src), hw, batch.silhouette.data() + dst);
      std::copy_n(seq.depth.begin() + static_cast<long>(src), hw, batch.depth.data() + dst);
    }
    batch.labels.push_back(clip.label);
  }
  return batch;
}

}  // namespace gait
