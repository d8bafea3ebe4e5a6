#include <cmath>

#include "doctest.h"
#include "oracles/golden.hpp"

using namespace gait;

namespace {

const std::filesystem::path kDir = GAIT_GOLDEN_DIR;

}  // namespace

TEST_CASE("committed goldens match the oracles") {
  for (const auto& outcome : golden::run(kDir, false)) {
    INFO(outcome.file, ": ", outcome.detail);
    CHECK(outcome.ok);
  }
}

TEST_CASE("preprocess reproduces the golden crops") {
  const auto sil = golden::read(kDir / "preprocess_silhouette.txt");
  const auto depth = golden::read(kDir / "preprocess_depth.txt");
  const auto frames = golden::preprocess_inputs();
  REQUIRE(frames.size() == 50);
  const std::size_t n = golden::kGoldenAlign.height * golden::kGoldenAlign.final_width;
  REQUIRE(sil.values.size() == 50 * n);
  double worst = 0;
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const auto out = crop_align(f.silhouette, normalize_disparity(mask_depth(f.depth, f.silhouette), f.silhouette),
                                golden::kGoldenAlign);
    for (std::size_t j = 0; j < n; ++j) {
      mismatched += out.silhouette.pixels[j] != static_cast<std::uint8_t>(sil.values[i * n + j]);
      worst = std::max(worst, std::abs(out.depth.pixels[j] - depth.values[i * n + j]));
    }
  }
  CHECK(mismatched == 0);
  CHECK(worst < 1e-6);
}

TEST_CASE("disparity reproduces the golden frames") {
  const auto ref = golden::read(kDir / "disparity.txt");
  const auto frames = golden::disparity_inputs();
  double worst = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto q = normalize_disparity(mask_depth(frames[i].depth, frames[i].silhouette), frames[i].silhouette);
    for (std::size_t j = 0; j < q.pixels.size(); ++j) worst = std::max(worst, std::abs(q.pixels[j] - ref.values[i * 384 + j]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("rank_k reproduces the golden accuracies") {
  const auto ref = golden::read(kDir / "rank_k.txt");
  const auto instances = golden::rank_instances();
  const std::size_t rows = golden::kGoldenRanks.size() + 1, cols = golden::kGoldenConditions.size();
  EvalProtocol p;
  p.ranks = golden::kGoldenRanks;
  p.conditions = golden::kGoldenConditions;
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    p.exclude_identical_view = instances[i].exclude_identical_view;
    const auto rep = evaluate(instances[i].probes, instances[i].gallery, p);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r + 1 < rows; ++r) mismatched += rep.accuracy[r][c] != ref.values[(i * rows + r) * cols + c];
      mismatched += static_cast<double>(rep.counted[0][c]) != ref.values[(i * rows + rows - 1) * cols + c];
    }
  }
  CHECK(mismatched == 0);
}
