#include "gait/preprocess/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <spdlog/spdlog.h>

namespace gait {
namespace {

constexpr double kMinDepth = 1e-6;

void require_same_size(const SilhouetteFrame& s, const DepthFrame& d, const char* op) {
  if (!s.same_size(d)) {
    throw ShapeError(std::string(op) + ": silhouette " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                     " vs depth " + std::to_string(d.height) + "x" + std::to_string(d.width));
  }
}

// Source coordinate of output sample `i` when resampling `in` samples onto
// `out` samples with pixel-center alignment.
double source_coord(std::size_t i, std::size_t in, std::size_t out) {
  return (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
}

std::size_t nearest_index(double s, std::size_t in) {
  const double r = std::floor(s + 0.5);
  if (r < 0) return 0;
  return std::min(static_cast<std::size_t>(r), in - 1);
}

struct LinearTap {
  std::size_t i0, i1;
  double frac;
};

LinearTap linear_tap(double s, std::size_t in) {
  const double clamped = std::clamp(s, 0.0, static_cast<double>(in - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(clamped));
  return {i0, std::min(i0 + 1, in - 1), clamped - static_cast<double>(i0)};
}

}  // namespace

DepthFrame mask_depth(const DepthFrame& depth, const SilhouetteFrame& silhouette) {
  require_same_size(silhouette, depth, "mask_depth");
  DepthFrame out = depth;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (silhouette.pixels[i] == 0) out.pixels[i] = 0.0f;
  }
  return out;
}

std::pair<double, double> disparity_range(const DepthFrame& depth, const SilhouetteFrame& mask) {
  require_same_size(mask, depth, "normalize_disparity");
  double qmin = std::numeric_limits<double>::infinity();
  double qmax = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < depth.pixels.size(); ++i) {
    if (mask.pixels[i] == 0) continue;
    const double q = 1.0 / std::max(static_cast<double>(depth.pixels[i]), kMinDepth);
    qmin = std::min(qmin, q);
    qmax = std::max(qmax, q);
    any = true;
  }
  if (!any) throw EmptyForeground();
  return {qmin, qmax};
}

DepthFrame normalize_disparity(const DepthFrame& depth, const SilhouetteFrame& mask) {
  return normalize_disparity(depth, mask, disparity_range(depth, mask));
}

DepthFrame normalize_disparity(const DepthFrame& depth, const SilhouetteFrame& mask,
                               std::pair<double, double> range) {
  require_same_size(mask, depth, "normalize_disparity");
  const auto [qmin, qmax] = range;
  DepthFrame out(depth.height, depth.width, 0.0f);
  const double span = qmax - qmin;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < depth.pixels.size(); ++i) {
    if (mask.pixels[i] == 0) continue;
    const double q = 1.0 / std::max(static_cast<double>(depth.pixels[i]), kMinDepth);
    out.pixels[i] = static_cast<float>(std::clamp((q - qmin) / span, 0.0, 1.0));
  }
  return out;
}

std::size_t vertical_center_axis(const SilhouetteFrame& silhouette) {
  std::vector<std::size_t> column_counts(silhouette.width, 0);
  std::size_t total = 0;
  for (std::size_t y = 0; y < silhouette.height; ++y) {
    for (std::size_t x = 0; x < silhouette.width; ++x) {
      if (silhouette.at(y, x) != 0) {
        ++column_counts[x];
        ++total;
      }
    }
  }
  if (total == 0) throw EmptyForeground();
  // cumulative > total / 2, kept in integers: 2 * cumulative > total
  std::size_t cumulative = 0;
  for (std::size_t x = 0; x < silhouette.width; ++x) {
    cumulative += column_counts[x];
    if (2 * cumulative > total) return x;
  }
  return silhouette.width - 1;  // unreachable: the full sum exceeds half
}

AlignedPair crop_align(const SilhouetteFrame& silhouette, const DepthFrame& depth, const AlignOptions& options) {
  require_same_size(silhouette, depth, "crop_align");
  if (options.final_width > options.crop_width || (options.crop_width - options.final_width) % 2 != 0) {
    throw ConfigError("crop_align: final_width must not exceed crop_width and differ by an even amount");
  }

  // 1. Row extent of the figure.
  std::size_t top = silhouette.height, bottom = 0;
  for (std::size_t y = 0; y < silhouette.height; ++y) {
    for (std::size_t x = 0; x < silhouette.width; ++x) {
      if (silhouette.at(y, x) != 0) {
        top = std::min(top, y);
        bottom = std::max(bottom, y);
      }
    }
  }
  if (top == silhouette.height) throw EmptyForeground();
  const std::size_t src_h = bottom - top + 1;
  const std::size_t src_w = silhouette.width;

  // 2. Aspect-preserving scale to the target height.
  const std::size_t out_h = options.height;
  const std::size_t scaled_w = std::max<std::size_t>(1, (2 * src_w * out_h + src_h) / (2 * src_h));
  SilhouetteFrame sil_scaled(out_h, scaled_w, 0);
  DepthFrame depth_scaled(out_h, scaled_w, 0.0f);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = source_coord(y, src_h, out_h);
    const std::size_t ny = top + nearest_index(sy, src_h);
    const LinearTap ty = linear_tap(sy, src_h);
    for (std::size_t x = 0; x < scaled_w; ++x) {
      const double sx = source_coord(x, src_w, scaled_w);
      const std::size_t nx = nearest_index(sx, src_w);
      // Nearest sample of a binary image is binary; threshold at half scale.
      const bool fg = silhouette.at(ny, nx) >= 128;
      if (!fg) continue;
      sil_scaled.at(y, x) = kForeground;
      const LinearTap tx = linear_tap(sx, src_w);
      const double v00 = depth.at(top + ty.i0, tx.i0), v01 = depth.at(top + ty.i0, tx.i1);
      const double v10 = depth.at(top + ty.i1, tx.i0), v11 = depth.at(top + ty.i1, tx.i1);
      const double top_row = v00 + (v01 - v00) * tx.frac;
      const double bottom_row = v10 + (v11 - v10) * tx.frac;
      depth_scaled.at(y, x) = static_cast<float>(top_row + (bottom_row - top_row) * ty.frac);
    }
  }

  // 3. Window of crop_width columns centered on the silhouette axis, then
  // 4. symmetric trim to final_width.
  AlignedPair out;
  out.center_axis = vertical_center_axis(sil_scaled);
  const long window_start = static_cast<long>(out.center_axis) - static_cast<long>(options.crop_width / 2);
  const long trim = static_cast<long>((options.crop_width - options.final_width) / 2);
  out.silhouette = SilhouetteFrame(out_h, options.final_width, 0);
  out.depth = DepthFrame(out_h, options.final_width, 0.0f);
  for (std::size_t x = 0; x < options.final_width; ++x) {
    const long src = window_start + trim + static_cast<long>(x);
    if (src < 0 || src >= static_cast<long>(scaled_w)) continue;
    for (std::size_t y = 0; y < out_h; ++y) {
      out.silhouette.at(y, x) = sil_scaled.at(y, static_cast<std::size_t>(src));
      out.depth.at(y, x) = depth_scaled.at(y, static_cast<std::size_t>(src));
    }
  }
  return out;
}

SequenceResult preprocess_sequence(std::span<const FramePair> frames, const PreprocessOptions& options) {
  SequenceResult result;
  std::vector<bool> keep(frames.size(), false);
  std::pair<double, double> sequence_range{std::numeric_limits<double>::infinity(),
                                           -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    keep[i] = foreground_count(frames[i].silhouette) > 0;
    if (keep[i] && options.scope == NormalizationScope::Sequence) {
      const auto r = disparity_range(frames[i].depth, frames[i].silhouette);
      sequence_range.first = std::min(sequence_range.first, r.first);
      sequence_range.second = std::max(sequence_range.second, r.second);
    }
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!keep[i]) {
      ++result.dropped;
      continue;
    }
    const auto& f = frames[i];
    const DepthFrame masked = mask_depth(f.depth, f.silhouette);
    const DepthFrame normalized = options.scope == NormalizationScope::Sequence
                                      ? normalize_disparity(masked, f.silhouette, sequence_range)
                                      : normalize_disparity(masked, f.silhouette);
    result.frames.push_back(crop_align(f.silhouette, normalized, options.align));
  }
  if (result.dropped > 0) spdlog::warn("preprocess: dropped {} empty-foreground frame(s)", result.dropped);
  if (result.frames.empty()) throw EmptySequence("preprocess: every frame of the sequence was empty");
  return result;
}

}  // namespace gait
