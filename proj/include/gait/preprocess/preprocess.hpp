#pragma once

// Silhouette/depth frame preparation: masking, disparity normalization and
// the crop/scale/center alignment that produces fixed-size network inputs.

#include <span>
#include <utility>
#include <vector>

#include "gait/preprocess/image.hpp"

namespace gait {

enum class NormalizationScope { Frame, Sequence };

struct AlignOptions {
  std::size_t height = 64;       // output rows after aspect-preserving scaling
  std::size_t crop_width = 64;   // window centered on the silhouette axis
  std::size_t final_width = 44;  // symmetric trim of the window
};

struct PreprocessOptions {
  AlignOptions align;
  NormalizationScope scope = NormalizationScope::Frame;
};

struct AlignedPair {
  SilhouetteFrame silhouette;  // height x final_width, {0, 255}
  DepthFrame depth;            // same geometry, values in [0, 1]
  std::size_t center_axis = 0; // column of the scaled silhouette used as center
};

/// Zeroes depth wherever the silhouette is background.
DepthFrame mask_depth(const DepthFrame& depth, const SilhouetteFrame& silhouette);

/// Foreground disparity range (q = 1 / max(d, 1e-6)) over pixels where `mask`
/// is nonzero. Throws EmptyForeground if the mask is empty.
std::pair<double, double> disparity_range(const DepthFrame& depth, const SilhouetteFrame& mask);

/// Min-max normalized disparity over the mask foreground; background is 0.
/// A degenerate range (constant depth, single pixel) maps the whole
/// foreground to 0.
DepthFrame normalize_disparity(const DepthFrame& depth, const SilhouetteFrame& mask);

/// Same mapping with an externally supplied (q_min, q_max).
DepthFrame normalize_disparity(const DepthFrame& depth, const SilhouetteFrame& mask,
                               std::pair<double, double> range);

/// Smallest column whose left-to-right cumulative white-pixel count strictly
/// exceeds half of the total. Throws EmptyForeground on an empty frame.
std::size_t vertical_center_axis(const SilhouetteFrame& silhouette);

/// Extent crop, aspect-preserving scale to `height` rows, axis-centered
/// window of `crop_width` with zero padding, then trim to `final_width`.
/// The depth frame follows the silhouette geometry exactly (bilinear,
/// restricted to the scaled silhouette foreground).
AlignedPair crop_align(const SilhouetteFrame& silhouette, const DepthFrame& depth, const AlignOptions& options = {});

struct FramePair {
  SilhouetteFrame silhouette;
  DepthFrame depth;
};

struct SequenceResult {
  std::vector<AlignedPair> frames;
  std::size_t dropped = 0;
};

/// Runs mask -> normalize -> align over every frame. Frames with an empty
/// silhouette are dropped and counted; order is preserved. Throws
/// EmptySequence when nothing survives.
SequenceResult preprocess_sequence(std::span<const FramePair> frames, const PreprocessOptions& options = {});

}  // namespace gait
