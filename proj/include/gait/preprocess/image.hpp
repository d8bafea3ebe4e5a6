#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gait/errors.hpp"

namespace gait {

/// Row-major single-channel image.
template <typename T>
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), pixels(h * w, fill) {}

  T& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  const T& at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  bool same_size(const auto& other) const { return height == other.height && width == other.width; }

  bool operator==(const Image&) const = default;
};

/// Binary silhouette, pixels in {0, 255}.
using SilhouetteFrame = Image<std::uint8_t>;

/// Depth (raw, non-negative) or normalized disparity in [0, 1].
using DepthFrame = Image<float>;

inline constexpr std::uint8_t kForeground = 255;

inline std::size_t foreground_count(const SilhouetteFrame& s) {
  std::size_t n = 0;
  for (auto p : s.pixels) n += p != 0 ? 1 : 0;
  return n;
}

}  // namespace gait
