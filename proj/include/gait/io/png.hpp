#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gait::io {

/// Grayscale PNG contents. Color inputs are reduced to luminance, alpha is
/// dropped; `bit_depth` is 8 or 16 and samples hold the raw values.
struct GrayPng {
  std::size_t height = 0;
  std::size_t width = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

GrayPng read_png(const std::filesystem::path& path);

void write_png8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                const std::vector<std::uint8_t>& samples);
void write_png16(const std::filesystem::path& path, std::size_t height, std::size_t width,
                 const std::vector<std::uint16_t>& samples);

}  // namespace gait::io
