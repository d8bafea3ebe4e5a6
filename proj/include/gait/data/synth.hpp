#pragma once

// Synthetic walking sequences in the dataset layout, for tests and desk runs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gait/preprocess/preprocess.hpp"

namespace gait {

struct SynthOptions {
  std::size_t ids = 8;
  std::size_t sequences_per_id = 4;
  std::size_t frames = 30;
  std::uint64_t seed = 0;
  std::size_t canvas_height = 100;
  std::size_t canvas_width = 80;
};

/// Per-subject body and gait parameters.
struct Walker {
  double height;        // figure height in pixels
  double torso_width;   // fractions of height from here on
  double torso_length;
  double head_radius;
  double leg_length;
  double arm_length;
  double limb_width;
  double stride;        // peak leg swing, radians
  double period;        // frames per gait cycle
  double phase;
  double depth_offset;  // metres
  double depth_ramp;
  double depth_bulge;
};

Walker random_walker(std::uint64_t seed, std::size_t id);

/// Condition of sequence `j` cycles nm, cl, up, dn, bg: normal, full clothing
/// change, upper garment, lower garment, carried bag. The view alternates
/// 000 / 180 (mirrored), offset by 10 every five sequences.
std::string synth_condition(std::size_t j);
std::string synth_view(std::size_t j);

/// One rendered frame at time `t` (in frames).
FramePair render_walker(const Walker& w, const std::string& condition, bool mirrored, double t,
                        std::size_t canvas_height, std::size_t canvas_width);

struct SynthSummary {
  std::size_t sequences = 0;
  std::size_t frame_pairs = 0;
};

/// Writes `<out>/sil` (8-bit 0/255) and `<out>/depth` (16-bit, depth x 1000)
/// trees with subject ids "000", "001", ... Throws DataError when two subjects
/// render identically in more than 10% of frames.
SynthSummary synth_generate(const std::filesystem::path& out, const SynthOptions& options);

}  // namespace gait
