#include "gait/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gait/data/dataset.hpp"
#include "gait/io/png.hpp"
#include "gait/numerics/init.hpp"

namespace fs = std::filesystem;

namespace gait {
namespace {

struct Point {
  double x, y;
};

// Limb as a segment from `anchor` swung by `angle` from straight down.
struct Limb {
  Point anchor;
  double angle;
  double length;
  double half_width;
  double depth_offset;

  bool contains(double x, double y) const {
    const double dx = std::sin(angle), dy = std::cos(angle);
    const double vx = x - anchor.x, vy = y - anchor.y;
    const double along = vx * dx + vy * dy;
    const double across = std::abs(vx * dy - vy * dx);
    return along >= 0 && along <= length && across <= half_width;
  }
};

double ellipse_r2(double x, double y, Point c, double rx, double ry) {
  const double u = (x - c.x) / rx, v = (y - c.y) / ry;
  return u * u + v * v;
}

}  // namespace

Walker random_walker(std::uint64_t seed, std::size_t id) {
  Rng rng(seed * 1000003ULL + id);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Walker w{};
  w.height = u(70, 88);
  w.torso_width = u(0.12, 0.24);
  w.torso_length = u(0.26, 0.34);
  w.head_radius = u(0.06, 0.09);
  w.leg_length = u(0.40, 0.50);
  w.arm_length = u(0.26, 0.38);
  w.limb_width = u(0.03, 0.06);
  w.stride = u(0.20, 0.55);
  w.period = u(10, 18);
  w.phase = u(0, 2 * std::numbers::pi);
  w.depth_offset = u(2.0, 4.0);
  w.depth_ramp = u(-0.5, 0.5);
  w.depth_bulge = u(0.1, 0.6);
  return w;
}

std::string synth_condition(std::size_t j) {
  static const char* kConditions[] = {"nm", "cl", "up", "dn", "bg"};
  return kConditions[j % 5];
}

std::string synth_view(std::size_t j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", (j % 2 == 0 ? 0 : 180) + 10 * (j / 5));
  return buf;
}

FramePair render_walker(const Walker& w, const std::string& condition, bool mirrored, double t,
                        std::size_t canvas_height, std::size_t canvas_width) {
  const double H = w.height;
  const double cx = canvas_width / 2.0;
  const double top = (canvas_height - H) / 2.0;
  const double swing = w.stride * std::sin(2 * std::numbers::pi * t / w.period + w.phase);
  const double bob = 1.5 * std::abs(std::sin(2 * std::numbers::pi * t / w.period + w.phase));

  const bool upper = condition == "cl" || condition == "up";
  const bool lower = condition == "cl" || condition == "dn";
  const double torso_scale = upper ? 1.15 : 1.0;
  const double head_r = w.head_radius * H;
  const Point head{cx, top + bob + head_r};
  const double torso_ry = w.torso_length * H / 2;
  const double torso_rx = w.torso_width * H / 2 * torso_scale;
  const Point torso{cx, head.y + head_r + torso_ry};
  const Point hip{cx, torso.y + torso_ry * 0.8};
  const Point shoulder{cx, torso.y - torso_ry * 0.7};
  const double limb_hw = w.limb_width * H / 2;
  const double arm_lift = upper ? 0.35 : 0.0;
  const double leg_hw = lower ? limb_hw * 1.4 : limb_hw;

  const Limb limbs[] = {
      {hip, swing, w.leg_length * H, leg_hw, 0.0},
      {hip, -swing, w.leg_length * H, leg_hw, 0.25},
      {shoulder, -0.6 * swing - arm_lift, w.arm_length * H, limb_hw * 0.8, 0.0},
      {shoulder, 0.6 * swing + arm_lift, w.arm_length * H, limb_hw * 0.8, 0.25},
  };
  // Bag carried on the back, behind the torso.
  const double bag_x0 = cx - torso_rx - 0.08 * H, bag_x1 = cx - torso_rx * 0.6;
  const double bag_y0 = torso.y - torso_ry * 0.5, bag_y1 = torso.y + torso_ry * 0.4;

  FramePair out{SilhouetteFrame(canvas_height, canvas_width, 0), DepthFrame(canvas_height, canvas_width, 0.0f)};
  for (std::size_t y = 0; y < canvas_height; ++y) {
    for (std::size_t xi = 0; xi < canvas_width; ++xi) {
      const double x = xi + 0.5, yy = y + 0.5;
      double depth = -1;
      const double ramp = w.depth_offset + w.depth_ramp * (x - cx) / canvas_width;
      const double tr2 = ellipse_r2(x, yy, torso, torso_rx, torso_ry);
      if (tr2 <= 1.0) {
        depth = ramp - w.depth_bulge * (1.0 - tr2);
      } else if (ellipse_r2(x, yy, head, head_r, head_r) <= 1.0) {
        depth = ramp - 0.5 * w.depth_bulge;
      } else if (condition == "bg" && x >= bag_x0 && x <= bag_x1 && yy >= bag_y0 && yy <= bag_y1) {
        depth = ramp + 0.15;
      } else {
        for (const auto& limb : limbs) {
          if (limb.contains(x, yy)) {
            depth = depth < 0 ? ramp + limb.depth_offset : std::min(depth, ramp + limb.depth_offset);
          }
        }
      }
      if (depth <= 0) continue;
      const std::size_t col = mirrored ? canvas_width - 1 - xi : xi;
      out.silhouette.at(y, col) = kForeground;
      out.depth.at(y, col) = static_cast<float>(depth);
    }
  }
  return out;
}

SynthSummary synth_generate(const fs::path& out, const SynthOptions& options) {
  if (options.ids == 0 || options.sequences_per_id == 0 || options.frames == 0) {
    throw ConfigError("synth: ids, sequences and frames must be positive");
  }
  std::vector<Walker> walkers;
  for (std::size_t id = 0; id < options.ids; ++id) walkers.push_back(random_walker(options.seed, id));

  Rng rng(options.seed);
  std::vector<double> starts(options.sequences_per_id * options.ids);
  for (auto& s : starts) s = std::uniform_real_distribution<double>(0, 20)(rng);

  // frames[id][j][f] kept only as silhouettes for the separability check
  std::vector<std::vector<std::vector<SilhouetteFrame>>> silhouettes(options.ids);
  SynthSummary summary;
  for (std::size_t id = 0; id < options.ids; ++id) {
    char sid[32];
    std::snprintf(sid, sizeof sid, "%03zu", id);
    silhouettes[id].resize(options.sequences_per_id);
    for (std::size_t j = 0; j < options.sequences_per_id; ++j) {
      const std::string rel = std::string(sid) + "/" + synth_condition(j) + "/" + synth_view(j);
      const fs::path sil_dir = out / kSilhouetteDir / rel, depth_dir = out / kDepthDir / rel;
      fs::create_directories(sil_dir);
      fs::create_directories(depth_dir);
      const bool mirrored = j % 2 == 1;
      for (std::size_t f = 0; f < options.frames; ++f) {
        const double t = starts[id * options.sequences_per_id + j] + static_cast<double>(f);
        FramePair frame = render_walker(walkers[id], synth_condition(j), mirrored, t, options.canvas_height,
                                        options.canvas_width);
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.png", f);
        io::write_png8(sil_dir / name, frame.silhouette.height, frame.silhouette.width, frame.silhouette.pixels);
        std::vector<std::uint16_t> d(frame.depth.pixels.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
          d[i] = static_cast<std::uint16_t>(std::lround(std::clamp(frame.depth.pixels[i] * 1000.0f, 0.0f, 65535.0f)));
        }
        io::write_png16(depth_dir / name, frame.depth.height, frame.depth.width, d);
        silhouettes[id][j].push_back(std::move(frame.silhouette));
        ++summary.frame_pairs;
      }
      ++summary.sequences;
    }
  }

  for (std::size_t a = 0; a < options.ids; ++a) {
    for (std::size_t b = a + 1; b < options.ids; ++b) {
      std::size_t differing = 0, total = 0;
      for (std::size_t j = 0; j < options.sequences_per_id; ++j) {
        for (std::size_t f = 0; f < options.frames; ++f, ++total) {
          differing += silhouettes[a][j][f] != silhouettes[b][j][f] ? 1 : 0;
        }
      }
      if (10 * differing < 9 * total) {
        throw DataError("synth: subjects " + std::to_string(a) + " and " + std::to_string(b) + " are not separable");
      }
    }
  }
  return summary;
}

}  // namespace gait
