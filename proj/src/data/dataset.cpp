#include "gait/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <spdlog/spdlog.h>
#include <sstream>

#include "gait/io/png.hpp"

namespace fs = std::filesystem;

namespace gait {
namespace {

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> png_names(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

}  // namespace

std::vector<std::string> DatasetIndex::subjects() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.subject);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> sequence_frame_names(const fs::path& root, const SequenceEntry& entry) {
  const auto sil = png_names(root / kSilhouetteDir / entry.relpath);
  const auto depth = png_names(root / kDepthDir / entry.relpath);
  std::vector<std::string> both;
  std::set_intersection(sil.begin(), sil.end(), depth.begin(), depth.end(), std::back_inserter(both));
  return both;
}

ScanResult scan_dataset(const fs::path& root) {
  ScanResult result;
  result.index.root = root;
  const fs::path sil_root = root / kSilhouetteDir;
  for (const auto& subject : sorted_subdirs(sil_root)) {
    for (const auto& condition : sorted_subdirs(sil_root / subject)) {
      for (const auto& view : sorted_subdirs(sil_root / subject / condition)) {
        SequenceEntry entry{subject, condition, view, subject + "/" + condition + "/" + view, 0};
        if (!fs::is_directory(root / kDepthDir / entry.relpath)) {
          result.warnings.push_back("missing depth for " + entry.relpath);
          continue;
        }
        entry.frames = sequence_frame_names(root, entry).size();
        if (entry.frames == 0) {
          result.warnings.push_back("no paired frames in " + entry.relpath);
          continue;
        }
        result.index.entries.push_back(std::move(entry));
      }
    }
  }
  for (const auto& w : result.warnings) spdlog::warn("scan: {}", w);
  if (result.index.entries.empty()) throw DataError("no sequences found under " + root.string());
  return result;
}

std::string to_manifest(const DatasetIndex& index) {
  std::string out;
  for (const auto& e : index.entries) {
    out += e.subject + '\t' + e.condition + '\t' + e.view + '\t' + e.relpath + '\t' + std::to_string(e.frames) + '\n';
  }
  return out;
}

DatasetIndex parse_manifest(const std::string& text, const fs::path& root) {
  DatasetIndex index;
  index.root = root;
  std::set<std::string> keys;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 5) throw DataError("manifest line " + std::to_string(line_no) + ": expected 5 fields");
    SequenceEntry e{f[0], f[1], f[2], f[3], 0};
    try {
      e.frames = std::stoul(f[4]);
    } catch (const std::exception&) {
      throw DataError("manifest line " + std::to_string(line_no) + ": bad frame count");
    }
    if (e.frames == 0) throw DataError("manifest line " + std::to_string(line_no) + ": frame count must be >= 1");
    if (!keys.insert(e.subject + '\t' + e.condition + '\t' + e.view).second) {
      throw DataError("manifest line " + std::to_string(line_no) + ": duplicate sequence key");
    }
    index.entries.push_back(std::move(e));
  }
  return index;
}

void write_manifest(const DatasetIndex& index, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << to_manifest(index);
}

std::vector<FramePair> load_raw_sequence(const fs::path& root, const SequenceEntry& entry) {
  std::vector<FramePair> frames;
  for (const auto& name : sequence_frame_names(root, entry)) {
    const auto sil = io::read_png(root / kSilhouetteDir / entry.relpath / name);
    const auto depth = io::read_png(root / kDepthDir / entry.relpath / name);
    FramePair pair;
    pair.silhouette = SilhouetteFrame(sil.height, sil.width, 0);
    const std::uint16_t threshold = sil.bit_depth == 16 ? 32768 : 128;
    for (std::size_t i = 0; i < sil.samples.size(); ++i) {
      pair.silhouette.pixels[i] = sil.samples[i] >= threshold ? kForeground : 0;
    }
    pair.depth = DepthFrame(depth.height, depth.width, 0.0f);
    for (std::size_t i = 0; i < depth.samples.size(); ++i) pair.depth.pixels[i] = static_cast<float>(depth.samples[i]);
    frames.push_back(std::move(pair));
  }
  return frames;
}

void write_aligned_sequence(const fs::path& out, const SequenceEntry& entry, const std::vector<std::string>& frame_names,
                            const std::vector<AlignedPair>& frames) {
  if (frame_names.size() != frames.size()) throw DataError("write_aligned_sequence: name/frame count mismatch");
  const fs::path sil_dir = out / kSilhouetteDir / entry.relpath;
  const fs::path depth_dir = out / kDepthDir / entry.relpath;
  fs::create_directories(sil_dir);
  fs::create_directories(depth_dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    io::write_png8(sil_dir / frame_names[i], f.silhouette.height, f.silhouette.width, f.silhouette.pixels);
    std::vector<std::uint16_t> d(f.depth.pixels.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
      d[j] = static_cast<std::uint16_t>(std::lround(std::clamp(f.depth.pixels[j], 0.0f, 1.0f) * 65535.0f));
    }
    io::write_png16(depth_dir / frame_names[i], f.depth.height, f.depth.width, d);
  }
}

namespace {

LoadedSequence from_aligned(const std::vector<AlignedPair>& frames) {
  LoadedSequence seq;
  seq.frames = frames.size();
  seq.height = frames.front().silhouette.height;
  seq.width = frames.front().silhouette.width;
  const std::size_t hw = seq.height * seq.width;
  seq.silhouette.resize(seq.frames * hw);
  seq.depth.resize(seq.frames * hw);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].silhouette.height != seq.height || frames[f].silhouette.width != seq.width) {
      throw DataError("sequence frames differ in size");
    }
    for (std::size_t i = 0; i < hw; ++i) {
      seq.silhouette[f * hw + i] = frames[f].silhouette.pixels[i] != 0 ? 1.0f : 0.0f;
      seq.depth[f * hw + i] = frames[f].depth.pixels[i];
    }
  }
  return seq;
}

LoadedSequence load_aligned(const fs::path& root, const SequenceEntry& entry) {
  std::vector<AlignedPair> frames;
  for (const auto& name : sequence_frame_names(root, entry)) {
    const auto sil = io::read_png(root / kSilhouetteDir / entry.relpath / name);
    const auto depth = io::read_png(root / kDepthDir / entry.relpath / name);
    if (sil.height != depth.height || sil.width != depth.width) {
      throw DataError("modality size mismatch in " + entry.relpath + "/" + name);
    }
    AlignedPair pair;
    pair.silhouette = SilhouetteFrame(sil.height, sil.width, 0);
    pair.depth = DepthFrame(sil.height, sil.width, 0.0f);
    const double sil_max = sil.bit_depth == 16 ? 65535.0 : 255.0;
    const double depth_max = depth.bit_depth == 16 ? 65535.0 : 255.0;
    for (std::size_t i = 0; i < sil.samples.size(); ++i) {
      pair.silhouette.pixels[i] = sil.samples[i] >= sil_max / 2 ? kForeground : 0;
      pair.depth.pixels[i] = static_cast<float>(depth.samples[i] / depth_max);
    }
    frames.push_back(std::move(pair));
  }
  if (frames.empty()) throw DataError("no frames in " + entry.relpath);
  return from_aligned(frames);
}

}  // namespace

SequenceStore SequenceStore::load(const DatasetIndex& index, bool aligned, const PreprocessOptions& options) {
  SequenceStore store;
  store.index_ = index;
  store.sequences_.reserve(index.entries.size());
  for (auto& entry : store.index_.entries) {
    if (aligned) {
      store.sequences_.push_back(load_aligned(index.root, entry));
    } else {
      const auto raw = load_raw_sequence(index.root, entry);
      store.sequences_.push_back(from_aligned(preprocess_sequence(raw, options).frames));
    }
    entry.frames = store.sequences_.back().frames;
  }
  return store;
}

std::pair<Tensor<float>, Tensor<float>> sequence_tensors(const LoadedSequence& seq) {
  const Shape shape{1, 1, seq.frames, seq.height, seq.width};
  return {Tensor<float>(shape, seq.silhouette), Tensor<float>(shape, seq.depth)};
}

}  // namespace gait
