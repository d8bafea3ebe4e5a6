#pragma once

// On-disk dataset layout and in-memory access.
//
//   <root>/sil/<subject>/<condition>/<view>/<frame>.png     8-bit silhouettes
//   <root>/depth/<subject>/<condition>/<view>/<frame>.png   8/16-bit depth
//
// A frame belongs to a sequence when both modalities have a file of the same
// name. The index is cached as a tab-separated manifest, one sequence per line:
//   subject<TAB>condition<TAB>view<TAB>relpath<TAB>nframes

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gait/numerics/tensor.hpp"
#include "gait/preprocess/preprocess.hpp"

namespace gait {

inline constexpr const char* kSilhouetteDir = "sil";
inline constexpr const char* kDepthDir = "depth";

struct SequenceEntry {
  std::string subject;
  std::string condition;
  std::string view;
  std::string relpath;  // <subject>/<condition>/<view>
  std::size_t frames = 0;

  bool operator==(const SequenceEntry&) const = default;
};

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<SequenceEntry> entries;  // sorted by (subject, condition, view)

  std::vector<std::string> subjects() const;
};

struct ScanResult {
  DatasetIndex index;
  std::vector<std::string> warnings;
};

/// Enumerates paired sequences under `root`. Sequences missing either
/// modality are skipped with a warning. Throws DataError when nothing is found.
ScanResult scan_dataset(const std::filesystem::path& root);

/// Sorted frame file names shared by both modalities of a sequence.
std::vector<std::string> sequence_frame_names(const std::filesystem::path& root, const SequenceEntry& entry);

std::string to_manifest(const DatasetIndex& index);
DatasetIndex parse_manifest(const std::string& text, const std::filesystem::path& root);
void write_manifest(const DatasetIndex& index, const std::filesystem::path& file);

/// Reads the raw frames of one sequence (silhouettes binarized at 128).
std::vector<FramePair> load_raw_sequence(const std::filesystem::path& root, const SequenceEntry& entry);

/// Writes aligned frames under `out` mirroring the input layout. Depth is
/// stored 16-bit, scaled by 65535.
void write_aligned_sequence(const std::filesystem::path& out, const SequenceEntry& entry,
                            const std::vector<std::string>& frame_names, const std::vector<AlignedPair>& frames);

/// Sequence frames as network inputs: silhouettes in {0, 1}, depth in [0, 1].
struct LoadedSequence {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> silhouette;  // frames * height * width
  std::vector<float> depth;
};

/// Whole-dataset frame cache. Raw trees are preprocessed while loading, in
/// which case dropped frames shrink the per-sequence counts of `index()`.
class SequenceStore {
 public:
  static SequenceStore load(const DatasetIndex& index, bool aligned, const PreprocessOptions& options = {});

  const DatasetIndex& index() const { return index_; }
  const LoadedSequence& sequence(std::size_t entry) const { return sequences_.at(entry); }
  std::size_t size() const { return sequences_.size(); }

 private:
  DatasetIndex index_;
  std::vector<LoadedSequence> sequences_;
};

/// Whole sequence (all frames) as (1, 1, T, H, W) silhouette and depth tensors.
std::pair<Tensor<float>, Tensor<float>> sequence_tensors(const LoadedSequence& seq);

}  // namespace gait
