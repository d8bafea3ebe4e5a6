#pragma once

// Gallery / probe identification: sequence embeddings, rank-k accuracy with
// optional identical-view exclusion, and per-condition reports.

#include <filesystem>
#include <string>
#include <vector>

#include "gait/data/dataset.hpp"
#include "gait/model/model.hpp"

namespace gait {

/// Matches sequences by condition and view. An empty list matches anything.
struct Selector {
  std::vector<std::string> conditions;
  std::vector<std::string> views;

  bool matches(const SequenceEntry& entry) const;
};

struct EvalProtocol {
  Selector gallery;
  Selector probe;
  bool exclude_identical_view = true;
  std::vector<std::string> conditions;  // report columns; matched to probe conditions ignoring case
  std::vector<std::size_t> ranks{1, 5};
};

/// Protocol file keys: gallery.conditions, gallery.views, probe.conditions,
/// probe.views, exclude_identical_view, conditions, ranks.
EvalProtocol parse_protocol(const std::string& text, const std::string& origin = "protocol");

/// Entry indices of `index` selected by `selector`. Throws DataError when
/// nothing matches.
std::vector<std::size_t> select_entries(const DatasetIndex& index, const Selector& selector, const std::string& what);

/// One sequence embedding f, stored (E, P) row-major.
struct Embedding {
  std::string subject;
  std::string condition;
  std::string view;
  std::size_t embedding = 0;
  std::size_t parts = 0;
  std::vector<float> f;
};

/// Mean over parts of the per-part Euclidean distance.
double embedding_distance(const Embedding& a, const Embedding& b);

/// Embeds whole sequences in eval mode, spread over `threads` workers.
std::vector<Embedding> embed_sequences(const DepthGait<float>& model, const ParamStore<float>& params,
                                       const SequenceStore& store, const std::vector<std::size_t>& entries,
                                       std::size_t threads = 1);

struct ProbeResult {
  std::size_t probe = 0;
  bool skipped = false;      // no admissible gallery entry
  std::size_t hit_rank = 0;  // 1-based position of the first same-subject entry, 0 when none
};

/// Ranks every probe against the gallery by ascending distance; equal
/// distances keep gallery order. With exclusion on, gallery entries whose
/// view equals the probe's are removed first.
std::vector<ProbeResult> rank_probes(const std::vector<Embedding>& probes, const std::vector<Embedding>& gallery,
                                     bool exclude_identical_view);

struct EvalReport {
  std::vector<std::size_t> ranks;
  std::vector<std::string> conditions;
  std::vector<std::vector<double>> accuracy;      // [rank][condition], percent
  std::vector<std::vector<std::size_t>> counted;  // [rank][condition] probes in the denominator
  std::vector<std::string> views;                 // probe views, sorted
  std::vector<std::vector<double>> view_rank1;    // [condition][view], percent; negative when no probe
  std::size_t probes = 0;
  std::size_t skipped = 0;
  bool exclude_identical_view = true;

  /// Unweighted mean of the accuracy at `ranks[r]` over conditions that
  /// have at least one counted probe.
  double mean(std::size_t r) const;
};

/// Aggregates probe results per condition (hits / non-skipped probes).
/// Conditions without probes report 0 with a zero count.
EvalReport build_report(const std::vector<Embedding>& probes, const std::vector<ProbeResult>& results,
                        const EvalProtocol& protocol);

/// Convenience: rank_probes + build_report.
EvalReport evaluate(const std::vector<Embedding>& probes, const std::vector<Embedding>& gallery,
                    const EvalProtocol& protocol);

/// Human table: one row per rank with the condition columns and Mean, then
/// the per-view rank-1 matrix.
std::string render_text(const EvalReport& report);

/// One JSON object per line: a row per rank, then a row per condition of the
/// view matrix.
std::string render_jsonl(const EvalReport& report);

void write_report(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace gait
