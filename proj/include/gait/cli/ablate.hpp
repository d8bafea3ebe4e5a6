#pragma once

// Ablation grids. Each axis expands into run settings; identical settings
// requested by several axes train once. Every run trains from the shared base
// config and seed(s), then evaluates with identical-view cases both excluded
// and included.

#include <string>
#include <vector>

#include "gait/cli/train.hpp"

namespace gait {

enum class AblateAxis { FusionMethod, Channels, Stages, Modality };

AblateAxis parse_axis(const std::string& text);
std::string to_string(AblateAxis axis);

struct AblateOptions {
  std::vector<AblateAxis> axes;
  std::vector<std::uint64_t> seeds;          // empty: the base train.seed
  std::size_t parallel = 1;
  std::vector<std::size_t> channels{32, 64};  // base_channels values of the channel axis
};

struct AblateRow {
  std::string method;
  std::string setting;
  std::vector<double> values;  // one per column, averaged over seeds
};

struct AblateTable {
  AblateAxis axis;
  std::string title;
  std::vector<std::string> columns;
  std::vector<AblateRow> rows;
};

struct AblateResult {
  std::vector<AblateTable> tables;
  std::size_t runs = 0;  // distinct trainings, counting seeds
  std::string text;
  std::string jsonl;
};

/// Runs under `<train.out>/ablate/<run>` and writes ablation.txt and
/// ablation.jsonl next to them.
AblateResult ablate(const RunConfig& base, const AblateOptions& options);

}  // namespace gait
