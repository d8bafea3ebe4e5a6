#include "gait/cli/ablate.hpp"

#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <spdlog/spdlog.h>
#include <thread>

namespace gait {
namespace {

struct Variant {
  std::string method;
  std::string setting;
  RunConfig config;
};

struct RunScores {
  EvalReport exclude;
  EvalReport include;
};

std::string method_label(FusionKind kind) {
  switch (kind) {
    case FusionKind::Plus:
      return "PlusFusion";
    case FusionKind::Cat:
      return "CatFusion";
    case FusionKind::Attention:
      return "AttentionFusion";
    case FusionKind::MCF:
      return "MCF";
  }
  return "?";
}

RunConfig fused(const RunConfig& base, FusionKind kind, std::vector<std::size_t> stages = {}) {
  RunConfig c = base;
  c.model.modality = Modality::Both;
  c.fusion.kind = kind;
  c.fusion.stages = std::move(stages);
  return c;
}

std::vector<Variant> expand(AblateAxis axis, const RunConfig& base, const AblateOptions& options) {
  const FusionKind methods[] = {FusionKind::Plus, FusionKind::Cat, FusionKind::Attention, FusionKind::MCF};
  std::vector<Variant> out;
  switch (axis) {
    case AblateAxis::Modality: {
      RunConfig sil = base, depth = base;
      sil.model.modality = Modality::Silhouette;
      depth.model.modality = Modality::Depth;
      RunConfig msf = fused(base, FusionKind::MCF);
      msf.fusion.fsd = FsdRule::Zero;
      RunConfig clf = fused(base, FusionKind::MCF);
      if (clf.fusion.fsd == FsdRule::Zero) clf.fusion.fsd = FsdRule::Mean;
      out = {{"Baseline", "silhouette", sil}, {"Depth Map", "depth", depth}, {"+MSF", "both", msf},
             {"+MSF+CLF", "both", clf}};
      break;
    }
    case AblateAxis::FusionMethod: {
      RunConfig depth = base;
      depth.model.modality = Modality::Depth;
      out.push_back({"Depth", "-", depth});
      for (auto k : methods) out.push_back({method_label(k), "depth+silhouette", fused(base, k)});
      break;
    }
    case AblateAxis::Channels:
      for (auto k : methods)
        for (auto c : options.channels) {
          RunConfig cfg = fused(base, k);
          cfg.model.base_channels = c;
          out.push_back({method_label(k), "c=" + std::to_string(c), cfg});
        }
      break;
    case AblateAxis::Stages:
      for (auto k : {FusionKind::Plus, FusionKind::Cat, FusionKind::Attention})
        for (std::size_t s : {2, 3, 4}) out.push_back({method_label(k), "Stage=" + std::to_string(s), fused(base, k, {s})});
      out.push_back({method_label(FusionKind::MCF), "All Stages", fused(base, FusionKind::MCF, {1, 2, 3, 4})});
      break;
  }
  return out;
}

std::string title_of(AblateAxis axis) {
  switch (axis) {
    case AblateAxis::Modality:
      return "key modules (mean rank-1)";
    case AblateAxis::FusionMethod:
      return "fusion method";
    case AblateAxis::Channels:
      return "feature channel number";
    case AblateAxis::Stages:
      return "fusion stage";
  }
  return "?";
}

// Identity of a run: the frozen config without its output directory.
std::string run_key(RunConfig c) {
  c.train.out.clear();
  if (c.fusion.stages.empty()) c.fusion.stages = resolved_stages(c.fusion, 4);
  if (c.model.modality != Modality::Both) {
    c.fusion = FusionConfig{};
    c.fusion.stages = {1};
  }
  return freeze(c);
}

std::string cell(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : std::string(width - s.size(), ' ') + s + " ";
}

std::string render(const std::vector<AblateTable>& tables, const std::vector<std::uint64_t>& seeds) {
  std::string seeds_text;
  for (auto s : seeds) seeds_text += (seeds_text.empty() ? "" : ",") + std::to_string(s);
  std::string out;
  for (const auto& t : tables) {
    out += "== " + t.title + " [" + to_string(t.axis) + "], seeds " + seeds_text + "\n";
    out += cell("Method", 16) + cell("Setting", 16);
    for (const auto& c : t.columns) out += cell(c, 8);
    out += "\n";
    for (const auto& r : t.rows) {
      out += cell(r.method, 16) + cell(r.setting, 16);
      char buf[32];
      for (double v : r.values) {
        std::snprintf(buf, sizeof buf, "%.2f", v);
        out += cell(buf, 8);
      }
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace

AblateAxis parse_axis(const std::string& text) {
  const std::string t = to_lower(trim(text));
  if (t == "fusion_method") return AblateAxis::FusionMethod;
  if (t == "channels") return AblateAxis::Channels;
  if (t == "stages") return AblateAxis::Stages;
  if (t == "modality") return AblateAxis::Modality;
  throw ConfigError("unknown ablation axis '" + text + "' (fusion_method, channels, stages, modality)");
}

std::string to_string(AblateAxis axis) {
  switch (axis) {
    case AblateAxis::FusionMethod:
      return "fusion_method";
    case AblateAxis::Channels:
      return "channels";
    case AblateAxis::Stages:
      return "stages";
    case AblateAxis::Modality:
      return "modality";
  }
  return "?";
}

AblateResult ablate(const RunConfig& base, const AblateOptions& options) {
  if (options.axes.empty()) throw ConfigError("ablate: no axes requested");
  const std::vector<std::uint64_t> seeds = options.seeds.empty() ? std::vector<std::uint64_t>{base.train.seed} : options.seeds;
  const std::filesystem::path root = std::filesystem::path(base.train.out) / "ablate";
  const SequenceStore store = load_dataset(base);

  // Distinct runs, in first-request order.
  std::vector<std::pair<std::string, RunConfig>> runs;
  std::map<std::string, std::size_t> run_index;
  std::vector<std::pair<AblateAxis, std::vector<Variant>>> grids;
  for (auto axis : options.axes) {
    auto variants = expand(axis, base, options);
    for (auto& v : variants) {
      validate(v.config);
      for (auto seed : seeds) {
        RunConfig c = v.config;
        c.train.seed = seed;
        const std::string key = run_key(c);
        if (run_index.contains(key)) continue;
        run_index[key] = runs.size();
        char name[32];
        std::snprintf(name, sizeof name, "run%03zu_s%llu", runs.size(), static_cast<unsigned long long>(seed));
        c.train.out = (root / name).string();
        runs.emplace_back(key, std::move(c));
      }
    }
    grids.emplace_back(axis, std::move(variants));
  }

  std::vector<RunScores> scores(runs.size());
  std::mutex progress;
  std::size_t done = 0;
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < runs.size(); i += step) {
      const RunConfig& c = runs[i].second;
      train(c, store);
      const auto loaded = load_model(std::filesystem::path(c.train.out) / "model.ckpt");
      EvalProtocol p = c.eval;
      p.exclude_identical_view = true;
      scores[i].exclude = evaluate_model(*loaded.model, loaded.params, store, p, 1);
      p.exclude_identical_view = false;
      scores[i].include = evaluate_model(*loaded.model, loaded.params, store, p, 1);
      write_report(c.train.out, c.eval.exclude_identical_view ? scores[i].exclude : scores[i].include);
      std::lock_guard lock(progress);
      ++done;
      spdlog::info("ablate: {}/{} runs finished ({})", done, runs.size(), c.train.out);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.parallel, runs.size()));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }

  AblateResult result;
  result.runs = runs.size();
  for (const auto& [axis, variants] : grids) {
    AblateTable table{axis, title_of(axis), {}, {}};
    if (axis == AblateAxis::Modality) {
      table.columns = {"Exclude", "Include"};
    } else {
      table.columns = base.eval.conditions;
      table.columns.push_back("Mean");
    }
    for (const auto& v : variants) {
      AblateRow row{v.method, v.setting, std::vector<double>(table.columns.size(), 0.0)};
      for (auto seed : seeds) {
        RunConfig c = v.config;
        c.train.seed = seed;
        const RunScores& s = scores[run_index.at(run_key(c))];
        if (axis == AblateAxis::Modality) {
          row.values[0] += s.exclude.mean(0);
          row.values[1] += s.include.mean(0);
        } else {
          const EvalReport& r = base.eval.exclude_identical_view ? s.exclude : s.include;
          for (std::size_t j = 0; j < r.conditions.size(); ++j) row.values[j] += r.accuracy[0][j];
          row.values.back() += r.mean(0);
        }
      }
      for (double& x : row.values) x /= static_cast<double>(seeds.size());
      table.rows.push_back(std::move(row));
    }
    result.tables.push_back(std::move(table));
  }

  result.text = render(result.tables, seeds);
  for (const auto& t : result.tables)
    for (const auto& r : t.rows) {
      nlohmann::ordered_json j;
      j["table"] = to_string(t.axis);
      j["method"] = r.method;
      j["setting"] = r.setting;
      for (std::size_t c = 0; c < t.columns.size(); ++c) j[t.columns[c]] = r.values[c];
      result.jsonl += j.dump() + "\n";
    }
  std::filesystem::create_directories(root);
  std::ofstream(root / "ablation.txt", std::ios::binary) << result.text;
  std::ofstream(root / "ablation.jsonl", std::ios::binary) << result.jsonl;
  return result;
}

}  // namespace gait
