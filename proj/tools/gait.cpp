// gait: preprocess, synth, train, eval, ablate and golden subcommands.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <iostream>
#include <spdlog/spdlog.h>

#include "gait/cli/ablate.hpp"
#include "gait/cli/train.hpp"
#include "gait/data/synth.hpp"
#include "oracles/golden.hpp"

using namespace gait;

namespace {

int run_preprocess(const std::string& in, const std::string& out, const RunConfig& defaults) {
  const auto scan = scan_dataset(in);
  std::size_t frames = 0, dropped = 0;
  for (const auto& entry : scan.index.entries) {
    const auto names = sequence_frame_names(scan.index.root, entry);
    const auto raw = load_raw_sequence(scan.index.root, entry);
    std::vector<FramePair> kept;
    std::vector<std::string> kept_names;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (foreground_count(raw[i].silhouette) == 0) continue;
      kept.push_back(raw[i]);
      kept_names.push_back(names[i]);
    }
    dropped += raw.size() - kept.size();
    if (kept.empty()) {
      spdlog::warn("preprocess: {} has no foreground, skipped", entry.relpath);
      continue;
    }
    const auto result = preprocess_sequence(kept, defaults.data.preprocess);
    write_aligned_sequence(out, entry, kept_names, result.frames);
    frames += result.frames.size();
  }
  const auto aligned = scan_dataset(out);
  write_manifest(aligned.index, std::filesystem::path(out) / "manifest.tsv");
  std::cout << "preprocessed " << aligned.index.entries.size() << " sequences, " << frames << " frames, dropped "
            << dropped << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& protocol_file, const std::string& data,
             const std::string& out_dir) {
  auto loaded = load_model(checkpoint);
  std::ifstream in(protocol_file, std::ios::binary);
  if (!in) throw ConfigError("cannot read protocol " + protocol_file);
  std::ostringstream text;
  text << in.rdbuf();
  const EvalProtocol protocol = parse_protocol(text.str(), protocol_file);
  if (!data.empty()) loaded.config.data.root = data;
  const SequenceStore store = load_dataset(loaded.config);
  const auto report =
      evaluate_model(*loaded.model, loaded.params, store, protocol, loaded.config.train.threads);
  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(checkpoint).parent_path() : std::filesystem::path(out_dir);
  write_report(dir.empty() ? "." : dir, report);
  std::cout << render_text(report);
  return 0;
}

int run_golden(bool regen) {
  const auto outcomes = golden::run(GAIT_GOLDEN_DIR, regen);
  bool ok = true;
  for (const auto& o : outcomes) {
    std::cout << (o.ok ? "ok   " : "FAIL ") << o.file << ": " << o.detail << "\n";
    ok = ok && o.ok;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DepthGait: depth + silhouette gait recognition"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string pre_in, pre_out, pre_config;
  auto* pre = app.add_subcommand("preprocess", "Mask, normalize and align a raw sil/depth tree");
  pre->add_option("--in", pre_in, "Raw dataset root")->required();
  pre->add_option("--out", pre_out, "Aligned output root")->required();
  pre->add_option("--config", pre_config, "Run config supplying data.* settings");

  SynthOptions synth_opts;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic raw dataset");
  synth->add_option("--ids", synth_opts.ids, "Subjects")->required();
  synth->add_option("--out", synth_out, "Output root")->required();
  synth->add_option("--seed", synth_opts.seed, "Seed")->required();
  synth->add_option("--sequences", synth_opts.sequences_per_id, "Sequences per subject");
  synth->add_option("--frames", synth_opts.frames, "Frames per sequence");

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train_config, "Run config")->required();

  std::string eval_ckpt, eval_protocol, eval_data, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--protocol", eval_protocol, "Protocol file")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset root (default: the checkpoint's data.root)");
  eval_cmd->add_option("--out", eval_out, "Report directory (default: next to the checkpoint)");

  std::string ablate_config;
  std::vector<std::string> ablate_axes;
  std::vector<std::uint64_t> ablate_seeds;
  std::size_t ablate_parallel = 1;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run ablation grids and write paper-shaped tables");
  ablate_cmd->add_option("--config", ablate_config, "Base run config")->required();
  ablate_cmd->add_option("--axes", ablate_axes, "fusion_method, channels, stages, modality")->required()->delimiter(',');
  ablate_cmd->add_option("--seeds", ablate_seeds, "Seeds averaged per cell (default: train.seed)")->delimiter(',');
  ablate_cmd->add_option("--parallel", ablate_parallel, "Concurrent runs")->check(CLI::PositiveNumber);

  bool regen = false;
  auto* golden_cmd = app.add_subcommand("golden", "Check (or rewrite) golden files with the oracles");
  golden_cmd->add_flag("--regen", regen, "Rewrite tests/golden from the oracles");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*pre) {
      const RunConfig cfg = pre_config.empty() ? parse_run_config("", "defaults", process_env_overrides())
                                               : load_run_config(pre_config, process_env_overrides());
      return run_preprocess(pre_in, pre_out, cfg);
    }
    if (*synth) {
      const auto summary = synth_generate(synth_out, synth_opts);
      std::cout << "wrote " << summary.sequences << " sequences, " << summary.frame_pairs << " frame pairs\n";
      return 0;
    }
    if (*train_cmd) {
      const RunConfig cfg = load_run_config(train_config, process_env_overrides());
      const auto outcome = train(cfg, load_dataset(cfg));
      std::cout << "trained " << outcome.steps << " steps, checkpoint " << outcome.checkpoint.string() << "\n";
      return 0;
    }
    if (*eval_cmd) return run_eval(eval_ckpt, eval_protocol, eval_data, eval_out);
    if (*ablate_cmd) {
      AblateOptions opts;
      for (const auto& a : ablate_axes) opts.axes.push_back(parse_axis(a));
      opts.seeds = ablate_seeds;
      opts.parallel = ablate_parallel;
      const auto result = ablate(load_run_config(ablate_config, process_env_overrides()), opts);
      std::cout << result.text;
      return 0;
    }
    if (*golden_cmd) return run_golden(regen);
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
