// End-to-end acceptance: one PASS/FAIL line per criterion, exit status 1 if
// any fails.
//
//   acceptance [--only NAME] [--keep DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <spdlog/spdlog.h>
#include <sstream>

#include "gait/cli/ablate.hpp"
#include "gait/cli/train.hpp"
#include "gait/numerics/init.hpp"
#include "oracles/golden.hpp"
#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"
#include "support/runs.hpp"

using namespace gait;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    if (ok) detail = what;
    ok = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict gradient_integrity() {
  const auto t0 = Clock::now();
  Verdict v;
  Rng rng(101);
  const Shape pair{1, 4, 2, 8, 4};
  double worst = 0;
  auto record = [&](const GradCheckReport& r, const std::string& what) {
    worst = std::max(worst, r.max_rel_error);
    v.require(r.passed(1e-4), what + " max rel " + fmt("%.3g", r.max_rel_error) + " " + r.message);
  };

  for (std::size_t stage : {1, 2}) {
    FusionConfig cfg;
    ParamStore<double> params;
    auto block = std::make_shared<FusionBlock<double>>("mcf", 4, cfg);
    block->init(params, rng);
    record(grad_check(testing::fusion_block_loss(block, params, stage, uniform_tensor<double>(pair, rng, -1, 1)),
                      {uniform_tensor<double>(pair, rng, -1, 1), uniform_tensor<double>(pair, rng, -1, 1)}, &params),
           "MCF block stage " + std::to_string(stage));
  }

  {
    ParamStore<double> params;
    FusionBlock<double> block("mcf", 4, FusionConfig{});
    block.init(params, rng);
    const auto readout = uniform_tensor<double>({1, 8, 2, 8, 4}, rng, -1, 1);
    const LossBuilder loss = [&](Graph<double>& g, const std::vector<Var<double>>& in) {
      Context<double> ctx{g, params, NormMode::Train};
      const auto [local, global] = block.msse_scores(ctx, in[0]);
      return sum(mul(add(local, global), g.constant(readout)));
    };
    record(grad_check(loss, {uniform_tensor<double>({1, 8, 2, 8, 4}, rng, -1, 1)}, &params), "score branches");
  }

  const Shape ws{1, 2, 4, 2, 8, 4};
  const LossBuilder fuse = [](Graph<double>&, const std::vector<Var<double>>& in) {
    return sum_squares(weighted_fuse(in[0], in[1], in[2]));
  };
  record(grad_check(fuse, {uniform_tensor<double>(pair, rng, -1, 1), uniform_tensor<double>(pair, rng, -1, 1),
                           uniform_tensor<double>(ws, rng, 0, 1)},
                    nullptr),
         "weighted fusion");
  const LossBuilder cross = [](Graph<double>&, const std::vector<Var<double>>& in) {
    return sum_squares(cross_level(in[0], in[1], in[2], 2, FsdRule::Mean));
  };
  record(grad_check(cross, {uniform_tensor<double>(pair, rng, -1, 1), uniform_tensor<double>(pair, rng, -1, 1),
                            uniform_tensor<double>(pair, rng, -1, 1)},
                    nullptr),
         "cross-level sum");

  const std::vector<std::size_t> labels{0, 0, 1, 1, 2, 2};
  const LossBuilder combined = [&](Graph<double>&, const std::vector<Var<double>>& in) {
    return combined_loss(in[0], in[1], labels, LossWeights{}).total;
  };
  record(grad_check(combined, {uniform_tensor<double>({6, 4, 2}, rng, -1, 1), uniform_tensor<double>({6, 3, 2}, rng, -2, 2)},
                    nullptr),
         "combined loss");

  const double elapsed = seconds_since(t0);
  v.require(elapsed < 60.0, "took " + fmt("%.1f s", elapsed));
  if (v.ok) v.detail = "max rel error " + fmt("%.2e", worst) + " in " + fmt("%.1f s", elapsed);
  return v;
}

Verdict fusion_algebra() {
  Verdict v;
  Graph<double> g(false);
  Rng rng(102);
  double worst_sum = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double range = trial % 2 ? 1e4 : 5;
    const auto w = m_atf(g.constant(uniform_tensor<double>({1, 6, 2, 3, 2}, rng, -range, range)),
                         g.constant(uniform_tensor<double>({1, 6, 2, 3, 2}, rng, -range, range)))
                       .value();
    const std::size_t half = w.size() / 2;
    for (std::size_t i = 0; i < half; ++i) worst_sum = std::max(worst_sum, std::abs(w[i] + w[half + i] - 1.0));
  }
  v.require(worst_sum < 1e-6, "modality sums off by " + fmt("%.3g", worst_sum));

  const Shape s{2, 3, 2, 4, 3};
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = uniform_tensor<double>(s, rng, -5, 5);
    const auto w = m_atf(g.constant(uniform_tensor<double>({2, 6, 2, 4, 3}, rng, -20, 20)),
                         g.constant(uniform_tensor<double>({2, 6, 2, 4, 3}, rng, -20, 20)))
                       .value();
    v.require(weighted_fuse(g.constant(f), g.constant(f), g.constant(w)).value() == f, "weighted_fuse(F, F, W) != F");
  }

  double worst_shift = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto l = uniform_tensor<double>({1, 8, 2, 3, 3}, rng, -30, 30);
    const auto gl = uniform_tensor<double>({1, 8, 2, 3, 3}, rng, -30, 30);
    Tensor<double> shifted = l;
    const double c = uniform_tensor<double>({1}, rng, -100, 100)[0];
    for (auto& x : shifted.values()) x += c;
    const auto a = m_atf(g.constant(l), g.constant(gl)).value();
    const auto b = m_atf(g.constant(shifted), g.constant(gl)).value();
    for (std::size_t i = 0; i < a.size(); ++i) worst_shift = std::max(worst_shift, std::abs(a[i] - b[i]));
  }
  v.require(worst_shift < 1e-6, "m_atf shift changes weights by " + fmt("%.3g", worst_shift));

  const auto f = uniform_tensor<double>({1, 4, 2, 8, 4}, rng, -1, 1);
  v.require(plus_fusion(g.constant(f), g.constant(Tensor<double>(f.shape()))).value() == f, "plus_fusion(F, 0) != F");
  v.require(plus_fusion(g.constant(Tensor<double>(f.shape())), g.constant(f)).value() == f, "plus_fusion(0, F) != F");
  if (v.ok) v.detail = "sum error " + fmt("%.2e", worst_sum) + ", shift error " + fmt("%.2e", worst_shift);
  return v;
}

Verdict preprocess_oracle() {
  Verdict v;
  const auto frames = golden::preprocess_inputs();
  const auto& a = golden::kGoldenAlign;
  double worst_depth = 0, worst_disp = 0;
  std::size_t sil_mismatch = 0, axis_mismatch = 0;
  for (const auto& f : frames) {
    const auto norm = normalize_disparity(mask_depth(f.depth, f.silhouette), f.silhouette);
    const auto ref_norm = oracle::disparity(f.depth, f.silhouette);
    for (std::size_t i = 0; i < norm.pixels.size(); ++i) {
      worst_disp = std::max(worst_disp, static_cast<double>(std::abs(norm.pixels[i] - ref_norm.pixels[i])));
    }
    const auto out = crop_align(f.silhouette, norm, a);
    const auto ref = oracle::crop(f.silhouette, ref_norm, a.height, a.crop_width, a.final_width);
    axis_mismatch += out.center_axis != ref.axis;
    for (std::size_t i = 0; i < ref.silhouette.pixels.size(); ++i) {
      sil_mismatch += out.silhouette.pixels[i] != ref.silhouette.pixels[i];
      worst_depth = std::max(worst_depth, static_cast<double>(std::abs(out.depth.pixels[i] - ref.depth.pixels[i])));
    }
  }
  v.require(frames.size() == 50, "expected 50 frames");
  v.require(sil_mismatch == 0, std::to_string(sil_mismatch) + " silhouette bytes differ");
  v.require(axis_mismatch == 0, std::to_string(axis_mismatch) + " center axes differ");
  v.require(worst_disp < 1e-6, "disparity error " + fmt("%.3g", worst_disp));
  v.require(worst_depth < 1e-6, "aligned depth error " + fmt("%.3g", worst_depth));

  auto columns = [](std::size_t h, std::size_t w, std::size_t x0, std::size_t x1) {
    SilhouetteFrame s(h, w, 0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = x0; x <= x1; ++x) s.at(y, x) = kForeground;
    return s;
  };
  v.require(vertical_center_axis(columns(8, 40, 10, 10)) == 10, "single column axis");
  // Columns 0..31 hold exactly half the pixels; the strict inequality moves on to 32.
  v.require(vertical_center_axis(columns(16, 64, 0, 63)) == 32, "tie case axis");
  SilhouetteFrame two(5, 64, 0);
  two.at(2, 0) = kForeground;
  two.at(4, 63) = kForeground;
  v.require(vertical_center_axis(two) == 63, "two-pixel tie axis");
  v.require(vertical_center_axis(columns(4, 9, 3, 5)) == 4, "three-column axis");

  for (const auto& o : golden::run(GAIT_GOLDEN_DIR, false)) {
    if (o.file.rfind("preprocess", 0) == 0 || o.file == "disparity.txt") v.require(o.ok, o.file + ": " + o.detail);
  }
  if (v.ok) v.detail = "50 frames, depth error " + fmt("%.2e", worst_depth);
  return v;
}

Verdict rank_oracle() {
  Verdict v;
  const auto instances = golden::rank_instances();
  std::size_t mismatched = 0, excluded = 0;
  for (const auto& inst : instances) {
    EvalProtocol p;
    p.ranks = golden::kGoldenRanks;
    p.conditions = golden::kGoldenConditions;
    p.exclude_identical_view = inst.exclude_identical_view;
    excluded += inst.exclude_identical_view;
    const auto rep = evaluate(inst.probes, inst.gallery, p);
    const auto ref = oracle::rank_accuracy(inst.probes, inst.gallery, inst.exclude_identical_view, p.ranks, p.conditions);
    for (std::size_t c = 0; c < p.conditions.size(); ++c) {
      for (std::size_t r = 0; r < p.ranks.size(); ++r) mismatched += rep.accuracy[r][c] != ref[r][c];
      mismatched += static_cast<double>(rep.counted[0][c]) != ref[p.ranks.size()][c];
    }
  }
  v.require(instances.size() == 200, "expected 200 instances");
  v.require(mismatched == 0, std::to_string(mismatched) + " cells differ from the exhaustive reference");
  for (const auto& o : golden::run(GAIT_GOLDEN_DIR, false)) {
    if (o.file == "rank_k.txt") v.require(o.ok, o.file + ": " + o.detail);
  }

  // Self-gallery: every probe is in the gallery.
  std::vector<Embedding> self;
  Rng rng(103);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto t = uniform_tensor<float>({8}, rng, -1, 1);
    self.push_back(Embedding{"s" + std::to_string(i), "cl", "000", 4, 2, {t.values().begin(), t.values().end()}});
  }
  EvalProtocol p;
  p.conditions = {"CL"};
  p.ranks = {1};
  p.exclude_identical_view = false;
  const auto rep = evaluate(self, self, p);
  v.require(rep.accuracy[0][0] == 100.0, "self-gallery rank-1 " + fmt("%.4f", rep.accuracy[0][0]));
  if (v.ok) v.detail = "200 instances (" + std::to_string(excluded) + " with exclusion), self-gallery 100%";
  return v;
}

// The desk learning check runs on 8 ids x 4 sequences x 30 frames.
struct LearningData {
  fs::path root;
  fs::path raw;
};

Verdict learning_check(const LearningData& data) {
  Verdict v;
  testing::write_synth(data.raw, 8, 4, 30, 0);

  RunConfig cfg = profile_defaults("desk");
  cfg.data.root = data.raw.string();
  cfg.train.out = (data.root / "mcf").string();
  cfg.train.eval_every = 50;
  cfg.train.stop_rank1 = 100.0;
  cfg.train.checkpoint_every = cfg.train.steps;
  validate(cfg);

  const auto t0 = Clock::now();
  const auto store = load_dataset(cfg);
  const TrainOutcome out = train(cfg, store);
  const double elapsed = seconds_since(t0);
  const double rank1 = out.rank1.value_or(0.0);
  v.require(rank1 >= 100.0, "MCF rank-1 " + fmt("%.2f", rank1) + " after " + std::to_string(out.steps) + " steps");
  v.require(out.steps <= 2000, "needed more than 2000 steps");
  v.require(elapsed < 900.0, "MCF run took " + fmt("%.0f s", elapsed));
  std::string detail = "(a) rank-1 " + fmt("%.1f", rank1) + " at step " + std::to_string(out.steps) + " in " +
                       fmt("%.0f s", elapsed);

  // (b) Same step budget for every variant, three seeds.
  RunConfig base = cfg;
  base.train.out = (data.root / "modality").string();
  base.train.eval_every = 0;
  base.train.stop_rank1 = 0;
  base.train.steps = std::max<std::size_t>(out.steps, 50);
  base.train.checkpoint_every = base.train.steps;
  AblateOptions opt;
  opt.axes = {AblateAxis::Modality};
  opt.seeds = {0, 1, 2};
  const AblateResult res = ablate(base, opt);
  const auto& rows = res.tables.at(0).rows;
  const std::size_t col = base.eval.exclude_identical_view ? 0 : 1;
  const double baseline = rows.at(0).values[col], msf = rows.at(2).values[col], clf = rows.at(3).values[col];
  const bool ordered = baseline <= msf && msf <= clf;
  const double spread = std::max({baseline, msf, clf}) - std::min({baseline, msf, clf});
  v.require(ordered || spread <= 1.0, "ordering Baseline " + fmt("%.2f", baseline) + ", +MSF " + fmt("%.2f", msf) +
                                          ", +MSF+CLF " + fmt("%.2f", clf));
  detail += "; (b) " + std::to_string(base.train.steps) + " steps x 3 seeds: Baseline " + fmt("%.1f", baseline) +
            " / +MSF " + fmt("%.1f", msf) + " / +MSF+CLF " + fmt("%.1f", clf);
  if (v.ok) v.detail = detail;
  return v;
}

Verdict stage_unification() {
  Verdict v;
  Rng rng(104);
  std::size_t traces = 0, compared = 0;
  for (auto kind : {FusionKind::MCF, FusionKind::Plus, FusionKind::Cat, FusionKind::Attention}) {
    for (std::vector<std::size_t> stages :
         {std::vector<std::size_t>{}, {1}, {2}, {3}, {4}, {1, 2, 3, 4}, {2, 4}}) {
      for (auto mode : {NormMode::Train, NormMode::Eval}) {
        ModelConfig cfg;
        cfg.encoder = staged_profile(4);
        cfg.fusion.kind = kind;
        cfg.fusion.stages = stages;
        cfg.head.classes = 4;
        DepthGait<double> model(cfg);
        ParamStore<double> params;
        model.init(params, 5);
        Graph<double> g(false);
        Context<double> ctx{g, params, mode};
        std::vector<StageTrace<double>> trace;
        model.forward(ctx, g.constant(uniform_tensor<double>({2, 1, 2, 64, 44}, rng, 0, 1)),
                      g.constant(uniform_tensor<double>({2, 1, 2, 64, 44}, rng, 0, 1)), &trace);
        ++traces;
        const std::size_t first = model.fusion_stages().front();
        for (std::size_t i = 0; i < trace.size(); ++i) {
          const auto& st = trace[i];
          const bool after = i + 1 > first;
          if (!after || st.dfe_input.empty()) continue;
          ++compared;
          v.require(st.sfe_input == st.dfe_input, to_string(kind) + ": stage " + std::to_string(i + 1) +
                                                      " branch inputs differ");
        }
        // With every stage fused, each stage >= 2 runs both branches on one input.
        if (model.fusion_stages().size() == 4 && first == 1) {
          for (std::size_t i = 1; i < trace.size(); ++i) {
            v.require(!trace[i].dfe_input.empty(), "depth branch skipped at a fused stage");
          }
        }
      }
    }
  }
  if (v.ok) {
    v.detail = std::to_string(traces) + " traces, " + std::to_string(compared) + " stage inputs bit-identical";
  }
  return v;
}

Verdict determinism(const LearningData& data) {
  Verdict v;
  RunConfig cfg = profile_defaults("desk");
  cfg.data.root = data.raw.string();
  cfg.train.out = (data.root / "determinism").string();
  cfg.train.steps = 4;
  cfg.train.checkpoint_every = 2;
  cfg.train.threads = 1;
  validate(cfg);
  const auto store = load_dataset(cfg);
  const fs::path out = cfg.train.out;
  train(cfg, store);
  const std::string log = testing::slurp(out / "train.log");
  const std::string ckpt = testing::slurp(out / "model.ckpt");
  train(cfg, store);
  v.require(!log.empty() && !ckpt.empty(), "empty run outputs");
  v.require(log == testing::slurp(out / "train.log"), "train.log differs between runs");
  v.require(ckpt == testing::slurp(out / "model.ckpt"), "model.ckpt differs between runs");
  if (v.ok) v.detail = "train.log " + std::to_string(log.size()) + " B, model.ckpt " + std::to_string(ckpt.size()) + " B";
  return v;
}

Verdict ablation_structure(const fs::path& root) {
  Verdict v;
  const fs::path raw = root / "raw";
  testing::write_synth(raw, 4, 5, 8, 1);
  RunConfig base = testing::tiny_run(raw, root / "run", 2);
  base.model.base_channels = 32;
  AblateOptions opt;
  opt.axes = {AblateAxis::Modality, AblateAxis::FusionMethod, AblateAxis::Channels, AblateAxis::Stages};
  const AblateResult res = ablate(base, opt);

  v.require(res.tables.size() == 4, "expected four tables");
  if (!v.ok) return v;
  std::vector<std::string> cond_cols = base.eval.conditions;
  cond_cols.push_back("Mean");
  const std::vector<std::string> methods{"PlusFusion", "CatFusion", "AttentionFusion", "MCF"};

  const auto& modality = res.tables[0];
  v.require(modality.columns == std::vector<std::string>{"Exclude", "Include"}, "modality columns");
  v.require(modality.rows.size() == 4, "modality rows");

  const auto& method = res.tables[1];
  v.require(method.columns == cond_cols, "fusion method columns");
  v.require(method.rows.size() == 5 && method.rows[0].method == "Depth", "fusion method rows");
  for (std::size_t i = 0; v.ok && i < methods.size(); ++i) v.require(method.rows[i + 1].method == methods[i], "method order");

  const auto& channels = res.tables[2];
  v.require(channels.columns == cond_cols, "channel columns");
  v.require(channels.rows.size() == 8, "channel rows");
  for (std::size_t i = 0; v.ok && i < channels.rows.size(); ++i) {
    v.require(channels.rows[i].method == methods[i / 2], "channel row method");
    v.require(channels.rows[i].setting == (i % 2 == 0 ? "c=32" : "c=64"), "channel row setting " + channels.rows[i].setting);
  }

  const auto& stages = res.tables[3];
  v.require(stages.columns == cond_cols, "stage columns");
  v.require(stages.rows.size() == 10, "stage rows");
  const std::vector<std::string> settings{"Stage=2", "Stage=3", "Stage=4"};
  for (std::size_t i = 0; v.ok && i < 9; ++i) {
    v.require(stages.rows[i].method == methods[i / 3], "stage row method");
    v.require(stages.rows[i].setting == settings[i % 3], "stage row setting " + stages.rows[i].setting);
  }
  if (v.ok) v.require(stages.rows[9].method == "MCF" && stages.rows[9].setting == "All Stages", "all-stage MCF row");

  std::size_t cells = 0;
  for (const auto& t : res.tables)
    for (const auto& r : t.rows) {
      v.require(r.values.size() == t.columns.size(), t.title + ": short row");
      for (double x : r.values) {
        v.require(std::isfinite(x) && x >= 0.0 && x <= 100.0, t.title + ": cell out of range");
        ++cells;
      }
    }
  v.require(fs::exists(root / "run" / "ablate" / "ablation.txt"), "ablation.txt missing");
  v.require(fs::exists(root / "run" / "ablate" / "ablation.jsonl"), "ablation.jsonl missing");
  if (v.ok) v.detail = std::to_string(cells) + " cells from " + std::to_string(res.runs) + " runs";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  std::string only;
  fs::path keep;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = argv[i + 1];
    if (flag == "--keep") keep = argv[i + 1];
  }
  const fs::path root = keep.empty() ? fs::temp_directory_path() / "gait_acceptance" : keep;
  fs::remove_all(root);
  fs::create_directories(root);
  const LearningData data{root / "learning", root / "learning" / "raw"};

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient_integrity", gradient_integrity},
      {"fusion_algebra", fusion_algebra},
      {"preprocess_oracle", preprocess_oracle},
      {"rank_k_oracle", rank_oracle},
      {"learning_check", [&] { return learning_check(data); }},
      {"stage_unification", stage_unification},
      {"determinism",
       [&] {
         if (!fs::exists(data.raw)) testing::write_synth(data.raw, 8, 4, 30, 0);
         return determinism(data);
       }},
      {"ablation_harness", [&] { return ablation_structure(root / "ablate"); }},
  };

  bool all = true;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && name != only) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = Verdict{false, std::string("exception: ") + e.what()};
    }
    all = all && v.ok;
    std::printf("%s %s: %s [%.1f s]\n", v.ok ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  if (keep.empty()) fs::remove_all(root);
  return all ? 0 : 1;
}
