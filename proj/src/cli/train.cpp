#include "gait/cli/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <spdlog/spdlog.h>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace gait {
namespace {

// Activations are freed and reallocated every step; keep large blocks in the
// heap instead of returning them to the kernel each time.
void keep_heap_blocks() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

std::string log_line(std::size_t step, const LossTerms<float>& terms, double lr) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu %.6f %.6f %.6f %.6g\n", step, static_cast<double>(terms.total.value()[0]),
                static_cast<double>(terms.triplet.value()[0]), static_cast<double>(terms.ce.value()[0]), lr);
  return buf;
}

bool finite_grads(const ParamStore<float>& params) {
  for (const auto& [name, p] : params.entries())
    if (p.trainable && !all_finite(p.grad)) return false;
  return true;
}

}  // namespace

double learning_rate(const OptimSettings& optim, std::size_t step) {
  double lr = optim.lr;
  for (auto m : optim.milestones)
    if (m < step) lr *= 0.1;
  return lr;
}

void Sgd::step(ParamStore<float>& params, double lr) {
  const float mu = static_cast<float>(settings_.momentum), wd = static_cast<float>(settings_.weight_decay);
  const float rate = static_cast<float>(lr);
  for (auto& [name, p] : params.entries()) {
    if (!p.trainable) continue;
    auto& v = velocity_[name];
    if (v.empty()) v.assign(p.value.size(), 0.0f);
    float* w = p.value.data();
    const float* g = p.grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = mu * v[i] + (g[i] + wd * w[i]);
      w[i] -= rate * v[i];
    }
  }
}

SequenceStore load_dataset(const RunConfig& config) {
  if (config.data.root.empty()) throw ConfigError("data.root is not set");
  const auto scan = scan_dataset(config.data.root);
  return SequenceStore::load(scan.index, config.data.aligned, config.data.preprocess);
}

EvalReport evaluate_model(const DepthGait<float>& model, const ParamStore<float>& params, const SequenceStore& store,
                          const EvalProtocol& protocol, std::size_t threads) {
  const auto gallery_ids = select_entries(store.index(), protocol.gallery, "gallery");
  const auto probe_ids = select_entries(store.index(), protocol.probe, "probe");
  const auto gallery = embed_sequences(model, params, store, gallery_ids, threads);
  const auto probes = embed_sequences(model, params, store, probe_ids, threads);
  return evaluate(probes, gallery, protocol);
}

TrainOutcome train(const RunConfig& config, const SequenceStore& store) {
  keep_heap_blocks();
  const std::filesystem::path out = config.train.out;
  std::filesystem::create_directories(out);

  RunConfig resolved = config;
  resolved.head.classes = model_config(config, store.index().subjects().size()).head.classes;
  const DepthGait<float> model(model_config(resolved, 0));
  TrainOutcome outcome;
  outcome.frozen_config = freeze(resolved);
  outcome.checkpoint = out / "model.ckpt";
  std::ofstream(out / "config.txt", std::ios::binary) << outcome.frozen_config;

  ParamStore<float> params;
  model.init(params, resolved.train.seed);
  Sgd sgd(resolved.optim);

  std::ofstream log(out / "train.log", std::ios::binary);
  log << "step loss l_tri l_ce lr\n";
  std::ofstream eval_log;
  if (resolved.train.eval_every > 0) {
    eval_log.open(out / "eval.log", std::ios::binary);
    eval_log << "step mean_rank1\n";
  }

  for (std::size_t step = 1; step <= resolved.train.steps; ++step) {
    const double lr = learning_rate(resolved.optim, step);
    const Batch batch = materialize(store, sample_batch(store.index(), resolved.sampler, step_seed(resolved.train.seed, step)));
    params.zero_grad();
    Graph<float> g;
    Context<float> ctx{g, params, NormMode::Train};
    const auto fwd = model.forward(ctx, g.constant(batch.silhouette), g.constant(batch.depth));
    const auto terms = combined_loss(fwd.head.embedding, fwd.head.logits, batch.labels, resolved.loss);
    if (!std::isfinite(terms.total.value()[0])) {
      log.flush();
      throw NonFiniteError("non-finite loss at step " + std::to_string(step) + "; last checkpoint kept");
    }
    g.backward(terms.total);
    if (!finite_grads(params)) {
      log.flush();
      throw NonFiniteError("non-finite gradient at step " + std::to_string(step) + "; last checkpoint kept");
    }
    sgd.step(params, lr);
    log << log_line(step, terms, lr);
    outcome.steps = step;
    if (step % 50 == 0 || step == 1) {
      spdlog::info("step {} loss {:.4f} tri {:.4f} ce {:.4f} lr {:g}", step, terms.total.value()[0],
                   terms.triplet.value()[0], terms.ce.value()[0], lr);
    }
    if (step % resolved.train.checkpoint_every == 0) save_checkpoint(outcome.checkpoint, outcome.frozen_config, params);

    if (resolved.train.eval_every > 0 && step % resolved.train.eval_every == 0) {
      const auto report = evaluate_model(model, params, store, resolved.eval, resolved.train.threads);
      outcome.rank1 = report.mean(0);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu %.4f\n", step, *outcome.rank1);
      eval_log << buf << std::flush;
      spdlog::info("step {} mean rank-{} {:.2f}", step, resolved.eval.ranks[0], *outcome.rank1);
      if (resolved.train.stop_rank1 > 0 && *outcome.rank1 >= resolved.train.stop_rank1) {
        outcome.stopped_early = true;
        break;
      }
    }
  }
  save_checkpoint(outcome.checkpoint, outcome.frozen_config, params);
  return outcome;
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  LoadedModel out;
  out.config = parse_run_config(ckpt.config_text, checkpoint.string() + ":config");
  out.model = std::make_unique<DepthGait<float>>(model_config(out.config, 0));
  ParamStore<float> expected;
  out.model->init(expected, 0);
  for (const auto& [name, p] : expected.entries()) {
    if (!ckpt.params.contains(name)) throw DataError("checkpoint lacks parameter " + name);
    if (ckpt.params.get(name).value.shape() != p.value.shape()) {
      throw DataError("checkpoint parameter " + name + " has shape " + to_string(ckpt.params.get(name).value.shape()) +
                      ", model expects " + to_string(p.value.shape()));
    }
  }
  if (ckpt.params.size() != expected.size()) throw DataError("checkpoint holds parameters the model does not use");
  out.params = std::move(ckpt.params);
  return out;
}

}  // namespace gait
