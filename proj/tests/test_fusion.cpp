#include <cmath>

#include "doctest.h"
#include "support/fixtures.hpp"

using namespace gait;

namespace {

const Shape kPair{1, 4, 2, 8, 4};

FusionConfig config_of(FusionKind kind) {
  FusionConfig c;
  c.kind = kind;
  return c;
}

void zero_entries(ParamStore<double>& params, const std::string& prefix) {
  for (auto& [name, p] : params.entries())
    if (name.rfind(prefix, 0) == 0 && p.trainable) p.value.fill(0.0);
}

}  // namespace

TEST_CASE("concat_modalities layout") {
  Graph<double> g(false);
  Rng rng(1);
  const auto fs = uniform_tensor<double>({2, 4, 2, 3, 3}, rng, -1, 1);
  const auto fd = uniform_tensor<double>({2, 4, 2, 3, 3}, rng, -1, 1);
  const auto ft = concat_modalities(g.constant(fs), g.constant(fd));
  CHECK(ft.shape() == Shape{2, 8, 2, 3, 3});
  CHECK(slice_channels(ft, 0, 4).value() == fs);
  CHECK(slice_channels(ft, 4, 4).value() == fd);

  const auto same = concat_modalities(g.constant(fs), g.constant(fs));
  const auto swapped = concat_channels(slice_channels(same, 4, 4), slice_channels(same, 0, 4));
  CHECK(swapped.value() == same.value());
  CHECK_THROWS_AS(concat_modalities(g.constant(fs), g.constant(Tensor<double>({2, 4, 2, 3, 2}))), ShapeError);
}

TEST_CASE("msse reduction rule and zero input") {
  CHECK(msse_inner_width(8, 1) == 8);
  CHECK(msse_inner_width(8, 4) == 2);
  CHECK(msse_inner_width(4, 4) == 2);
  CHECK(msse_inner_width(64, 4) == 16);

  ParamStore<double> params;
  Rng rng(2);
  FusionBlock<double> block("f", 4, config_of(FusionKind::MCF));
  block.init(params, rng);
  CHECK(params.get("f.local.reduce.weight").value.shape() == Shape{2, 8, 1, 1, 1});
  CHECK(params.get("f.global.spatial.weight").value.shape() == Shape{2, 2, 1, 5, 5});
  CHECK(params.get("f.local.expand.weight").value.shape() == Shape{8, 2, 1, 1, 1});
  CHECK(params.contains("f.local.expand.bias"));

  Graph<double> g(false);
  Context<double> ctx{g, params, NormMode::Train};
  const auto [local, global] = block.msse_scores(ctx, g.constant(Tensor<double>({1, 8, 2, 8, 4})));
  CHECK(local.shape() == Shape{1, 8, 2, 8, 4});
  CHECK(global.shape() == local.shape());
  for (double v : local.value().values()) CHECK(v == 0.0);
  for (double v : global.value().values()) CHECK(v == 0.0);
}

TEST_CASE("msse score branches pass grad_check") {
  // With batch statistics the plain sum of scores is flat in everything
  // upstream of the second norm, so the literal sum is checked with running
  // statistics and a weighted readout covers train mode.
  Rng rng(3);
  for (auto mode : {NormMode::Eval, NormMode::Train}) {
    ParamStore<double> params;
    FusionBlock<double> block("f", 4, config_of(FusionKind::MCF));
    block.init(params, rng);
    const auto readout = uniform_tensor<double>({1, 8, 2, 8, 4}, rng, -1, 1);
    const LossBuilder loss = [&](Graph<double>& g, const std::vector<Var<double>>& in) {
      Context<double> ctx{g, params, mode};
      const auto [l, gl] = block.msse_scores(ctx, in[0]);
      const Var<double> both = add(l, gl);
      return mode == NormMode::Eval ? sum(both) : sum(mul(both, g.constant(readout)));
    };
    const auto report = grad_check(loss, {uniform_tensor<double>({1, 8, 2, 8, 4}, rng, -1, 1)}, &params);
    INFO("max rel " << report.max_rel_error);
    CHECK(report.passed(1e-4));
    CHECK(report.entries.size() == 21);
    for (const auto& e : report.entries) {
      if (e.name.find(".weight") != std::string::npos) CHECK(e.elements > 0);
    }
  }
}

TEST_CASE("m_atf closed forms and invariances") {
  Graph<double> g(false);
  const Tensor<double> zeros({1, 8, 1, 2, 2});
  const auto even = m_atf(g.constant(zeros), g.constant(zeros));
  for (double v : even.value().values()) CHECK(v == 0.5);

  Tensor<double> half({1, 8, 1, 2, 2});
  for (std::size_t i = 0; i < half.size(); ++i) half[i] = i < half.size() / 2 ? 10.0 : -10.0;
  const auto w = m_atf(g.constant(half), g.constant(zeros));
  CHECK(w.shape() == Shape{1, 2, 4, 1, 2, 2});
  const double expect0 = 1.0 / (1.0 + std::exp(-20.0));
  const double expect1 = std::exp(-20.0) / (1.0 + std::exp(-20.0));
  for (std::size_t i = 0; i < w.value().size(); ++i) {
    if (i < w.value().size() / 2) {
      CHECK(std::abs(w.value()[i] - expect0) < 1e-15);
    } else {
      CHECK(std::abs(w.value()[i] - expect1) < 1e-20);
      CHECK(std::abs(w.value()[i] - 2.06e-9) < 0.01e-9);
    }
  }

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = uniform_tensor<double>({1, 8, 2, 3, 3}, rng, -30, 30);
    const auto gl = uniform_tensor<double>({1, 8, 2, 3, 3}, rng, -30, 30);
    Tensor<double> shifted = l;
    const double c = std::uniform_real_distribution<double>(-100, 100)(rng);
    for (auto& v : shifted.values()) v += c;
    const auto a = m_atf(g.constant(l), g.constant(gl)).value();
    const auto b = m_atf(g.constant(shifted), g.constant(gl)).value();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("fusion weights sum to one over the modality axis") {
  Graph<double> g(false);
  Rng rng(5);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double range = trial % 2 ? 1e4 : 5;
    const auto l = uniform_tensor<double>({1, 6, 2, 3, 2}, rng, -range, range);
    const auto gl = uniform_tensor<double>({1, 6, 2, 3, 2}, rng, -range, range);
    const auto w = m_atf(g.constant(l), g.constant(gl)).value();
    const std::size_t half = w.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      CHECK(w[i] >= 0.0);
      CHECK(w[i] <= 1.0);
      worst = std::max(worst, std::abs(w[i] + w[half + i] - 1.0));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("weighted_fuse algebra") {
  Graph<double> g(false);
  Rng rng(6);
  const Shape s{2, 3, 2, 4, 3};
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = uniform_tensor<double>(s, rng, -5, 5);
    const auto w = m_atf(g.constant(uniform_tensor<double>({2, 6, 2, 4, 3}, rng, -20, 20)), Var<double>()).value();
    CHECK(weighted_fuse(g.constant(f), g.constant(f), g.constant(w)).value() == f);

    const auto fs = uniform_tensor<double>(s, rng, -5, 5);
    const auto fd = uniform_tensor<double>(s, rng, -5, 5);
    const auto x = weighted_fuse(g.constant(fs), g.constant(fd), g.constant(w)).value();
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i] >= std::min(fs[i], fd[i]) - 1e-12);
      CHECK(x[i] <= std::max(fs[i], fd[i]) + 1e-12);
    }
  }
  const auto fs = uniform_tensor<double>(s, rng, -5, 5);
  const auto fd = uniform_tensor<double>(s, rng, -5, 5);
  Tensor<double> vertex({2, 2, 3, 2, 4, 3});
  std::fill(vertex.data(), vertex.data() + 3 * 24, 1.0);
  std::fill(vertex.data() + 6 * 24, vertex.data() + 9 * 24, 1.0);
  CHECK(weighted_fuse(g.constant(fs), g.constant(fd), g.constant(vertex)).value() == fs);

  // per-pixel weights broadcast across channels
  Tensor<double> pix({2, 2, 1, 2, 4, 3}, 0.25);
  for (std::size_t n = 0; n < 2; ++n) std::fill(pix.data() + (n * 2 + 1) * 24, pix.data() + (n * 2 + 2) * 24, 0.75);
  const auto xp = weighted_fuse(g.constant(fs), g.constant(fd), g.constant(pix)).value();
  for (std::size_t i = 0; i < xp.size(); ++i) CHECK(xp[i] == doctest::Approx(0.25 * fs[i] + 0.75 * fd[i]));
}

TEST_CASE("cross_level rules") {
  Graph<double> g(false);
  Rng rng(7);
  const auto x = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  const auto fs = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  const auto fd = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  CHECK(cross_level(x, fs, fd, 1, FsdRule::Mean).value() == x.value());
  CHECK(cross_level(x, fs, fd, 3, FsdRule::Zero).value() == x.value());
  const auto y = cross_level(x, fs, fd, 2, FsdRule::Mean).value();
  const auto ys = cross_level(x, fs, fd, 2, FsdRule::Sum).value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(y[i] == doctest::Approx(x.value()[i] + 0.5 * (fs.value()[i] + fd.value()[i])));
    CHECK(ys[i] == doctest::Approx(x.value()[i] + fs.value()[i] + fd.value()[i]));
  }

  // F_s = F_d = F through the whole block gives 2F at stage 2
  ParamStore<double> params;
  FusionBlock<double> block("f", 4, config_of(FusionKind::MCF));
  block.init(params, rng);
  Context<double> ctx{g, params, NormMode::Train};
  const auto out = block.forward(ctx, fs, fs, 2).value();
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(2 * fs.value()[i]).epsilon(1e-14));
}

TEST_CASE("baseline fusions") {
  Graph<double> g(false);
  Rng rng(8);
  const auto fs = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  const auto fd = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  CHECK(plus_fusion(fs, g.constant(Tensor<double>(kPair))).value() == fs.value());

  ParamStore<double> params;
  FusionBlock<double> cat("cat", 4, config_of(FusionKind::Cat));
  cat.init(params, rng);
  auto& w = params.get("cat.project.weight").value;
  w.fill(0.0);
  for (std::size_t c = 0; c < 4; ++c) {
    w[c * 8 + c] = 1.0;
    w[c * 8 + 4 + c] = 1.0;
  }
  FusionBlock<double> attn("attn", 4, config_of(FusionKind::Attention));
  attn.init(params, rng);
  CHECK_FALSE(params.contains("attn.global.reduce.weight"));
  zero_entries(params, "attn.local.expand");

  Context<double> ctx{g, params, NormMode::Train};
  const auto cat_out = cat.forward(ctx, fs, fd, 2).value();
  const auto plus_out = plus_fusion(fs, fd).value();
  for (std::size_t i = 0; i < cat_out.size(); ++i) CHECK(cat_out[i] == doctest::Approx(plus_out[i]).epsilon(1e-14));

  FusionTrace<double> trace;
  const auto attn_out = attn.forward(ctx, fs, fd, 2, &trace).value();
  CHECK(trace.global.empty());
  for (std::size_t i = 0; i < attn_out.size(); ++i) {
    CHECK(attn_out[i] == doctest::Approx(0.5 * fs.value()[i] + 0.5 * fd.value()[i]).epsilon(1e-14));
  }
}

TEST_CASE("fusion trace shapes and per-pixel granularity") {
  Graph<double> g(false);
  Rng rng(9);
  const auto fs = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  const auto fd = g.constant(uniform_tensor<double>(kPair, rng, -1, 1));
  for (auto granularity : {WeightGranularity::PerChannel, WeightGranularity::PerPixel}) {
    FusionConfig cfg = config_of(FusionKind::MCF);
    cfg.granularity = granularity;
    ParamStore<double> params;
    FusionBlock<double> block("f", 4, cfg);
    block.init(params, rng);
    Context<double> ctx{g, params, NormMode::Train};
    FusionTrace<double> t;
    block.forward(ctx, fs, fd, 2, &t);
    const std::size_t wc = granularity == WeightGranularity::PerChannel ? 4 : 1;
    CHECK(t.concat.shape() == Shape{1, 8, 2, 8, 4});
    CHECK(t.local.shape() == Shape{1, 2 * wc, 2, 8, 4});
    CHECK(t.global.shape() == t.local.shape());
    CHECK(t.weights.shape() == Shape{1, 2, wc, 2, 8, 4});
    CHECK(t.fused.shape() == kPair);
    CHECK(t.output.shape() == kPair);
  }
}

TEST_CASE("fusion blocks pass grad_check on a 1x4x2x8x4 pair") {
  struct Case {
    FusionKind kind;
    WeightGranularity granularity;
    std::size_t stage;
    GammaOrder gamma;
  };
  const Case cases[] = {
      {FusionKind::MCF, WeightGranularity::PerChannel, 2, GammaOrder::Paper},
      {FusionKind::MCF, WeightGranularity::PerChannel, 1, GammaOrder::Paper},
      {FusionKind::MCF, WeightGranularity::PerPixel, 3, GammaOrder::Paper},
      {FusionKind::MCF, WeightGranularity::PerChannel, 2, GammaOrder::Conventional},
      {FusionKind::Attention, WeightGranularity::PerChannel, 2, GammaOrder::Paper},
      {FusionKind::Cat, WeightGranularity::PerChannel, 2, GammaOrder::Paper},
  };
  Rng rng(10);
  for (const auto& c : cases) {
    FusionConfig cfg = config_of(c.kind);
    cfg.granularity = c.granularity;
    cfg.gamma = c.gamma;
    ParamStore<double> params;
    auto block = std::make_shared<FusionBlock<double>>("f", 4, cfg);
    block->init(params, rng);
    const auto report = grad_check(testing::fusion_block_loss(block, params, c.stage, uniform_tensor<double>(kPair, rng, -1, 1)),
                                   {uniform_tensor<double>(kPair, rng, -1, 1), uniform_tensor<double>(kPair, rng, -1, 1)},
                                   &params);
    INFO("kind " << to_string(c.kind) << " stage " << c.stage << " max rel " << report.max_rel_error);
    CHECK(report.passed(1e-4));
  }
}

TEST_CASE("weighted_fuse and cross_level pass grad_check") {
  Rng rng(11);
  const Shape ws{1, 2, 4, 2, 8, 4};
  const LossBuilder fuse = [](Graph<double>&, const std::vector<Var<double>>& in) {
    return sum_squares(weighted_fuse(in[0], in[1], in[2]));
  };
  CHECK(grad_check(fuse, {uniform_tensor<double>(kPair, rng, -1, 1), uniform_tensor<double>(kPair, rng, -1, 1),
                          uniform_tensor<double>(ws, rng, 0, 1)},
                   nullptr)
            .passed(1e-4));
  const LossBuilder cross = [](Graph<double>&, const std::vector<Var<double>>& in) {
    return sum_squares(cross_level(in[0], in[1], in[2], 2, FsdRule::Mean));
  };
  CHECK(grad_check(cross, {uniform_tensor<double>(kPair, rng, -1, 1), uniform_tensor<double>(kPair, rng, -1, 1),
                           uniform_tensor<double>(kPair, rng, -1, 1)},
                   nullptr)
            .passed(1e-4));
}

TEST_CASE("fusion rejects mismatched inputs") {
  Graph<double> g(false);
  ParamStore<double> params;
  Rng rng(12);
  FusionBlock<double> block("f", 4, config_of(FusionKind::MCF));
  block.init(params, rng);
  Context<double> ctx{g, params, NormMode::Train};
  CHECK_THROWS_AS(block.forward(ctx, g.constant(Tensor<double>({1, 3, 1, 2, 2})), g.constant(Tensor<double>({1, 3, 1, 2, 2})), 1),
                  ShapeError);
  CHECK_THROWS_AS(resolved_stages(FusionConfig{FusionKind::Plus, {5}}, 4), ConfigError);
  CHECK(resolved_stages(FusionConfig{}, 4) == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(resolved_stages(FusionConfig{FusionKind::Cat}, 4) == std::vector<std::size_t>{2});
  CHECK(parse_fusion_kind("attention") == FusionKind::Attention);
  CHECK_THROWS_AS(parse_fusion_kind("sum"), ConfigError);
}
