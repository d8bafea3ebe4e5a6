#include <json.hpp>

#include "doctest.h"
#include "gait/data/synth.hpp"
#include "oracles/golden.hpp"
#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"

using namespace gait;

namespace {

Embedding point(const std::string& subject, std::vector<float> f, const std::string& view = "000",
                const std::string& condition = "cl") {
  const std::size_t n = f.size();
  return Embedding{subject, condition, view, n, 1, std::move(f)};
}

EvalProtocol protocol_of(std::vector<std::string> conditions, bool exclude = false) {
  EvalProtocol p;
  p.conditions = std::move(conditions);
  p.exclude_identical_view = exclude;
  return p;
}

}  // namespace

TEST_CASE("protocol parsing and selection") {
  const auto p = parse_protocol(
      "# split\n"
      "gallery.conditions = nm\n"
      "probe.conditions = cl, up\n"
      "probe.views = 000\n"
      "exclude_identical_view = false\n"
      "conditions = CL,UP,DN,BG\n"
      "ranks = 1,5\n");
  CHECK(p.gallery.conditions == std::vector<std::string>{"nm"});
  CHECK(p.probe.conditions == std::vector<std::string>{"cl", "up"});
  CHECK(p.probe.views == std::vector<std::string>{"000"});
  CHECK_FALSE(p.exclude_identical_view);
  CHECK(p.conditions.size() == 4);
  CHECK(p.ranks == std::vector<std::size_t>{1, 5});
  CHECK_THROWS_AS(parse_protocol("gallery.condition = nm\n"), ConfigError);
  CHECK_THROWS_AS(parse_protocol("ranks = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_protocol("ranks = 1\nranks = 2\n"), ConfigError);

  DatasetIndex index;
  index.entries = {{"000", "nm", "000", "000/nm/000", 5}, {"000", "cl", "180", "000/cl/180", 5},
                   {"001", "up", "000", "001/up/000", 5}};
  CHECK(select_entries(index, p.gallery, "gallery") == std::vector<std::size_t>{0});
  CHECK(select_entries(index, p.probe, "probe") == std::vector<std::size_t>{2});
  CHECK(select_entries(index, Selector{}, "all").size() == 3);
  CHECK_THROWS_AS(select_entries(index, Selector{{"bg"}, {}}, "probe"), DataError);
}

TEST_CASE("embedding distance averages per-part euclidean distances") {
  // (E, P) = (2, 2): part 0 differs by (3, 4), part 1 by (0, 0).
  const Embedding a{"a", "cl", "000", 2, 2, {0, 0, 0, 0}};
  const Embedding b{"b", "cl", "000", 2, 2, {3, 0, 4, 0}};
  CHECK(embedding_distance(a, b) == doctest::Approx(2.5));
  CHECK(embedding_distance(a, a) == 0.0);
}

TEST_CASE("rank_k hand cases") {
  SUBCASE("1-D example") {
    const std::vector<Embedding> probes{point("A", {0.0f}), point("B", {1.0f})};
    const std::vector<Embedding> gallery{point("A", {0.1f}), point("B", {0.9f}), point("B", {0.4f})};
    const auto rep = evaluate(probes, gallery, protocol_of({"CL"}));
    CHECK(rep.accuracy[0][0] == 100.0);
    const auto ref = oracle::rank_accuracy(probes, gallery, false, {1, 5}, {"CL"});
    CHECK(ref[0][0] == 100.0);
  }

  SUBCASE("self gallery") {
    Rng rng(1);
    std::vector<Embedding> set;
    for (int i = 0; i < 12; ++i) {
      const auto f = uniform_tensor<float>({3, 2}, rng, -1, 1);
      set.push_back(Embedding{std::to_string(i), "up", "000", 3, 2, f.storage()});
    }
    const auto rep = evaluate(set, set, protocol_of({"UP"}));
    CHECK(rep.accuracy[0][0] == 100.0);
    CHECK(rep.mean(0) == 100.0);
  }

  SUBCASE("exclusion skips probes without an admissible gallery") {
    const std::vector<Embedding> gallery{point("A", {0.0f}, "000"), point("B", {5.0f}, "000")};
    const std::vector<Embedding> probes{point("A", {0.1f}, "000"), point("B", {4.0f}, "090"),
                                        point("A", {4.9f}, "090")};
    const auto results = rank_probes(probes, gallery, true);
    CHECK(results[0].skipped);
    CHECK(results[1].hit_rank == 1);
    CHECK(results[2].hit_rank == 2);
    const auto rep = build_report(probes, results, protocol_of({"CL"}, true));
    CHECK(rep.skipped == 1);
    CHECK(rep.counted[0][0] == 2);
    CHECK(rep.accuracy[0][0] == 50.0);
    CHECK(rep.accuracy[1][0] == 100.0);
  }

  SUBCASE("ties keep gallery order") {
    const std::vector<Embedding> probes{point("A", {0.0f})};
    const std::vector<Embedding> tie_b_first{point("B", {1.0f}), point("A", {-1.0f})};
    const std::vector<Embedding> tie_a_first{point("A", {-1.0f}), point("B", {1.0f})};
    CHECK(rank_probes(probes, tie_b_first, false)[0].hit_rank == 2);
    CHECK(rank_probes(probes, tie_a_first, false)[0].hit_rank == 1);
  }

  SUBCASE("k at gallery size and monotone distance transforms") {
    Rng rng(2);
    std::vector<Embedding> gallery, probes;
    for (int i = 0; i < 6; ++i) {
      gallery.push_back(Embedding{std::to_string(i), "nm", "000", 4, 1, uniform_tensor<float>({4}, rng, -1, 1).storage()});
      probes.push_back(Embedding{std::to_string(i), "bg", "090", 4, 1, uniform_tensor<float>({4}, rng, -1, 1).storage()});
    }
    auto p = protocol_of({"BG"});
    p.ranks = {1, 6};
    const auto rep = evaluate(probes, gallery, p);
    CHECK(rep.accuracy[1][0] == 100.0);

    auto scaled_g = gallery, scaled_p = probes;
    for (auto* set : {&scaled_g, &scaled_p})
      for (auto& e : *set)
        for (auto& v : e.f) v *= 4.0f;
    const auto a = rank_probes(probes, gallery, false);
    const auto b = rank_probes(scaled_p, scaled_g, false);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].hit_rank == b[i].hit_rank);
  }
}

TEST_CASE("rank_k equals the exhaustive reference on 200 instances") {
  EvalProtocol p;
  p.ranks = golden::kGoldenRanks;
  p.conditions = golden::kGoldenConditions;
  std::size_t with_ties = 0, with_skips = 0;
  for (const auto& inst : golden::rank_instances()) {
    p.exclude_identical_view = inst.exclude_identical_view;
    const auto results = rank_probes(inst.probes, inst.gallery, inst.exclude_identical_view);
    const auto rep = build_report(inst.probes, results, p);
    const auto ref = oracle::rank_accuracy(inst.probes, inst.gallery, inst.exclude_identical_view, p.ranks, p.conditions);
    for (std::size_t r = 0; r < p.ranks.size(); ++r) CHECK(rep.accuracy[r] == ref[r]);
    for (std::size_t c = 0; c < p.conditions.size(); ++c) CHECK(static_cast<double>(rep.counted[0][c]) == ref.back()[c]);
    with_skips += rep.skipped > 0;
    for (const auto& probe : inst.probes) {
      std::vector<double> d;
      for (const auto& g : inst.gallery) d.push_back(embedding_distance(probe, g));
      std::sort(d.begin(), d.end());
      with_ties += std::adjacent_find(d.begin(), d.end()) != d.end();
    }
  }
  CHECK(with_ties > 50);
  CHECK(with_skips > 5);
}

TEST_CASE("report layout and means") {
  std::vector<Embedding> probes;
  std::vector<ProbeResult> results;
  // 20 probes per condition with 16, 17, 18, 19 rank-1 hits.
  const std::vector<std::string> conds{"cl", "up", "dn", "bg"};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 20; ++i) {
      probes.push_back(point("x", {0}, i % 2 ? "090" : "000", conds[c]));
      results.push_back(ProbeResult{probes.size() - 1, false, i < 16 + c ? 1u : 0u});
    }
  const auto rep = build_report(probes, results, protocol_of({"CL", "UP", "DN", "BG"}));
  CHECK(rep.accuracy[0] == std::vector<double>{80, 85, 90, 95});
  CHECK(rep.mean(0) == 87.5);
  CHECK(rep.views == std::vector<std::string>{"000", "090"});

  const auto one = build_report(probes, results, protocol_of({"UP"}));
  CHECK(one.mean(0) == 85.0);

  const std::string text = render_text(rep);
  const auto header = text.find("CL");
  CHECK(header < text.find("UP"));
  CHECK(text.find("UP") < text.find("DN"));
  CHECK(text.find("DN") < text.find("BG"));
  CHECK(text.find("BG") < text.find("Mean"));
  CHECK(text.find("87.50") != std::string::npos);

  std::istringstream lines(render_jsonl(rep));
  std::string line;
  std::getline(lines, line);
  const auto row = nlohmann::ordered_json::parse(line);
  std::vector<std::string> keys;
  for (const auto& [k, v] : row.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"rank", "exclude_identical_view", "CL", "UP", "DN", "BG", "Mean", "probes",
                                         "skipped"});
  CHECK(row["Mean"].get<double>() == 87.5);
  std::size_t rows = 1;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2 + 4);

  testing::TempDir dir("report");
  write_report(dir.path, rep);
  CHECK(std::filesystem::exists(dir.path / "report.txt"));
  CHECK(std::filesystem::exists(dir.path / "report.jsonl"));
}

TEST_CASE("conditions without probes stay out of the mean") {
  std::vector<Embedding> probes;
  std::vector<ProbeResult> results;
  for (std::size_t i = 0; i < 10; ++i) {
    probes.push_back(point("x", {0}, "000", i < 5 ? "cl" : "up"));
    results.push_back(ProbeResult{i, false, i < 5 || i % 2 == 1 ? 1u : 0u});
  }
  const auto rep = build_report(probes, results, protocol_of({"CL", "UP", "BG"}));
  CHECK(rep.counted[0] == std::vector<std::size_t>{5, 5, 0});
  CHECK(rep.mean(0) == doctest::Approx((100.0 + 60.0) / 2));
  const std::string text = render_text(rep);
  CHECK(text.find("80.00") != std::string::npos);

  const auto none = build_report({}, {}, protocol_of({"CL"}));
  CHECK(none.mean(0) == 0.0);
}

TEST_CASE("sequence embeddings") {
  testing::TempDir raw("eval_raw");
  synth_generate(raw.path, SynthOptions{3, 4, 6, 2});
  const auto store = SequenceStore::load(scan_dataset(raw.path).index, false);

  auto cfg = testing::tiny_model_config(FusionKind::MCF, 3);
  DepthGait<float> model(cfg);
  ParamStore<float> params;
  model.init(params, 3);

  std::vector<std::size_t> all(store.size());
  std::iota(all.begin(), all.end(), 0);
  const auto a = embed_sequences(model, params, store, all);
  REQUIRE(a.size() == 12);
  for (const auto& e : a) {
    CHECK(e.embedding == 8);
    CHECK(e.parts == 4);
    CHECK(e.f.size() == 32);
  }
  CHECK(a[0].subject == "000");
  CHECK(a[0].condition == store.index().entries[0].condition);

  const auto b = embed_sequences(model, params, store, all);
  const auto c = embed_sequences(model, params, store, all, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].f == b[i].f);
    CHECK(a[i].f == c[i].f);
  }

  cfg.modality = Modality::Silhouette;
  DepthGait<float> sil(cfg);
  ParamStore<float> sil_params;
  sil.init(sil_params, 3);
  const auto s = embed_sequences(sil, sil_params, store, {0, 1});
  CHECK(s[0].embedding == 8);
  CHECK(s[0].parts == 4);
}
