#include "gait/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <spdlog/spdlog.h>
#include <thread>

#include "gait/config/keyvalue.hpp"

namespace gait {
namespace {

bool contains(const std::vector<std::string>& list, const std::string& v) {
  return std::find(list.begin(), list.end(), v) != list.end();
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

bool Selector::matches(const SequenceEntry& entry) const {
  return (conditions.empty() || contains(conditions, entry.condition)) && (views.empty() || contains(views, entry.view));
}

EvalProtocol parse_protocol(const std::string& text, const std::string& origin) {
  EvalProtocol p;
  for (const auto& [key, value] : parse_key_values(text, origin)) {
    if (key == "gallery.conditions") {
      p.gallery.conditions = split_list(value);
    } else if (key == "gallery.views") {
      p.gallery.views = split_list(value);
    } else if (key == "probe.conditions") {
      p.probe.conditions = split_list(value);
    } else if (key == "probe.views") {
      p.probe.views = split_list(value);
    } else if (key == "exclude_identical_view") {
      p.exclude_identical_view = parse_bool(key, value);
    } else if (key == "conditions") {
      p.conditions = split_list(value);
    } else if (key == "ranks") {
      p.ranks = parse_uint_list(key, value);
    } else {
      throw ConfigError(origin + ": unknown key " + key);
    }
  }
  if (p.ranks.empty()) throw ConfigError(origin + ": ranks must not be empty");
  for (auto k : p.ranks) {
    if (k == 0) throw ConfigError(origin + ": ranks must be >= 1");
  }
  return p;
}

std::vector<std::size_t> select_entries(const DatasetIndex& index, const Selector& selector, const std::string& what) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    if (selector.matches(index.entries[i])) out.push_back(i);
  }
  if (out.empty()) throw DataError(what + " selector matched no sequence");
  return out;
}

double embedding_distance(const Embedding& a, const Embedding& b) {
  if (a.embedding != b.embedding || a.parts != b.parts) throw ShapeError("embedding_distance: shapes differ");
  double total = 0;
  for (std::size_t p = 0; p < a.parts; ++p) {
    double sq = 0;
    for (std::size_t e = 0; e < a.embedding; ++e) {
      const double d = static_cast<double>(a.f[e * a.parts + p]) - b.f[e * b.parts + p];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(a.parts);
}

std::vector<Embedding> embed_sequences(const DepthGait<float>& model, const ParamStore<float>& params,
                                       const SequenceStore& store, const std::vector<std::size_t>& entries,
                                       std::size_t threads) {
  std::vector<Embedding> out(entries.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    // Eval mode never writes to the store; a private copy keeps workers independent.
    ParamStore<float> local = params.cast<float>();
    for (std::size_t i = begin; i < entries.size(); i += step) {
      const auto& entry = store.index().entries.at(entries[i]);
      const auto [s, d] = sequence_tensors(store.sequence(entries[i]));
      Graph<float> g(false);
      Context<float> ctx{g, local, NormMode::Eval};
      const auto result = model.forward(ctx, g.constant(s), g.constant(d));
      const Tensor<float>& f = result.head.embedding.value();
      out[i] = Embedding{entry.subject, entry.condition, entry.view, f.dim(1), f.dim(2), f.storage()};
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, entries.size()));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return out;
}

std::vector<ProbeResult> rank_probes(const std::vector<Embedding>& probes, const std::vector<Embedding>& gallery,
                                     bool exclude_identical_view) {
  std::vector<ProbeResult> out;
  out.reserve(probes.size());
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Embedding& probe = probes[i];
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      if (exclude_identical_view && gallery[j].view == probe.view) continue;
      order.emplace_back(embedding_distance(probe, gallery[j]), j);
    }
    ProbeResult r;
    r.probe = i;
    if (order.empty()) {
      r.skipped = true;
      ++skipped;
      out.push_back(r);
      continue;
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (gallery[order[pos].second].subject == probe.subject) {
        r.hit_rank = pos + 1;
        break;
      }
    }
    out.push_back(r);
  }
  if (skipped > 0) spdlog::warn("rank: {} probe(s) skipped, no admissible gallery entry", skipped);
  return out;
}

double EvalReport::mean(std::size_t r) const {
  double total = 0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    if (counted.at(r).at(c) == 0) continue;
    total += accuracy.at(r).at(c);
    ++used;
  }
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

EvalReport build_report(const std::vector<Embedding>& probes, const std::vector<ProbeResult>& results,
                        const EvalProtocol& protocol) {
  EvalReport rep;
  rep.ranks = protocol.ranks;
  rep.exclude_identical_view = protocol.exclude_identical_view;
  rep.conditions = protocol.conditions;
  if (rep.conditions.empty()) {
    std::set<std::string> seen;
    for (const auto& p : probes) seen.insert(to_upper(p.condition));
    rep.conditions.assign(seen.begin(), seen.end());
  }
  std::set<std::string> views;
  for (const auto& p : probes) views.insert(p.view);
  rep.views.assign(views.begin(), views.end());

  const std::size_t nc = rep.conditions.size(), nv = rep.views.size();
  std::vector<std::size_t> total(nc, 0);
  std::vector<std::vector<std::size_t>> hits(rep.ranks.size(), std::vector<std::size_t>(nc, 0));
  std::vector<std::vector<std::size_t>> view_total(nc, std::vector<std::size_t>(nv, 0));
  std::vector<std::vector<std::size_t>> view_hits(nc, std::vector<std::size_t>(nv, 0));

  for (const auto& r : results) {
    ++rep.probes;
    if (r.skipped) {
      ++rep.skipped;
      continue;
    }
    const Embedding& probe = probes.at(r.probe);
    const std::string label = to_upper(probe.condition);
    const auto c = std::find(rep.conditions.begin(), rep.conditions.end(), label) - rep.conditions.begin();
    if (static_cast<std::size_t>(c) == nc) continue;
    const auto v = std::lower_bound(rep.views.begin(), rep.views.end(), probe.view) - rep.views.begin();
    ++total[c];
    ++view_total[c][v];
    for (std::size_t k = 0; k < rep.ranks.size(); ++k) {
      if (r.hit_rank != 0 && r.hit_rank <= rep.ranks[k]) ++hits[k][c];
    }
    if (r.hit_rank == 1) ++view_hits[c][v];
  }

  rep.accuracy.assign(rep.ranks.size(), std::vector<double>(nc, 0.0));
  rep.counted.assign(rep.ranks.size(), total);
  for (std::size_t k = 0; k < rep.ranks.size(); ++k)
    for (std::size_t c = 0; c < nc; ++c)
      if (total[c] > 0) rep.accuracy[k][c] = 100.0 * static_cast<double>(hits[k][c]) / static_cast<double>(total[c]);
  rep.view_rank1.assign(nc, std::vector<double>(nv, -1.0));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t v = 0; v < nv; ++v)
      if (view_total[c][v] > 0) {
        rep.view_rank1[c][v] = 100.0 * static_cast<double>(view_hits[c][v]) / static_cast<double>(view_total[c][v]);
      }
  return rep;
}

EvalReport evaluate(const std::vector<Embedding>& probes, const std::vector<Embedding>& gallery,
                    const EvalProtocol& protocol) {
  return build_report(probes, rank_probes(probes, gallery, protocol.exclude_identical_view), protocol);
}

std::string render_text(const EvalReport& rep) {
  std::string out = std::string("identical-view cases: ") + (rep.exclude_identical_view ? "excluded" : "included") +
                    "\nprobes: " + std::to_string(rep.probes) + " (skipped " + std::to_string(rep.skipped) + ")\n\n";
  auto cell = [](const std::string& s) {
    std::string c = s;
    if (c.size() < 8) c.insert(0, 8 - c.size(), ' ');
    return c + " ";
  };
  out += cell("Rank");
  for (const auto& c : rep.conditions) out += cell(c);
  out += cell("Mean") + "\n";
  for (std::size_t k = 0; k < rep.ranks.size(); ++k) {
    out += cell("R-" + std::to_string(rep.ranks[k]));
    for (std::size_t c = 0; c < rep.conditions.size(); ++c) {
      out += cell(rep.counted[k][c] == 0 ? "-" : format_percent(rep.accuracy[k][c]));
    }
    out += cell(format_percent(rep.mean(k))) + "\n";
  }
  out += "\nrank-1 by probe view\n" + cell("");
  for (const auto& v : rep.views) out += cell(v);
  out += "\n";
  for (std::size_t c = 0; c < rep.conditions.size(); ++c) {
    out += cell(rep.conditions[c]);
    for (double v : rep.view_rank1[c]) out += cell(v < 0 ? "-" : format_percent(v));
    out += "\n";
  }
  return out;
}

std::string render_jsonl(const EvalReport& rep) {
  std::string out;
  for (std::size_t k = 0; k < rep.ranks.size(); ++k) {
    nlohmann::ordered_json row;
    row["rank"] = rep.ranks[k];
    row["exclude_identical_view"] = rep.exclude_identical_view;
    for (std::size_t c = 0; c < rep.conditions.size(); ++c) row[rep.conditions[c]] = rep.accuracy[k][c];
    row["Mean"] = rep.mean(k);
    row["probes"] = rep.probes;
    row["skipped"] = rep.skipped;
    out += row.dump() + "\n";
  }
  for (std::size_t c = 0; c < rep.conditions.size(); ++c) {
    nlohmann::ordered_json row;
    row["condition"] = rep.conditions[c];
    nlohmann::ordered_json views = nlohmann::ordered_json::object();
    for (std::size_t v = 0; v < rep.views.size(); ++v) {
      if (rep.view_rank1[c][v] >= 0) views[rep.views[v]] = rep.view_rank1[c][v];
    }
    row["rank1_by_view"] = views;
    out += row.dump() + "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.txt", std::ios::binary) << render_text(report);
  std::ofstream(dir / "report.jsonl", std::ios::binary) << render_jsonl(report);
}

}  // namespace gait
