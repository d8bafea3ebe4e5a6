#include <cctype>
#include <cmath>

#include "oracles/oracles.hpp"

namespace gait::oracle {

std::vector<std::vector<double>> rank_accuracy(const std::vector<Embedding>& probes,
                                               const std::vector<Embedding>& gallery, bool exclude_identical_view,
                                               const std::vector<std::size_t>& ranks,
                                               const std::vector<std::string>& conditions) {
  auto upper = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  };
  auto distance = [](const Embedding& a, const Embedding& b) {
    double total = 0;
    for (std::size_t p = 0; p < a.parts; ++p) {
      double sq = 0;
      for (std::size_t e = 0; e < a.embedding; ++e) {
        const double d = static_cast<double>(a.f[e * a.parts + p]) - static_cast<double>(b.f[e * b.parts + p]);
        sq += d * d;
      }
      total += std::sqrt(sq);
    }
    return total / static_cast<double>(a.parts);
  };

  std::vector<std::vector<double>> hits(ranks.size() + 1, std::vector<double>(conditions.size(), 0.0));
  for (const auto& probe : probes) {
    std::size_t c = conditions.size();
    for (std::size_t i = 0; i < conditions.size(); ++i)
      if (conditions[i] == upper(probe.condition)) c = i;
    if (c == conditions.size()) continue;

    std::vector<double> table(gallery.size());
    std::vector<bool> admissible(gallery.size());
    bool any = false;
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      table[j] = distance(probe, gallery[j]);
      admissible[j] = !(exclude_identical_view && gallery[j].view == probe.view);
      any = any || admissible[j];
    }
    if (!any) continue;
    hits[ranks.size()][c] += 1;

    for (std::size_t r = 0; r < ranks.size(); ++r) {
      bool hit = false;
      for (std::size_t j = 0; j < gallery.size() && !hit; ++j) {
        if (!admissible[j] || gallery[j].subject != probe.subject) continue;
        std::size_t ahead = 0;
        for (std::size_t i = 0; i < gallery.size(); ++i) {
          if (!admissible[i] || i == j) continue;
          if (table[i] < table[j] || (table[i] == table[j] && i < j)) ++ahead;
        }
        hit = ahead < ranks[r];
      }
      if (hit) hits[r][c] += 1;
    }
  }
  for (std::size_t r = 0; r < ranks.size(); ++r)
    for (std::size_t c = 0; c < conditions.size(); ++c)
      hits[r][c] = hits[ranks.size()][c] > 0 ? 100.0 * hits[r][c] / hits[ranks.size()][c] : 0.0;
  return hits;
}

}  // namespace gait::oracle
