#include "gait/head/head.hpp"

#include <cmath>
#include <limits>
#include <spdlog/spdlog.h>

namespace gait {
namespace {

constexpr double kMinSquaredDistance = 1e-12;

struct Band {
  std::size_t begin, end;
};

std::vector<Band> bands(std::size_t height, std::size_t parts) {
  if (parts == 0 || parts > height) {
    throw ConfigError("horizontal_pool: " + std::to_string(parts) + " parts for " + std::to_string(height) + " rows");
  }
  const std::size_t rows = (height + parts - 1) / parts;
  std::vector<Band> out;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t b = p * rows;
    if (b >= height) {
      throw ConfigError("horizontal_pool: " + std::to_string(parts) + " parts leave an empty band over " +
                        std::to_string(height) + " rows");
    }
    out.push_back({b, std::min(height, b + rows)});
  }
  return out;
}

}  // namespace

template <typename Real>
Var<Real> temporal_pool(const Var<Real>& x, TemporalPoolMode mode) {
  const Dims5 d = dims5(x.value());
  const std::size_t hw = d.h * d.w;
  Tensor<Real> out({d.n, d.c, d.h, d.w});
  std::vector<std::size_t> arg(mode == TemporalPoolMode::Max ? out.size() : 0);
  const Real* xv = x.value().data();
  for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
    for (std::size_t i = 0; i < hw; ++i) {
      const Real* p = xv + nc * d.t * hw + i;
      Real acc = p[0];
      std::size_t best = 0;
      for (std::size_t t = 1; t < d.t; ++t) {
        if (mode == TemporalPoolMode::Max) {
          if (p[t * hw] > acc) {
            acc = p[t * hw];
            best = t;
          }
        } else {
          acc += p[t * hw];
        }
      }
      if (mode == TemporalPoolMode::Max) {
        arg[nc * hw + i] = best;
      } else {
        acc /= static_cast<Real>(d.t);
      }
      out[nc * hw + i] = acc;
    }
  }
  return x.graph().record(std::move(out), {x}, [x, d, hw, mode, arg = std::move(arg)](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* dx = x.node()->grad_buffer().data();
    for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
      for (std::size_t i = 0; i < hw; ++i) {
        const Real gi = g[nc * hw + i];
        Real* p = dx + nc * d.t * hw + i;
        if (mode == TemporalPoolMode::Max) {
          p[arg[nc * hw + i] * hw] += gi;
        } else {
          for (std::size_t t = 0; t < d.t; ++t) p[t * hw] += gi / static_cast<Real>(d.t);
        }
      }
    }
  });
}

template <typename Real>
Var<Real> horizontal_pool(const Var<Real>& x, std::size_t parts) {
  const Shape& s = x.shape();
  if (s.size() != 4) throw ShapeError("horizontal_pool: expects (N, C, H, W), got " + to_string(s));
  const std::size_t nc = s[0] * s[1], h = s[2], w = s[3];
  const auto bs = bands(h, parts);
  Tensor<Real> out({s[0], s[1], parts});
  std::vector<std::size_t> arg(out.size());
  const Real* xv = x.value().data();
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t p = 0; p < parts; ++p) {
      const Real* base = xv + i * h * w;
      Real mx = -std::numeric_limits<Real>::infinity();
      Real total = 0;
      std::size_t best = 0;
      for (std::size_t r = bs[p].begin * w; r < bs[p].end * w; ++r) {
        total += base[r];
        if (base[r] > mx) {
          mx = base[r];
          best = r;
        }
      }
      arg[i * parts + p] = best;
      out[i * parts + p] = mx + total / static_cast<Real>((bs[p].end - bs[p].begin) * w);
    }
  }
  return x.graph().record(std::move(out), {x}, [x, nc, h, w, parts, bs, arg = std::move(arg)](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* dx = x.node()->grad_buffer().data();
    for (std::size_t i = 0; i < nc; ++i) {
      Real* base = dx + i * h * w;
      for (std::size_t p = 0; p < parts; ++p) {
        const Real gi = g[i * parts + p];
        const Real share = gi / static_cast<Real>((bs[p].end - bs[p].begin) * w);
        for (std::size_t r = bs[p].begin * w; r < bs[p].end * w; ++r) base[r] += share;
        base[arg[i * parts + p]] += gi;
      }
    }
  });
}

template <typename Real>
Var<Real> part_linear(const Var<Real>& x, const Var<Real>& weight) {
  const Shape& s = x.shape();
  const Shape& ws = weight.shape();
  if (s.size() != 3 || ws.size() != 3 || ws[0] != s[2] || ws[1] != s[1]) {
    throw ShapeError("part_linear: input " + to_string(s) + " vs weight " + to_string(ws));
  }
  const std::size_t n = s[0], cin = s[1], parts = s[2], cout = ws[2];
  Tensor<Real> out({n, cout, parts});
  const Real* xv = x.value().data();
  const Real* wv = weight.value().data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t p = 0; p < parts; ++p)
      for (std::size_t o = 0; o < cout; ++o) {
        Real acc = 0;
        for (std::size_t i = 0; i < cin; ++i) acc += xv[(b * cin + i) * parts + p] * wv[(p * cin + i) * cout + o];
        out[(b * cout + o) * parts + p] = acc;
      }
  return x.graph().record(std::move(out), {x, weight}, [x, weight, n, cin, parts, cout](const Tensor<Real>& g) {
    const Real* xv = x.value().data();
    const Real* wv = weight.value().data();
    Real* dx = x.requires_grad() ? x.node()->grad_buffer().data() : nullptr;
    Real* dw = weight.requires_grad() ? weight.node()->grad_buffer().data() : nullptr;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t p = 0; p < parts; ++p)
        for (std::size_t o = 0; o < cout; ++o) {
          const Real go = g[(b * cout + o) * parts + p];
          for (std::size_t i = 0; i < cin; ++i) {
            if (dx) dx[(b * cin + i) * parts + p] += go * wv[(p * cin + i) * cout + o];
            if (dw) dw[(p * cin + i) * cout + o] += go * xv[(b * cin + i) * parts + p];
          }
        }
  });
}

template <typename Real>
Var<Real> triplet_loss(const Var<Real>& f, const std::vector<std::size_t>& labels, double margin) {
  const Shape& s = f.shape();
  if (s.size() != 3 || s[0] != labels.size()) throw ShapeError("triplet_loss: f must be (N, E, P) with N labels");
  const std::size_t n = s[0], e = s[1], parts = s[2];
  bool has_negative = false;
  for (std::size_t i = 1; i < n; ++i) has_negative |= labels[i] != labels[0];
  if (!has_negative) spdlog::warn("triplet_loss: batch holds a single class, no negatives");

  const Real* fv = f.value().data();
  // Pair coefficients of d(i, j) in the loss, per part.
  auto coeffs = std::make_shared<std::vector<double>>(parts * n * n, 0.0);
  auto dist = std::make_shared<std::vector<double>>(parts * n * n, 0.0);
  double loss = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    double* dp = dist->data() + p * n * n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double sq = 0;
        for (std::size_t k = 0; k < e; ++k) {
          const double diff = static_cast<double>(fv[(i * e + k) * parts + p]) - fv[(j * e + k) * parts + p];
          sq += diff * diff;
        }
        dp[i * n + j] = sq;
      }
    double sum = 0;
    std::size_t count = 0;
    std::vector<double> c(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t q = 0; q < n; ++q) {
        if (q == a || labels[q] != labels[a]) continue;
        const double dap = std::sqrt(std::max(dp[a * n + q], kMinSquaredDistance));
        for (std::size_t m = 0; m < n; ++m) {
          if (labels[m] == labels[a]) continue;
          const double dan = std::sqrt(std::max(dp[a * n + m], kMinSquaredDistance));
          const double l = dap - dan + margin;
          if (l <= 0) continue;
          sum += l;
          ++count;
          c[a * n + q] += 1;
          c[a * n + m] -= 1;
        }
      }
    if (count == 0) continue;
    loss += sum / static_cast<double>(count) / static_cast<double>(parts);
    for (std::size_t i = 0; i < n * n; ++i) (*coeffs)[p * n * n + i] = c[i] / static_cast<double>(count * parts);
  }

  return f.graph().record(Tensor<Real>({1}, {static_cast<Real>(loss)}), {f},
                          [f, n, e, parts, coeffs, dist](const Tensor<Real>& g) {
                            if (!f.requires_grad()) return;
                            const Real* fv = f.value().data();
                            Real* df = f.node()->grad_buffer().data();
                            for (std::size_t p = 0; p < parts; ++p)
                              for (std::size_t i = 0; i < n; ++i)
                                for (std::size_t j = 0; j < n; ++j) {
                                  const double c = (*coeffs)[(p * n + i) * n + j];
                                  const double sq = (*dist)[(p * n + i) * n + j];
                                  if (c == 0 || sq < kMinSquaredDistance) continue;
                                  const double scale = g[0] * c / std::sqrt(sq);
                                  for (std::size_t k = 0; k < e; ++k) {
                                    const double diff =
                                        static_cast<double>(fv[(i * e + k) * parts + p]) - fv[(j * e + k) * parts + p];
                                    df[(i * e + k) * parts + p] += static_cast<Real>(scale * diff);
                                    df[(j * e + k) * parts + p] -= static_cast<Real>(scale * diff);
                                  }
                                }
                          });
}

template <typename Real>
Var<Real> cross_entropy(const Var<Real>& logits, const std::vector<std::size_t>& labels) {
  const Shape& s = logits.shape();
  if (s.size() != 3 || s[0] != labels.size()) throw ShapeError("cross_entropy: logits must be (N, K, P) with N labels");
  const std::size_t n = s[0], k = s[1], parts = s[2];
  for (auto l : labels) {
    if (l >= k) throw ConfigError("cross_entropy: label " + std::to_string(l) + " outside [0, " + std::to_string(k) + ")");
  }
  const Real* z = logits.value().data();
  auto prob = std::make_shared<std::vector<double>>(n * k * parts);
  double loss = 0;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t p = 0; p < parts; ++p) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, static_cast<double>(z[(b * k + c) * parts + p]));
      double total = 0;
      for (std::size_t c = 0; c < k; ++c) total += std::exp(z[(b * k + c) * parts + p] - mx);
      for (std::size_t c = 0; c < k; ++c) {
        (*prob)[(b * k + c) * parts + p] = std::exp(z[(b * k + c) * parts + p] - mx) / total;
      }
      loss += std::log(total) + mx - z[(b * k + labels[b]) * parts + p];
    }
  const double denom = static_cast<double>(n * parts);
  return logits.graph().record(Tensor<Real>({1}, {static_cast<Real>(loss / denom)}), {logits},
                               [logits, labels, prob, n, k, parts, denom](const Tensor<Real>& g) {
                                 if (!logits.requires_grad()) return;
                                 Real* dz = logits.node()->grad_buffer().data();
                                 for (std::size_t b = 0; b < n; ++b)
                                   for (std::size_t c = 0; c < k; ++c)
                                     for (std::size_t p = 0; p < parts; ++p) {
                                       const std::size_t i = (b * k + c) * parts + p;
                                       const double target = c == labels[b] ? 1.0 : 0.0;
                                       dz[i] += static_cast<Real>(g[0] * ((*prob)[i] - target) / denom);
                                     }
                               });
}

template <typename Real>
LossTerms<Real> combined_loss(const Var<Real>& f, const Var<Real>& logits, const std::vector<std::size_t>& labels,
                              const LossWeights& weights) {
  if (weights.alpha < 0 || weights.beta < 0 || weights.alpha + weights.beta <= 0) {
    throw ConfigError("loss weights must be non-negative with a positive sum");
  }
  if (weights.margin < 0) throw ConfigError("triplet margin must be non-negative");
  LossTerms<Real> out;
  out.triplet = triplet_loss(f, labels, weights.margin);
  out.ce = cross_entropy(logits, labels);
  out.total = add(scale(out.triplet, static_cast<Real>(weights.alpha)), scale(out.ce, static_cast<Real>(weights.beta)));
  return out;
}

template <typename Real>
Head<Real>::Head(std::string prefix, std::size_t in_channels, HeadConfig config)
    : prefix_(std::move(prefix)), in_channels_(in_channels), config_(config) {
  if (config_.parts == 0 || config_.embedding == 0 || config_.classes == 0) {
    throw ConfigError("head: parts, embedding and classes must be positive");
  }
}

template <typename Real>
void Head<Real>::init(ParamStore<Real>& params, Rng& rng) const {
  params.add(prefix_ + ".fc.weight",
             he_uniform<Real>({config_.parts, in_channels_, config_.embedding}, in_channels_, rng));
  add_norm(params, prefix_ + ".bnneck", config_.embedding * config_.parts);
  // BNNeck output is unit scale; a small classifier keeps early logits tame.
  params.add(prefix_ + ".classifier.weight",
             uniform_tensor<Real>({config_.parts, config_.embedding, config_.classes}, rng, -0.05, 0.05));
}

template <typename Real>
Var<Real> Head<Real>::bnneck(Context<Real>& ctx, const Var<Real>& f) const {
  const Shape& s = f.shape();
  const Var<Real> normed = reshape(apply_norm(ctx, prefix_ + ".bnneck", reshape(f, Shape{s[0], s[1] * s[2]})), s);
  return part_linear(normed, ctx.graph.param(ctx.params.get(prefix_ + ".classifier.weight")));
}

template <typename Real>
HeadOutput<Real> Head<Real>::forward(Context<Real>& ctx, const Var<Real>& features) const {
  const Var<Real> pooled = horizontal_pool(temporal_pool(features, config_.temporal), config_.parts);
  HeadOutput<Real> out;
  out.embedding = part_linear(pooled, ctx.graph.param(ctx.params.get(prefix_ + ".fc.weight")));
  out.logits = bnneck(ctx, out.embedding);
  return out;
}

#define GAIT_INSTANTIATE(Real)                                                                                     \
  template Var<Real> temporal_pool<Real>(const Var<Real>&, TemporalPoolMode);                                      \
  template Var<Real> horizontal_pool<Real>(const Var<Real>&, std::size_t);                                         \
  template Var<Real> part_linear<Real>(const Var<Real>&, const Var<Real>&);                                        \
  template Var<Real> triplet_loss<Real>(const Var<Real>&, const std::vector<std::size_t>&, double);                \
  template Var<Real> cross_entropy<Real>(const Var<Real>&, const std::vector<std::size_t>&);                       \
  template LossTerms<Real> combined_loss<Real>(const Var<Real>&, const Var<Real>&, const std::vector<std::size_t>&, \
                                               const LossWeights&);                                                \
  template class Head<Real>;

GAIT_INSTANTIATE(float)
GAIT_INSTANTIATE(double)
#undef GAIT_INSTANTIATE

}  // namespace gait
