#include "gait/numerics/ops.hpp"

#include <cmath>
#include <vector>

#include "gait/numerics/kernels.hpp"

namespace gait {
namespace {

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

struct ConvGeometry {
  Dims5 in{};
  std::size_t cout = 0, kt = 1, k = 1, stride = 1, pad = 0, tpad = 0, ho = 0, wo = 0;

  std::size_t rows() const { return in.c * kt * k * k; }
  std::size_t out_frame() const { return ho * wo; }
  // A 1x1x1 stride-1 convolution reads the input frame in place.
  bool direct() const { return k == 1 && kt == 1 && stride == 1; }
};

// Sum of f(0..n) in eight independent lanes, so the loop vectorizes.
template <typename Real, typename F>
double lane_sum(std::size_t n, F f) {
  constexpr std::size_t kLanes = 8;
  Real lanes[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] += f(i + l);
  }
  double total = 0;
  for (; i < n; ++i) total += f(i);
  for (Real v : lanes) total += v;
  return total;
}

// Output columns [begin, end) whose input column ox * stride + kx - pad is
// inside the frame.
struct OutRange {
  std::size_t begin, end;
};

OutRange valid_columns(const ConvGeometry& g, std::size_t kx) {
  std::size_t begin = 0;
  if (kx < g.pad) begin = (g.pad - kx + g.stride - 1) / g.stride;
  // ox * stride + kx - pad <= w - 1
  const std::size_t limit = g.in.w - 1 + g.pad - kx;
  std::size_t end = std::min(g.wo, limit / g.stride + 1);
  return {std::min(begin, end), end};
}

template <typename Real>
void im2col(const Real* x, const ConvGeometry& g, std::size_t n, std::size_t t, Real* col) {
  const std::size_t hw = g.in.frame_size();
  const std::size_t howo = g.out_frame();
  const auto h = static_cast<long>(g.in.h);
  const auto w = static_cast<long>(g.in.w);
  for (std::size_t ci = 0; ci < g.in.c; ++ci) {
    for (std::size_t dt = 0; dt < g.kt; ++dt) {
      const long it = static_cast<long>(t + dt) - static_cast<long>(g.tpad);
      const bool t_ok = it >= 0 && it < static_cast<long>(g.in.t);
      const Real* base = t_ok ? x + ((n * g.in.c + ci) * g.in.t + static_cast<std::size_t>(it)) * hw : nullptr;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const std::size_t row = ((ci * g.kt + dt) * g.k + ky) * g.k + kx;
          Real* dst = col + row * howo;
          if (!t_ok) {
            std::fill(dst, dst + howo, Real(0));
            continue;
          }
          for (std::size_t oy = 0; oy < g.ho; ++oy) {
            const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
            Real* drow = dst + oy * g.wo;
            if (iy < 0 || iy >= h) {
              std::fill(drow, drow + g.wo, Real(0));
              continue;
            }
            const Real* srow = base + iy * w;
            const OutRange r = valid_columns(g, kx);
            std::fill(drow, drow + r.begin, Real(0));
            if (g.stride == 1) {
              std::copy(srow + (r.begin + kx - g.pad), srow + (r.end + kx - g.pad), drow + r.begin);
            } else {
              for (std::size_t ox = r.begin; ox < r.end; ++ox) drow[ox] = srow[ox * g.stride + kx - g.pad];
            }
            std::fill(drow + r.end, drow + g.wo, Real(0));
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im(const Real* col, const ConvGeometry& g, std::size_t n, std::size_t t, Real* dx) {
  const std::size_t hw = g.in.frame_size();
  const std::size_t howo = g.out_frame();
  const auto h = static_cast<long>(g.in.h);
  const auto w = static_cast<long>(g.in.w);
  for (std::size_t ci = 0; ci < g.in.c; ++ci) {
    for (std::size_t dt = 0; dt < g.kt; ++dt) {
      const long it = static_cast<long>(t + dt) - static_cast<long>(g.tpad);
      if (it < 0 || it >= static_cast<long>(g.in.t)) continue;
      Real* base = dx + ((n * g.in.c + ci) * g.in.t + static_cast<std::size_t>(it)) * hw;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const std::size_t row = ((ci * g.kt + dt) * g.k + ky) * g.k + kx;
          const Real* src = col + row * howo;
          for (std::size_t oy = 0; oy < g.ho; ++oy) {
            const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
            if (iy < 0 || iy >= h) continue;
            Real* drow = base + iy * w;
            const Real* srow = src + oy * g.wo;
            const OutRange r = valid_columns(g, kx);
            for (std::size_t ox = r.begin; ox < r.end; ++ox) drow[ox * g.stride + kx - g.pad] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<Real> out = a.value();
  const Real* bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](const Tensor<Real>& g) {
    accumulate(a, g);
    accumulate(b, g);
  });
}

template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<Real> out = a.value();
  const Real* bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](const Tensor<Real>& g) {
    const Real* av = a.value().data();
    const Real* bv = b.value().data();
    Real* da = a.requires_grad() ? a.node()->grad_buffer().data() : nullptr;
    Real* db = b.requires_grad() ? b.node()->grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (da) da[i] += g[i] * bv[i];
      if (db) db[i] += g[i] * av[i];
    }
  });
}

template <typename Real>
Var<Real> scale(const Var<Real>& a, Real factor) {
  Tensor<Real> out = a.value();
  for (auto& v : out.values()) v *= factor;
  return a.graph().record(std::move(out), {a}, [a, factor](const Tensor<Real>& g) {
    if (!a.requires_grad()) return;
    Real* d = a.node()->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
  });
}

template <typename Real>
Var<Real> relu(const Var<Real>& x) {
  Tensor<Real> out = x.value();
  for (auto& v : out.values()) v = v > Real(0) ? v : Real(0);
  return x.graph().record(std::move(out), {x}, [x](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* d = x.node()->grad_buffer().data();
    const Real* xv = x.value().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > Real(0)) d[i] += g[i];
    }
  });
}

template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
  Tensor<Real> out = x.value().reshaped(std::move(shape));
  return x.graph().record(std::move(out), {x}, [x](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* d = x.node()->grad_buffer().data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

template <typename Real>
Var<Real> sum(const Var<Real>& x) {
  Real s = 0;
  for (Real v : x.value().values()) s += v;
  return x.graph().record(Tensor<Real>({1}, {s}), {x}, [x](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Tensor<Real>& d = x.node()->grad_buffer();
    for (auto& v : d.values()) v += g[0];
  });
}

template <typename Real>
Var<Real> sum_squares(const Var<Real>& x) {
  Real s = 0;
  for (Real v : x.value().values()) s += v * v;
  return x.graph().record(Tensor<Real>({1}, {s}), {x}, [x](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* d = x.node()->grad_buffer().data();
    const Real* xv = x.value().data();
    for (std::size_t i = 0; i < x.value().size(); ++i) d[i] += Real(2) * xv[i] * g[0];
  });
}

template <typename Real>
Var<Real> concat_channels(const Var<Real>& a, const Var<Real>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sa.size() == sb.size() && sa.size() >= 2 && sa[0] == sb[0];
  for (std::size_t i = 2; ok && i < sa.size(); ++i) ok = sa[i] == sb[i];
  if (!ok) throw ShapeError("concat_channels: shape mismatch " + to_string(sa) + " vs " + to_string(sb));
  std::size_t inner = 1;
  for (std::size_t i = 2; i < sa.size(); ++i) inner *= sa[i];
  const std::size_t ca = sa[1] * inner, cb = sb[1] * inner;
  Shape so = sa;
  so[1] += sb[1];
  Tensor<Real> out(so);
  for (std::size_t n = 0; n < sa[0]; ++n) {
    std::copy_n(a.value().data() + n * ca, ca, out.data() + n * (ca + cb));
    std::copy_n(b.value().data() + n * cb, cb, out.data() + n * (ca + cb) + ca);
  }
  return a.graph().record(std::move(out), {a, b}, [a, b, ca, cb](const Tensor<Real>& g) {
    const std::size_t batches = a.shape()[0];
    for (std::size_t n = 0; n < batches; ++n) {
      if (a.requires_grad()) {
        Real* d = a.node()->grad_buffer().data() + n * ca;
        for (std::size_t i = 0; i < ca; ++i) d[i] += g[n * (ca + cb) + i];
      }
      if (b.requires_grad()) {
        Real* d = b.node()->grad_buffer().data() + n * cb;
        for (std::size_t i = 0; i < cb; ++i) d[i] += g[n * (ca + cb) + ca + i];
      }
    }
  });
}

template <typename Real>
Var<Real> slice_channels(const Var<Real>& x, std::size_t begin, std::size_t count) {
  const Shape& s = x.shape();
  if (s.size() < 2 || begin + count > s[1] || count == 0) {
    throw ShapeError("slice_channels: range out of bounds for " + to_string(s));
  }
  std::size_t inner = 1;
  for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
  Shape so = s;
  so[1] = count;
  Tensor<Real> out(so);
  const std::size_t stride = s[1] * inner, len = count * inner, off = begin * inner;
  for (std::size_t n = 0; n < s[0]; ++n) std::copy_n(x.value().data() + n * stride + off, len, out.data() + n * len);
  return x.graph().record(std::move(out), {x}, [x, stride, len, off](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* d = x.node()->grad_buffer().data();
    for (std::size_t n = 0; n < x.shape()[0]; ++n) {
      for (std::size_t i = 0; i < len; ++i) d[n * stride + off + i] += g[n * len + i];
    }
  });
}

template <typename Real>
Var<Real> conv_spatial(const Var<Real>& x, const Var<Real>& weight,
                       const std::type_identity_t<std::optional<Var<Real>>>& bias, std::size_t stride) {
  const Dims5 in = dims5(x.value());
  const Shape& ws = weight.shape();
  if (ws.size() != 5) throw ShapeError("conv_spatial: weight must be (C_out, C_in, kt, k, k)");
  if (ws[1] != in.c) {
    throw ConfigError("conv_spatial: kernel expects " + std::to_string(ws[1]) + " input channels, got " +
                      std::to_string(in.c));
  }
  if (ws[3] != ws[4] || ws[3] % 2 == 0 || ws[2] % 2 == 0) {
    throw ConfigError("conv_spatial: kernel extents must be odd and square, got " + to_string(ws));
  }
  if (stride == 0) throw ConfigError("conv_spatial: stride must be positive");
  if (bias && (bias->shape() != Shape{ws[0]})) throw ShapeError("conv_spatial: bias must have shape (C_out)");

  ConvGeometry g;
  g.in = in;
  g.cout = ws[0];
  g.kt = ws[2];
  g.k = ws[3];
  g.stride = stride;
  g.pad = (g.k - 1) / 2;
  g.tpad = (g.kt - 1) / 2;
  g.ho = (in.h + stride - 1) / stride;
  g.wo = (in.w + stride - 1) / stride;

  const std::size_t rows = g.rows();
  const std::size_t hw = in.frame_size();
  const std::size_t howo = g.out_frame();
  Tensor<Real> out({in.n, g.cout, in.t, g.ho, g.wo});
  std::vector<Real> col(g.direct() ? 0 : rows * howo);
  const Real* xv = x.value().data();
  const Real* wv = weight.value().data();
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t t = 0; t < in.t; ++t) {
      const Real* bmat = nullptr;
      std::size_t ldb = howo;
      if (g.direct()) {
        bmat = xv + (n * in.c * in.t + t) * hw;
        ldb = in.t * hw;
      } else {
        im2col(xv, g, n, t, col.data());
        bmat = col.data();
      }
      kernels::gemm_nn<Real>(g.cout, howo, rows, wv, rows, bmat, ldb, out.data() + (n * g.cout * in.t + t) * howo,
                             in.t * howo, false);
    }
  }
  if (bias) {
    const Real* bv = bias->value().data();
    const std::size_t block = in.t * howo;
    for (std::size_t n = 0; n < in.n; ++n) {
      for (std::size_t co = 0; co < g.cout; ++co) {
        Real* o = out.data() + (n * g.cout + co) * block;
        for (std::size_t i = 0; i < block; ++i) o[i] += bv[co];
      }
    }
  }

  auto backward = [x, weight, bias, g](const Tensor<Real>& grad) {
    const std::size_t rows = g.rows();
    const std::size_t hw = g.in.frame_size();
    const std::size_t howo = g.out_frame();
    const std::size_t t_count = g.in.t;
    const Real* xv = x.value().data();
    const Real* wv = weight.value().data();
    std::vector<Real> wt;
    if (x.requires_grad()) {
      wt.resize(rows * g.cout);
      for (std::size_t co = 0; co < g.cout; ++co) {
        for (std::size_t r = 0; r < rows; ++r) wt[r * g.cout + co] = wv[co * rows + r];
      }
    }
    Real* gw = weight.requires_grad() ? weight.node()->grad_buffer().data() : nullptr;
    Real* gx = x.requires_grad() ? x.node()->grad_buffer().data() : nullptr;
    std::vector<Real> col(g.direct() ? 0 : rows * howo);
    std::vector<Real> dcol(g.direct() || gx == nullptr ? 0 : rows * howo);
    for (std::size_t n = 0; n < g.in.n; ++n) {
      for (std::size_t t = 0; t < t_count; ++t) {
        const Real* dout = grad.data() + (n * g.cout * t_count + t) * howo;
        const std::size_t ld_out = t_count * howo;
        if (gw != nullptr) {
          const Real* bmat = nullptr;
          std::size_t ldb = howo;
          if (g.direct()) {
            bmat = xv + (n * g.in.c * t_count + t) * hw;
            ldb = t_count * hw;
          } else {
            im2col(xv, g, n, t, col.data());
            bmat = col.data();
          }
          kernels::gemm_nt<Real>(g.cout, rows, howo, dout, ld_out, bmat, ldb, gw, rows, true);
        }
        if (gx != nullptr) {
          if (g.direct()) {
            kernels::gemm_nn<Real>(rows, howo, g.cout, wt.data(), g.cout, dout, ld_out,
                                   gx + (n * g.in.c * t_count + t) * hw, t_count * hw, true);
          } else {
            kernels::gemm_nn<Real>(rows, howo, g.cout, wt.data(), g.cout, dout, ld_out, dcol.data(), howo, false);
            col2im(dcol.data(), g, n, t, gx);
          }
        }
      }
    }
    if (bias && bias->requires_grad()) {
      Real* gb = bias->node()->grad_buffer().data();
      const std::size_t block = t_count * howo;
      for (std::size_t n = 0; n < g.in.n; ++n) {
        for (std::size_t co = 0; co < g.cout; ++co) {
          const Real* src = grad.data() + (n * g.cout + co) * block;
          Real s = 0;
          for (std::size_t i = 0; i < block; ++i) s += src[i];
          gb[co] += s;
        }
      }
    }
  };

  if (bias) return x.graph().record(std::move(out), {x, weight, *bias}, std::move(backward));
  return x.graph().record(std::move(out), {x, weight}, std::move(backward));
}

template <typename Real>
Var<Real> batch_norm(const Var<Real>& x, const Var<Real>& gamma, const Var<Real>& beta, NormStats<Real> stats,
                     const NormOptions<Real>& options) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw ShapeError("batch_norm: input needs a channel axis");
  const std::size_t outer = s[0];
  const std::size_t channels = s[1];
  std::size_t inner = 1;
  for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels}) {
    throw ShapeError("batch_norm: affine parameters must have shape (C)");
  }
  if (stats.running_mean == nullptr || stats.running_var == nullptr) {
    throw ConfigError("batch_norm: running statistics not bound");
  }
  const std::size_t count = outer * inner;
  const bool use_batch = options.mode == NormMode::Train && count > 1;

  std::vector<Real> mean(channels), invstd(channels);
  const Real* xv = x.value().data();
  Real* rm = stats.running_mean->value.data();
  Real* rv = stats.running_var->value.data();
  for (std::size_t c = 0; c < channels; ++c) {
    if (use_batch) {
      double acc = 0;
      for (std::size_t o = 0; o < outer; ++o) {
        const Real* p = xv + (o * channels + c) * inner;
        acc += lane_sum<Real>(inner, [p](std::size_t i) { return p[i]; });
      }
      const double m = acc / static_cast<double>(count);
      const auto mr = static_cast<Real>(m);
      double sq = 0;
      for (std::size_t o = 0; o < outer; ++o) {
        const Real* p = xv + (o * channels + c) * inner;
        sq += lane_sum<Real>(inner, [p, mr](std::size_t i) { return (p[i] - mr) * (p[i] - mr); });
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = mr;
      invstd[c] = static_cast<Real>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = sq / static_cast<double>(count - 1);
      rm[c] = static_cast<Real>((1.0 - options.momentum) * rm[c] + options.momentum * m);
      rv[c] = static_cast<Real>((1.0 - options.momentum) * rv[c] + options.momentum * unbiased);
    } else {
      mean[c] = rm[c];
      invstd[c] = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(rv[c]) + options.eps));
    }
  }

  Tensor<Real> out(s);
  const Real* gv = gamma.value().data();
  const Real* bv = beta.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < channels; ++c) {
      const Real* p = xv + (o * channels + c) * inner;
      Real* q = out.data() + (o * channels + c) * inner;
      const Real a = gv[c] * invstd[c];
      const Real b = bv[c] - a * mean[c];
      for (std::size_t i = 0; i < inner; ++i) q[i] = a * p[i] + b;
    }
  }

  return x.graph().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, mean, invstd, outer, channels, inner, use_batch](const Tensor<Real>& g) {
        const Real* xv = x.value().data();
        const Real* gv = gamma.value().data();
        const Real* gd = g.data();
        Real* dgamma = gamma.requires_grad() ? gamma.node()->grad_buffer().data() : nullptr;
        Real* dbeta = beta.requires_grad() ? beta.node()->grad_buffer().data() : nullptr;
        Real* dx = x.requires_grad() ? x.node()->grad_buffer().data() : nullptr;
        const double m = static_cast<double>(outer * inner);
        for (std::size_t c = 0; c < channels; ++c) {
          const Real mc = mean[c];
          double sum_g = 0, sum_gx = 0;
          for (std::size_t o = 0; o < outer; ++o) {
            const Real* gp = gd + (o * channels + c) * inner;
            const Real* xp = xv + (o * channels + c) * inner;
            sum_g += lane_sum<Real>(inner, [gp](std::size_t i) { return gp[i]; });
            sum_gx += lane_sum<Real>(inner, [gp, xp, mc](std::size_t i) { return gp[i] * (xp[i] - mc); });
          }
          sum_gx *= invstd[c];  // sum of g * xhat
          if (dgamma) dgamma[c] += static_cast<Real>(sum_gx);
          if (dbeta) dbeta[c] += static_cast<Real>(sum_g);
          if (!dx) continue;
          // dx = k1 * g + k2 * (x - mean) + k3
          const double k1 = static_cast<double>(gv[c]) * invstd[c];
          const auto a = static_cast<Real>(k1);
          const auto b = use_batch ? static_cast<Real>(-k1 * invstd[c] * sum_gx / m) : Real(0);
          const auto d = use_batch ? static_cast<Real>(-k1 * sum_g / m) : Real(0);
          for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t off = (o * channels + c) * inner;
            const Real* gp = gd + off;
            const Real* xp = xv + off;
            Real* dp = dx + off;
            for (std::size_t i = 0; i < inner; ++i) dp[i] += a * gp[i] + b * (xp[i] - mc) + d;
          }
        }
      });
}

template <typename Real>
Var<Real> softmax_axis(const Var<Real>& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) throw ShapeError("softmax_axis: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];

  Tensor<Real> out(s);
  const Real* xv = x.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      Real mx = xv[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
      Real total = 0;
      for (std::size_t j = 0; j < len; ++j) {
        const Real e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
    }
  }
  auto node_out = std::make_shared<Tensor<Real>>(out);
  return x.graph().record(std::move(out), {x}, [x, node_out, outer, inner, len](const Tensor<Real>& g) {
    if (!x.requires_grad()) return;
    Real* dx = x.node()->grad_buffer().data();
    const Tensor<Real>& y = *node_out;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        Real dotgy = 0;
        for (std::size_t j = 0; j < len; ++j) dotgy += g[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < len; ++j) {
          dx[base + j * inner] += y[base + j * inner] * (g[base + j * inner] - dotgy);
        }
      }
    }
  });
}

#define GAIT_INSTANTIATE(Real)                                                                                 \
  template Var<Real> add<Real>(const Var<Real>&, const Var<Real>&);                                            \
  template Var<Real> mul<Real>(const Var<Real>&, const Var<Real>&);                                            \
  template Var<Real> scale<Real>(const Var<Real>&, Real);                                                      \
  template Var<Real> relu<Real>(const Var<Real>&);                                                             \
  template Var<Real> reshape<Real>(const Var<Real>&, Shape);                                                   \
  template Var<Real> sum<Real>(const Var<Real>&);                                                              \
  template Var<Real> sum_squares<Real>(const Var<Real>&);                                                      \
  template Var<Real> concat_channels<Real>(const Var<Real>&, const Var<Real>&);                                \
  template Var<Real> slice_channels<Real>(const Var<Real>&, std::size_t, std::size_t);                         \
  template Var<Real> conv_spatial<Real>(const Var<Real>&, const Var<Real>&,                                   \
                                        const std::type_identity_t<std::optional<Var<Real>>>&, std::size_t);  \
  template Var<Real> batch_norm<Real>(const Var<Real>&, const Var<Real>&, const Var<Real>&, NormStats<Real>,   \
                                      const NormOptions<Real>&);                                               \
  template Var<Real> softmax_axis<Real>(const Var<Real>&, std::size_t);

GAIT_INSTANTIATE(float)
GAIT_INSTANTIATE(double)
#undef GAIT_INSTANTIATE

}  // namespace gait
