#include "symbiotic/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symbiotic/errors.hpp"

namespace symbiotic {

namespace {

// Flat-index divisor T such that b's element for a's index i sits at i / T.
// Broadcast rule: b matches a on a leading prefix and all remaining axes of
// b are 1 ("a trailing axis of size 1 stretches"). A single-element b is
// treated as a scalar.
std::size_t broadcast_divisor(const Shape& a, const Shape& b) {
  if (a == b) return 1;
  std::size_t bn = shape_numel(b);
  if (bn == 1) return shape_numel(a);
  if (a.size() != b.size()) {
    throw ShapeError("elementwise rank mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  std::size_t k = 0;
  while (k < a.size() && a[k] == b[k]) ++k;
  for (std::size_t j = k; j < b.size(); ++j) {
    if (b[j] != 1) {
      throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcast-compatible");
    }
  }
  std::size_t t = 1;
  for (std::size_t j = k; j < a.size(); ++j) t *= a[j];
  return t;
}

enum class EwKind { Add, Sub, Mul };

Tensor elementwise(Graph* g, EwKind kind, const Tensor& a, const Tensor& b) {
  std::size_t t = broadcast_divisor(a.shape(), b.shape());
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  std::size_t n = a.size();
  switch (kind) {
    case EwKind::Add:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i / t];
      break;
    case EwKind::Sub:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i / t];
      break;
    case EwKind::Mul:
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i / t];
      break;
  }
  if (g) {
    out.mark_graph_output();
    g->record([kind, a, b, out, t]() mutable {
      const double* go = out.grad();
      std::size_t n = a.size();
      if (wants_grad(a)) {
        double* da = a.grad();
        if (kind == EwKind::Mul) {
          const double* pb = b.data();
          for (std::size_t i = 0; i < n; ++i) da[i] += go[i] * pb[i / t];
        } else {
          for (std::size_t i = 0; i < n; ++i) da[i] += go[i];
        }
      }
      if (wants_grad(b)) {
        double* db = b.grad();
        const double* pa = a.data();
        switch (kind) {
          case EwKind::Add:
            for (std::size_t i = 0; i < n; ++i) db[i / t] += go[i];
            break;
          case EwKind::Sub:
            for (std::size_t i = 0; i < n; ++i) db[i / t] -= go[i];
            break;
          case EwKind::Mul:
            for (std::size_t i = 0; i < n; ++i) db[i / t] += go[i] * pa[i];
            break;
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(Graph* g, const Tensor& a, const Tensor& b) {
  return elementwise(g, EwKind::Add, a, b);
}

Tensor sub(Graph* g, const Tensor& a, const Tensor& b) {
  return elementwise(g, EwKind::Sub, a, b);
}

Tensor mul(Graph* g, const Tensor& a, const Tensor& b) {
  return elementwise(g, EwKind::Mul, a, b);
}

Tensor add_scalar(Graph* g, const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c;
  if (g) {
    out.mark_graph_output();
    g->record([a, out]() mutable {
      if (!wants_grad(a)) return;
      const double* go = out.grad();
      double* da = a.grad();
      for (std::size_t i = 0; i < a.size(); ++i) da[i] += go[i];
    });
  }
  return out;
}

Tensor mul_scalar(Graph* g, const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  if (g) {
    out.mark_graph_output();
    g->record([a, out, c]() mutable {
      if (!wants_grad(a)) return;
      const double* go = out.grad();
      double* da = a.grad();
      for (std::size_t i = 0; i < a.size(); ++i) da[i] += go[i] * c;
    });
  }
  return out;
}

Tensor matmul(Graph* g, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul expects rank-2 operands, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  std::size_t m = a.shape()[0], k = a.shape()[1];
  std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw ShapeError("matmul inner dimensions " + std::to_string(k) + " vs " +
                     std::to_string(k2));
  }
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = pa[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = pb + kk * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([a, b, out, m, k, n]() mutable {
      const double* go = out.grad();
      if (wants_grad(a)) {
        double* da = a.grad();
        const double* pb = b.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
              acc += go[i * n + j] * pb[kk * n + j];
            da[i * k + kk] += acc;
          }
      }
      if (wants_grad(b)) {
        double* db = b.grad();
        const double* pa = a.data();
        for (std::size_t kk = 0; kk < k; ++kk)
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i)
              acc += pa[i * k + kk] * go[i * n + j];
            db[kk * n + j] += acc;
          }
      }
    });
  }
  return out;
}

Tensor linear(Graph* g, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2) {
    throw ShapeError("linear expects rank-2 input and weight");
  }
  std::size_t m = x.shape()[0], k = x.shape()[1];
  std::size_t n = w.shape()[0];
  if (w.shape()[1] != k) {
    throw ShapeError("linear weight " + shape_str(w.shape()) +
                     " does not match input " + shape_str(x.shape()));
  }
  bool has_bias = b.defined();
  if (has_bias && b.size() != n) throw ShapeError("linear bias length mismatch");
  Tensor out = Tensor::zeros({m, n});
  const double* px = x.data();
  const double* pw = w.data();
  double* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = has_bias ? b[j] : 0.0;
      const double* xrow = px + i * k;
      const double* wrow = pw + j * k;
      for (std::size_t kk = 0; kk < k; ++kk) acc += xrow[kk] * wrow[kk];
      po[i * n + j] = acc;
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, w, b, out, m, k, n, has_bias]() mutable {
      const double* go = out.grad();
      if (wants_grad(x)) {
        double* dx = x.grad();
        const double* pw = w.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double gv = go[i * n + j];
            if (gv == 0.0) continue;
            for (std::size_t kk = 0; kk < k; ++kk)
              dx[i * k + kk] += gv * pw[j * k + kk];
          }
      }
      if (wants_grad(w)) {
        double* dw = w.grad();
        const double* px = x.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double gv = go[i * n + j];
            if (gv == 0.0) continue;
            for (std::size_t kk = 0; kk < k; ++kk)
              dw[j * k + kk] += gv * px[i * k + kk];
          }
      }
      if (has_bias && wants_grad(b)) {
        double* db = b.grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) db[j] += go[i * n + j];
      }
    });
  }
  return out;
}

namespace {

enum class RKind { Sum, Mean, Max };

Tensor reduce(Graph* g, RKind kind, const Tensor& x,
              const std::vector<std::size_t>& axes) {
  const Shape& shape = x.shape();
  std::vector<bool> reduced(shape.size(), false);
  for (std::size_t ax : axes) {
    if (ax >= shape.size()) {
      throw ShapeError("reduction axis " + std::to_string(ax) +
                       " out of range for " + shape_str(shape));
    }
    reduced[ax] = true;
  }
  if (axes.empty()) {
    // identity copy, gradient passes through
    Tensor out = Tensor::from_data(shape, x.values());
    if (g) {
      out.mark_graph_output();
      g->record([x, out]() mutable {
        if (!wants_grad(x)) return;
        const double* go = out.grad();
        double* dx = x.grad();
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] += go[i];
      });
    }
    return out;
  }

  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (reduced[i]) {
      count *= shape[i];
    } else {
      out_shape.push_back(shape[i]);
    }
  }

  // per-input-axis contribution to the output flat index (0 when reduced)
  std::vector<std::size_t> out_stride(shape.size(), 0);
  {
    std::size_t stride = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
      if (!reduced[i]) {
        out_stride[i] = stride;
        stride *= shape[i];
      }
    }
  }

  std::size_t out_n = shape_numel(out_shape);
  Tensor out = kind == RKind::Max
                   ? Tensor::full(out_shape, -std::numeric_limits<double>::infinity())
                   : Tensor::zeros(out_shape);
  auto arg = std::make_shared<std::vector<std::size_t>>();
  if (kind == RKind::Max) arg->assign(out_n, 0);

  const double* px = x.data();
  double* po = out.data();
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t oi = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) oi += idx[d] * out_stride[d];
    if (kind == RKind::Max) {
      if (px[i] > po[oi]) {
        po[oi] = px[i];
        (*arg)[oi] = i;
      }
    } else {
      po[oi] += px[i];
    }
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  if (kind == RKind::Mean) {
    for (std::size_t i = 0; i < out_n; ++i) po[i] /= static_cast<double>(count);
  }

  if (g) {
    out.mark_graph_output();
    g->record([kind, x, out, out_stride, count, arg]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      if (kind == RKind::Max) {
        for (std::size_t oi = 0; oi < out.size(); ++oi) dx[(*arg)[oi]] += go[oi];
        return;
      }
      const Shape& shape = x.shape();
      double inv = kind == RKind::Mean ? 1.0 / static_cast<double>(count) : 1.0;
      std::vector<std::size_t> idx(shape.size(), 0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t oi = 0;
        for (std::size_t d = 0; d < shape.size(); ++d) oi += idx[d] * out_stride[d];
        dx[i] += go[oi] * inv;
        for (std::size_t d = shape.size(); d-- > 0;) {
          if (++idx[d] < shape[d]) break;
          idx[d] = 0;
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor reduce_sum(Graph* g, const Tensor& x, const std::vector<std::size_t>& axes) {
  return reduce(g, RKind::Sum, x, axes);
}

Tensor reduce_mean(Graph* g, const Tensor& x, const std::vector<std::size_t>& axes) {
  return reduce(g, RKind::Mean, x, axes);
}

Tensor reduce_max(Graph* g, const Tensor& x, const std::vector<std::size_t>& axes) {
  return reduce(g, RKind::Max, x, axes);
}

Tensor softmax(Graph* g, const Tensor& x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    throw ShapeError("softmax axis " + std::to_string(axis) + " out of range for " +
                     shape_str(shape));
  }
  std::size_t outer = 1, inner = 1, n = shape[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];

  Tensor out = Tensor::zeros(shape);
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t t = 0; t < inner; ++t) {
      std::size_t base = o * n * inner + t;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, px[base + j * inner]);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double e = std::exp(px[base + j * inner] - mx);
        po[base + j * inner] = e;
        sum += e;
      }
      for (std::size_t j = 0; j < n; ++j) po[base + j * inner] /= sum;
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, outer, inner, n]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      const double* py = out.data();
      double* dx = x.grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t t = 0; t < inner; ++t) {
          std::size_t base = o * n * inner + t;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            dot += go[base + j * inner] * py[base + j * inner];
          for (std::size_t j = 0; j < n; ++j)
            dx[base + j * inner] +=
                py[base + j * inner] * (go[base + j * inner] - dot);
        }
      }
    });
  }
  return out;
}

Tensor relu(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (g) {
    out.mark_graph_output();
    g->record([x, out]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) dx[i] += go[i];
    });
  }
  return out;
}

Tensor sigmoid(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      const double* py = out.data();
      double* dx = x.grad();
      for (std::size_t i = 0; i < x.size(); ++i)
        dx[i] += go[i] * py[i] * (1.0 - py[i]);
    });
  }
  return out;
}

Tensor reshape(Graph* g, const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.size()) {
    throw ShapeError("reshape " + shape_str(x.shape()) + " -> " +
                     shape_str(new_shape) + " changes element count");
  }
  Tensor out = Tensor::from_data(std::move(new_shape), x.values());
  if (g) {
    out.mark_graph_output();
    g->record([x, out]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] += go[i];
    });
  }
  return out;
}

Tensor concat_channels(Graph* g, const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels of nothing");
  for (const Tensor& x : xs) {
    if (x.rank() != 4) throw ShapeError("concat_channels expects 4-D tensors");
  }
  std::size_t b = xs[0].shape()[0], h = xs[0].shape()[2], w = xs[0].shape()[3];
  std::size_t c_total = 0;
  for (const Tensor& x : xs) {
    if (x.shape()[0] != b || x.shape()[2] != h || x.shape()[3] != w) {
      throw ShapeError("concat_channels operand " + shape_str(x.shape()) +
                       " mismatches " + shape_str(xs[0].shape()));
    }
    c_total += x.shape()[1];
  }
  Tensor out = Tensor::zeros({b, c_total, h, w});
  std::size_t hw = h * w;
  std::size_t c_off = 0;
  for (const Tensor& x : xs) {
    std::size_t c = x.shape()[1];
    for (std::size_t bi = 0; bi < b; ++bi) {
      const double* src = x.data() + bi * c * hw;
      double* dst = out.data() + (bi * c_total + c_off) * hw;
      std::copy(src, src + c * hw, dst);
    }
    c_off += c;
  }
  if (g) {
    out.mark_graph_output();
    g->record([xs, out, b, c_total, hw]() mutable {
      const double* go = out.grad();
      std::size_t c_off = 0;
      for (const Tensor& x : xs) {
        std::size_t c = x.shape()[1];
        if (wants_grad(x)) {
          double* dx = x.grad();
          for (std::size_t bi = 0; bi < b; ++bi) {
            const double* gsrc = go + (bi * c_total + c_off) * hw;
            double* gdst = dx + bi * c * hw;
            for (std::size_t i = 0; i < c * hw; ++i) gdst[i] += gsrc[i];
          }
        }
        c_off += c;
      }
    });
  }
  return out;
}

Tensor tile_spatial(Graph* g, const Tensor& x, std::size_t h, std::size_t w) {
  if (x.rank() != 2) throw ShapeError("tile_spatial expects a [B x C] tensor");
  std::size_t b = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros({b, c, h, w});
  std::size_t hw = h * w;
  for (std::size_t i = 0; i < b * c; ++i) {
    double v = x[i];
    double* dst = out.data() + i * hw;
    for (std::size_t t = 0; t < hw; ++t) dst[t] = v;
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, hw]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t i = 0; i < x.size(); ++i) {
        double acc = 0.0;
        const double* src = go + i * hw;
        for (std::size_t t = 0; t < hw; ++t) acc += src[t];
        dx[i] += acc;
      }
    });
  }
  return out;
}

Tensor l2norm_scale(Graph* g, const Tensor& x, const Tensor& scale, double eps) {
  if (x.rank() != 4) throw ShapeError("l2norm_scale expects a 4-D tensor");
  if (scale.size() != 1) throw ShapeError("l2norm_scale scale must be a scalar");
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  std::size_t hw = h * w;
  Tensor out = Tensor::zeros(x.shape());
  double s = scale[0];
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t p = 0; p < hw; ++p) {
      std::size_t base = bi * c * hw + p;
      double r2 = 0.0;
      for (std::size_t ci = 0; ci < c; ++ci) {
        double v = px[base + ci * hw];
        r2 += v * v;
      }
      double denom = std::max(std::sqrt(r2), eps);
      for (std::size_t ci = 0; ci < c; ++ci)
        po[base + ci * hw] = s * px[base + ci * hw] / denom;
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, scale, out, b, c, hw, eps]() mutable {
      const double* go = out.grad();
      const double* px = x.data();
      double s = scale[0];
      double* dx = wants_grad(x) ? x.grad() : nullptr;
      double* ds = wants_grad(scale) ? scale.grad() : nullptr;
      for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t p = 0; p < hw; ++p) {
          std::size_t base = bi * c * hw + p;
          double r2 = 0.0, dot = 0.0;
          for (std::size_t ci = 0; ci < c; ++ci) {
            double v = px[base + ci * hw];
            r2 += v * v;
            dot += go[base + ci * hw] * v;
          }
          double r = std::sqrt(r2);
          double denom = std::max(r, eps);
          if (ds) *ds += dot / denom;
          if (dx) {
            if (r > eps) {
              double k = dot / (r2 * r);
              for (std::size_t ci = 0; ci < c; ++ci)
                dx[base + ci * hw] +=
                    s * (go[base + ci * hw] / r - px[base + ci * hw] * k);
            } else {
              for (std::size_t ci = 0; ci < c; ++ci)
                dx[base + ci * hw] += s * go[base + ci * hw] / eps;
            }
          }
        }
      }
    });
  }
  return out;
}

namespace {

struct LerpAxis {
  std::vector<std::size_t> i0, i1;
  std::vector<double> w1;  // weight of i1; i0 gets 1 - w1
};

LerpAxis corner_anchored_axis(std::size_t in, std::size_t out) {
  LerpAxis ax;
  ax.i0.resize(out);
  ax.i1.resize(out);
  ax.w1.resize(out);
  double scale = (out > 1 && in > 1)
                     ? static_cast<double>(in - 1) / static_cast<double>(out - 1)
                     : 0.0;
  for (std::size_t i = 0; i < out; ++i) {
    double f = static_cast<double>(i) * scale;
    std::size_t lo = static_cast<std::size_t>(f);
    if (lo >= in - 1) lo = in - 1;
    std::size_t hi = std::min(lo + 1, in - 1);
    ax.i0[i] = lo;
    ax.i1[i] = hi;
    ax.w1[i] = f - static_cast<double>(lo);
  }
  return ax;
}

}  // namespace

Tensor upsample_bilinear(Graph* g, const Tensor& x, std::size_t out_h,
                         std::size_t out_w) {
  if (x.rank() != 4) throw ShapeError("upsample_bilinear expects a 4-D tensor");
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  LerpAxis ay = corner_anchored_axis(h, out_h);
  LerpAxis axn = corner_anchored_axis(w, out_w);
  Tensor out = Tensor::zeros({b, c, out_h, out_w});
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t bc = 0; bc < b * c; ++bc) {
    const double* plane = px + bc * h * w;
    double* oplane = po + bc * out_h * out_w;
    for (std::size_t i = 0; i < out_h; ++i) {
      double wy = ay.w1[i];
      const double* r0 = plane + ay.i0[i] * w;
      const double* r1 = plane + ay.i1[i] * w;
      for (std::size_t j = 0; j < out_w; ++j) {
        double wx = axn.w1[j];
        double top = (1.0 - wx) * r0[axn.i0[j]] + wx * r0[axn.i1[j]];
        double bot = (1.0 - wx) * r1[axn.i0[j]] + wx * r1[axn.i1[j]];
        oplane[i * out_w + j] = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, ay, axn, b, c, h, w, out_h, out_w]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t bc = 0; bc < b * c; ++bc) {
        double* dplane = dx + bc * h * w;
        const double* gplane = go + bc * out_h * out_w;
        for (std::size_t i = 0; i < out_h; ++i) {
          double wy = ay.w1[i];
          for (std::size_t j = 0; j < out_w; ++j) {
            double wx = axn.w1[j];
            double gv = gplane[i * out_w + j];
            dplane[ay.i0[i] * w + axn.i0[j]] += gv * (1.0 - wy) * (1.0 - wx);
            dplane[ay.i0[i] * w + axn.i1[j]] += gv * (1.0 - wy) * wx;
            dplane[ay.i1[i] * w + axn.i0[j]] += gv * wy * (1.0 - wx);
            dplane[ay.i1[i] * w + axn.i1[j]] += gv * wy * wx;
          }
        }
      }
    });
  }
  return out;
}

Tensor nn_resize(Graph* g, const Tensor& x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() != 4) throw ShapeError("nn_resize expects a 4-D tensor");
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (h == out_h && w == out_w) {
    // exact passthrough keeps one-hot masks pristine
    Tensor out = Tensor::from_data(x.shape(), x.values());
    if (g) {
      out.mark_graph_output();
      g->record([x, out]() mutable {
        if (!wants_grad(x)) return;
        const double* go = out.grad();
        double* dx = x.grad();
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] += go[i];
      });
    }
    return out;
  }
  std::vector<std::size_t> ry(out_h), rx(out_w);
  for (std::size_t i = 0; i < out_h; ++i)
    ry[i] = std::min(h - 1, ((2 * i + 1) * h) / (2 * out_h));
  for (std::size_t j = 0; j < out_w; ++j)
    rx[j] = std::min(w - 1, ((2 * j + 1) * w) / (2 * out_w));
  Tensor out = Tensor::zeros({b, c, out_h, out_w});
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t bc = 0; bc < b * c; ++bc) {
    const double* plane = px + bc * h * w;
    double* oplane = po + bc * out_h * out_w;
    for (std::size_t i = 0; i < out_h; ++i)
      for (std::size_t j = 0; j < out_w; ++j)
        oplane[i * out_w + j] = plane[ry[i] * w + rx[j]];
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, ry, rx, b, c, h, w, out_h, out_w]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t bc = 0; bc < b * c; ++bc) {
        double* dplane = dx + bc * h * w;
        const double* gplane = go + bc * out_h * out_w;
        for (std::size_t i = 0; i < out_h; ++i)
          for (std::size_t j = 0; j < out_w; ++j)
            dplane[ry[i] * w + rx[j]] += gplane[i * out_w + j];
      }
    });
  }
  return out;
}

}  // namespace symbiotic
