#include "symbiotic/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "symbiotic/errors.hpp"

namespace symbiotic {

Tensor conv2d(Graph* g, const Tensor& x, const Conv2dParams& p) {
  if (x.rank() != 4) throw ShapeError("conv2d expects a 4-D input");
  if (p.weight.rank() != 4) throw ShapeError("conv2d weight must be 4-D");
  std::size_t b = x.shape()[0], cin = x.shape()[1], h = x.shape()[2],
              w = x.shape()[3];
  std::size_t cout = p.out_channels(), k = p.kernel();
  if (p.in_channels() != cin) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(cin) +
                     ", weight expects " + std::to_string(p.in_channels()));
  }
  if (p.weight.shape()[3] != k) throw ShapeError("conv2d kernel must be square");
  std::size_t s = p.stride, pad = p.padding;
  if (h + 2 * pad < k || w + 2 * pad < k) {
    throw ShapeError("conv2d kernel larger than padded input");
  }
  std::size_t oh = (h + 2 * pad - k) / s + 1;
  std::size_t ow = (w + 2 * pad - k) / s + 1;
  bool has_bias = p.bias.defined();
  if (has_bias && p.bias.size() != cout) throw ShapeError("conv2d bias mismatch");

  Tensor out = Tensor::zeros({b, cout, oh, ow});
  const double* px = x.data();
  const double* pw = p.weight.data();
  double* po = out.data();

  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
      double* oplane = po + (bi * cout + oc) * oh * ow;
      if (has_bias) {
        double bv = p.bias[oc];
        for (std::size_t i = 0; i < oh * ow; ++i) oplane[i] = bv;
      }
      for (std::size_t ic = 0; ic < cin; ++ic) {
        const double* xplane = px + (bi * cin + ic) * h * w;
        const double* wk = pw + (oc * cin + ic) * k * k;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            double wv = wk[ky * k + kx];
            if (wv == 0.0) continue;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) -
                                  static_cast<std::ptrdiff_t>(pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              const double* xrow = xplane + iy * w;
              double* orow = oplane + oy * ow;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) -
                                    static_cast<std::ptrdiff_t>(pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                orow[ox] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
  }

  if (g) {
    out.mark_graph_output();
    Tensor weight = p.weight;
    Tensor bias = p.bias;
    g->record([x, weight, bias, out, b, cin, cout, h, w, k, s, pad, oh, ow,
               has_bias]() mutable {
      const double* go = out.grad();
      const double* px = x.data();
      const double* pw = weight.data();
      bool want_x = wants_grad(x);
      bool want_w = wants_grad(weight);
      double* dx = want_x ? x.grad() : nullptr;
      double* dw = want_w ? weight.grad() : nullptr;
      if (want_x || want_w) {
        for (std::size_t bi = 0; bi < b; ++bi) {
          for (std::size_t oc = 0; oc < cout; ++oc) {
            const double* gplane = go + (bi * cout + oc) * oh * ow;
            for (std::size_t ic = 0; ic < cin; ++ic) {
              const double* xplane = px + (bi * cin + ic) * h * w;
              const double* wk = pw + (oc * cin + ic) * k * k;
              double* dxplane = want_x ? dx + (bi * cin + ic) * h * w : nullptr;
              double* dwk = want_w ? dw + (oc * cin + ic) * k * k : nullptr;
              for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                  double wv = wk[ky * k + kx];
                  double wacc = 0.0;
                  for (std::size_t oy = 0; oy < oh; ++oy) {
                    std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) -
                                        static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    const double* grow = gplane + oy * ow;
                    const double* xrow = xplane + iy * w;
                    double* dxrow = want_x ? dxplane + iy * w : nullptr;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                      std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) -
                                          static_cast<std::ptrdiff_t>(pad);
                      if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                      double gv = grow[ox];
                      if (want_x) dxrow[ix] += gv * wv;
                      if (want_w) wacc += gv * xrow[ix];
                    }
                  }
                  if (want_w) dwk[ky * k + kx] += wacc;
                }
              }
            }
          }
        }
      }
      if (has_bias && wants_grad(bias)) {
        double* db = bias.grad();
        for (std::size_t bi = 0; bi < b; ++bi)
          for (std::size_t oc = 0; oc < cout; ++oc) {
            const double* gplane = go + (bi * cout + oc) * oh * ow;
            double acc = 0.0;
            for (std::size_t i = 0; i < oh * ow; ++i) acc += gplane[i];
            db[oc] += acc;
          }
      }
    });
  }
  return out;
}

BatchNormParams BatchNormParams::make(std::size_t channels, double momentum,
                                      double eps) {
  BatchNormParams p;
  p.gamma = Tensor::full({channels}, 1.0);
  p.beta = Tensor::zeros({channels});
  p.running_mean = Tensor::zeros({channels});
  p.running_var = Tensor::full({channels}, 1.0);
  p.momentum = momentum;
  p.eps = eps;
  return p;
}

Tensor batchnorm2d(Graph* g, const Tensor& x, BatchNormParams& p) {
  if (x.rank() != 4) throw ShapeError("batchnorm2d expects a 4-D input");
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (p.channels() != c) {
    throw ShapeError("batchnorm2d has " + std::to_string(p.channels()) +
                     " channels, input has " + std::to_string(c));
  }
  std::size_t n = b * h * w;
  std::size_t hw = h * w;
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data();
  double* po = out.data();

  if (p.training_mode) {
    if (n < 2) {
      throw DegenerateBatchError("batchnorm2d needs B*H*W >= 2 in training mode");
    }
    auto mean = std::make_shared<std::vector<double>>(c, 0.0);
    auto var = std::make_shared<std::vector<double>>(c, 0.0);
    for (std::size_t ci = 0; ci < c; ++ci) {
      double m = 0.0;
      for (std::size_t bi = 0; bi < b; ++bi) {
        const double* plane = px + (bi * c + ci) * hw;
        for (std::size_t i = 0; i < hw; ++i) m += plane[i];
      }
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t bi = 0; bi < b; ++bi) {
        const double* plane = px + (bi * c + ci) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          double d = plane[i] - m;
          v += d * d;
        }
      }
      v /= static_cast<double>(n);  // biased estimator
      (*mean)[ci] = m;
      (*var)[ci] = v;
      double inv = 1.0 / std::sqrt(v + p.eps);
      double gam = p.gamma[ci], bet = p.beta[ci];
      for (std::size_t bi = 0; bi < b; ++bi) {
        const double* plane = px + (bi * c + ci) * hw;
        double* oplane = po + (bi * c + ci) * hw;
        for (std::size_t i = 0; i < hw; ++i)
          oplane[i] = gam * (plane[i] - m) * inv + bet;
      }
      p.running_mean[ci] = (1.0 - p.momentum) * p.running_mean[ci] + p.momentum * m;
      p.running_var[ci] = (1.0 - p.momentum) * p.running_var[ci] + p.momentum * v;
    }
    if (g) {
      out.mark_graph_output();
      Tensor gamma = p.gamma, beta = p.beta;
      double eps = p.eps;
      g->record([x, gamma, beta, out, mean, var, b, c, hw, n, eps]() mutable {
        const double* go = out.grad();
        const double* px = x.data();
        bool want_x = wants_grad(x);
        double* dx = want_x ? x.grad() : nullptr;
        double* dgamma = wants_grad(gamma) ? gamma.grad() : nullptr;
        double* dbeta = wants_grad(beta) ? beta.grad() : nullptr;
        for (std::size_t ci = 0; ci < c; ++ci) {
          double m = (*mean)[ci];
          double inv = 1.0 / std::sqrt((*var)[ci] + eps);
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t bi = 0; bi < b; ++bi) {
            const double* gplane = go + (bi * c + ci) * hw;
            const double* plane = px + (bi * c + ci) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_g += gplane[i];
              sum_gx += gplane[i] * (plane[i] - m) * inv;
            }
          }
          if (dgamma) dgamma[ci] += sum_gx;
          if (dbeta) dbeta[ci] += sum_g;
          if (want_x) {
            double gam = gamma[ci];
            double mg = sum_g / static_cast<double>(n);
            double mgx = sum_gx / static_cast<double>(n);
            for (std::size_t bi = 0; bi < b; ++bi) {
              const double* gplane = go + (bi * c + ci) * hw;
              const double* plane = px + (bi * c + ci) * hw;
              double* dplane = dx + (bi * c + ci) * hw;
              for (std::size_t i = 0; i < hw; ++i) {
                double xhat = (plane[i] - m) * inv;
                dplane[i] += gam * inv * (gplane[i] - mg - xhat * mgx);
              }
            }
          }
        }
      });
    }
  } else {
    for (std::size_t ci = 0; ci < c; ++ci) {
      double inv = 1.0 / std::sqrt(p.running_var[ci] + p.eps);
      double gam = p.gamma[ci], bet = p.beta[ci], m = p.running_mean[ci];
      for (std::size_t bi = 0; bi < b; ++bi) {
        const double* plane = px + (bi * c + ci) * hw;
        double* oplane = po + (bi * c + ci) * hw;
        for (std::size_t i = 0; i < hw; ++i)
          oplane[i] = gam * (plane[i] - m) * inv + bet;
      }
    }
    if (g) {
      out.mark_graph_output();
      Tensor gamma = p.gamma, beta = p.beta;
      Tensor rmean = p.running_mean, rvar = p.running_var;
      double eps = p.eps;
      g->record([x, gamma, beta, rmean, rvar, out, b, c, hw, eps]() mutable {
        const double* go = out.grad();
        const double* px = x.data();
        bool want_x = wants_grad(x);
        double* dx = want_x ? x.grad() : nullptr;
        double* dgamma = wants_grad(gamma) ? gamma.grad() : nullptr;
        double* dbeta = wants_grad(beta) ? beta.grad() : nullptr;
        for (std::size_t ci = 0; ci < c; ++ci) {
          double inv = 1.0 / std::sqrt(rvar[ci] + eps);
          double gam = gamma[ci], m = rmean[ci];
          for (std::size_t bi = 0; bi < b; ++bi) {
            const double* gplane = go + (bi * c + ci) * hw;
            const double* plane = px + (bi * c + ci) * hw;
            double* dplane = want_x ? dx + (bi * c + ci) * hw : nullptr;
            for (std::size_t i = 0; i < hw; ++i) {
              if (dplane) dplane[i] += gplane[i] * gam * inv;
              if (dgamma) dgamma[ci] += gplane[i] * (plane[i] - m) * inv;
              if (dbeta) dbeta[ci] += gplane[i];
            }
          }
        }
      });
    }
  }
  return out;
}

Tensor maxpool2d(Graph* g, const Tensor& x, std::size_t k, std::size_t stride) {
  if (x.rank() != 4) throw ShapeError("maxpool2d expects a 4-D input");
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (k == 0 || stride == 0) throw ShapeError("maxpool2d needs positive k, stride");
  if (k > h || k > w) throw ShapeError("maxpool2d window larger than input");
  std::size_t oh = (h - k) / stride + 1;
  std::size_t ow = (w - k) / stride + 1;
  Tensor out = Tensor::zeros({b, c, oh, ow});
  auto arg = std::make_shared<std::vector<std::size_t>>(out.size(), 0);
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t bc = 0; bc < b * c; ++bc) {
    const double* plane = px + bc * h * w;
    double* oplane = po + bc * oh * ow;
    std::size_t* aplane = arg->data() + bc * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t besti = 0;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const double* row = plane + (oy * stride + ky) * w + ox * stride;
          for (std::size_t kx = 0; kx < k; ++kx) {
            if (row[kx] > best) {
              best = row[kx];
              besti = bc * h * w + (oy * stride + ky) * w + ox * stride + kx;
            }
          }
        }
        oplane[oy * ow + ox] = best;
        aplane[oy * ow + ox] = besti;
      }
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, arg]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t i = 0; i < out.size(); ++i) dx[(*arg)[i]] += go[i];
    });
  }
  return out;
}

Tensor global_avg_pool(Graph* g, const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool expects a 4-D input");
  std::size_t b = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  Tensor out = Tensor::zeros({b, c});
  const double* px = x.data();
  for (std::size_t i = 0; i < b * c; ++i) {
    const double* plane = px + i * hw;
    double acc = 0.0;
    for (std::size_t t = 0; t < hw; ++t) acc += plane[t];
    out[i] = acc / static_cast<double>(hw);
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, hw]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      double* dx = x.grad();
      double inv = 1.0 / static_cast<double>(hw);
      for (std::size_t i = 0; i < out.size(); ++i) {
        double gv = go[i] * inv;
        double* plane = dx + i * hw;
        for (std::size_t t = 0; t < hw; ++t) plane[t] += gv;
      }
    });
  }
  return out;
}

Tensor spp_pool(Graph* g, const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("spp_pool expects a 4-D input");
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (h < 2 || w < 2) throw ShapeError("spp_pool needs H, W >= 2");
  std::size_t ys[3] = {0, h / 2, h};
  std::size_t xs[3] = {0, w / 2, w};
  Tensor out = Tensor::zeros({b, c * 5});
  const double* px = x.data();
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const double* plane = px + (bi * c + ci) * h * w;
      double* slot = out.data() + bi * c * 5 + ci * 5;
      double total = 0.0;
      for (std::size_t i = 0; i < h * w; ++i) total += plane[i];
      slot[0] = total / static_cast<double>(h * w);
      std::size_t cell = 1;
      for (std::size_t gy = 0; gy < 2; ++gy) {
        for (std::size_t gx = 0; gx < 2; ++gx, ++cell) {
          double acc = 0.0;
          std::size_t cnt = (ys[gy + 1] - ys[gy]) * (xs[gx + 1] - xs[gx]);
          for (std::size_t y = ys[gy]; y < ys[gy + 1]; ++y)
            for (std::size_t xx = xs[gx]; xx < xs[gx + 1]; ++xx)
              acc += plane[y * w + xx];
          slot[cell] = acc / static_cast<double>(cnt);
        }
      }
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, b, c, h, w]() mutable {
      if (!wants_grad(x)) return;
      std::size_t ys[3] = {0, h / 2, h};
      std::size_t xs[3] = {0, w / 2, w};
      const double* go = out.grad();
      double* dx = x.grad();
      for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t ci = 0; ci < c; ++ci) {
          double* dplane = dx + (bi * c + ci) * h * w;
          const double* gslot = go + bi * c * 5 + ci * 5;
          double gv = gslot[0] / static_cast<double>(h * w);
          for (std::size_t i = 0; i < h * w; ++i) dplane[i] += gv;
          std::size_t cell = 1;
          for (std::size_t gy = 0; gy < 2; ++gy) {
            for (std::size_t gx = 0; gx < 2; ++gx, ++cell) {
              std::size_t cnt = (ys[gy + 1] - ys[gy]) * (xs[gx + 1] - xs[gx]);
              double cg = gslot[cell] / static_cast<double>(cnt);
              for (std::size_t y = ys[gy]; y < ys[gy + 1]; ++y)
                for (std::size_t xx = xs[gx]; xx < xs[gx + 1]; ++xx)
                  dplane[y * w + xx] += cg;
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor seg_loss(Graph* g, const Tensor& logits, const LabelMap& labels) {
  if (logits.rank() != 4) throw ShapeError("seg_loss expects 4-D logits");
  std::size_t b = logits.shape()[0], ns = logits.shape()[1], h = logits.shape()[2],
              w = logits.shape()[3];
  if (labels.batch != b || labels.h != h || labels.w != w) {
    throw ShapeError("seg_loss label map does not match logits");
  }
  std::size_t hw = h * w;
  const double* pl = logits.data();
  // cache per-pixel softmax for the backward pass
  auto probs = std::make_shared<std::vector<double>>(logits.size(), 0.0);
  std::size_t used = 0;
  double total = 0.0;
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t p = 0; p < hw; ++p) {
      std::uint8_t lab = labels.labels[bi * hw + p];
      if (lab == LabelMap::kIgnore) continue;
      if (lab >= ns) {
        throw LabelRangeError("segmentation label " + std::to_string(lab) +
                              " >= " + std::to_string(ns));
      }
      std::size_t base = bi * ns * hw + p;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < ns; ++s) mx = std::max(mx, pl[base + s * hw]);
      double sum = 0.0;
      for (std::size_t s = 0; s < ns; ++s) sum += std::exp(pl[base + s * hw] - mx);
      double logz = mx + std::log(sum);
      total += logz - pl[base + lab * hw];
      for (std::size_t s = 0; s < ns; ++s)
        (*probs)[base + s * hw] = std::exp(pl[base + s * hw] - logz);
      ++used;
    }
  }
  if (used == 0) throw EmptyLossError("seg_loss: all pixels ignored");
  Tensor out = Tensor::scalar(total / static_cast<double>(used));
  if (g) {
    out.mark_graph_output();
    LabelMap labs = labels;
    g->record([logits, labs, out, probs, b, ns, hw, used]() mutable {
      if (!wants_grad(logits)) return;
      double gv = out.grad()[0] / static_cast<double>(used);
      double* dl = logits.grad();
      for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t p = 0; p < hw; ++p) {
          std::uint8_t lab = labs.labels[bi * hw + p];
          if (lab == LabelMap::kIgnore) continue;
          std::size_t base = bi * ns * hw + p;
          for (std::size_t s = 0; s < ns; ++s) {
            double d = (*probs)[base + s * hw] - (s == lab ? 1.0 : 0.0);
            dl[base + s * hw] += gv * d;
          }
        }
      }
    });
  }
  return out;
}

Tensor attr_loss(Graph* g, const Tensor& logits, const AttrTargets& targets,
                 const Tensor& pos_weight) {
  if (logits.rank() != 2) throw ShapeError("attr_loss expects 2-D logits");
  std::size_t b = logits.shape()[0], na = logits.shape()[1];
  if (targets.batch != b || targets.num_attrs != na) {
    throw ShapeError("attr_loss target batch does not align with logits");
  }
  if (pos_weight.size() != na) throw ShapeError("attr_loss pos_weight length");
  std::size_t present = 0;
  double total = 0.0;
  const double* pl = logits.data();
  for (std::size_t i = 0; i < b * na; ++i) {
    if (!targets.present[i]) continue;
    double z = pl[i];
    double y = targets.values[i] ? 1.0 : 0.0;
    double wp = pos_weight[i % na];
    // softplus(-z) = -log sigmoid(z), softplus(z) = -log(1 - sigmoid(z))
    double sp_neg = std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    double sp_pos = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    total += y * wp * sp_neg + (1.0 - y) * sp_pos;
    ++present;
  }
  if (present == 0) throw EmptyLossError("attr_loss: no present labels in batch");
  Tensor out = Tensor::scalar(total / static_cast<double>(present));
  if (g) {
    out.mark_graph_output();
    AttrTargets t = targets;
    Tensor wpos = pos_weight;
    g->record([logits, t, wpos, out, b, na, present]() mutable {
      if (!wants_grad(logits)) return;
      double gv = out.grad()[0] / static_cast<double>(present);
      double* dl = logits.grad();
      const double* pl = logits.data();
      for (std::size_t i = 0; i < b * na; ++i) {
        if (!t.present[i]) continue;
        double z = pl[i];
        double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                              : std::exp(z) / (1.0 + std::exp(z));
        double y = t.values[i] ? 1.0 : 0.0;
        double wp = wpos[i % na];
        dl[i] += gv * (y * wp * (sig - 1.0) + (1.0 - y) * sig);
      }
    });
  }
  return out;
}

}  // namespace symbiotic
