#include "symbiotic/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>

#include "symbiotic/errors.hpp"
#include "symbiotic/ops.hpp"

namespace symbiotic {

void validate_mask_stack(const SemMaskStack& m, double tol) {
  if (!m.probs.defined() || m.probs.rank() != 4) {
    throw ShapeError("mask stack must be [B x N_S x H x W]");
  }
  std::size_t b = m.probs.shape()[0], ns = m.probs.shape()[1];
  std::size_t hw = m.probs.shape()[2] * m.probs.shape()[3];
  const double* p = m.probs.data();
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t t = 0; t < hw; ++t) {
      double sum = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        double v = p[(bi * ns + s) * hw + t];
        if (v < -tol || v > 1.0 + tol) {
          throw ShapeError("mask value " + std::to_string(v) + " outside [0,1]");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol) {
        throw ShapeError("mask pixel sums to " + std::to_string(sum) +
                         ", expected 1");
      }
    }
  }
}

SemMaskStack one_hot_masks(const LabelMap& labels, std::size_t num_labels) {
  SemMaskStack m;
  m.probs = Tensor::zeros({labels.batch, num_labels, labels.h, labels.w});
  std::size_t hw = labels.h * labels.w;
  double* p = m.probs.data();
  for (std::size_t bi = 0; bi < labels.batch; ++bi) {
    for (std::size_t t = 0; t < hw; ++t) {
      std::uint8_t lab = labels.labels[bi * hw + t];
      if (lab >= num_labels) {
        throw LabelRangeError("one_hot_masks saw label " + std::to_string(lab));
      }
      p[(bi * num_labels + lab) * hw + t] = 1.0;
    }
  }
  return m;
}

Tensor region_pool(Graph* g, const Tensor& x, const Tensor& masks,
                   double eps_mask) {
  if (x.rank() != 4 || masks.rank() != 4) {
    throw ShapeError("region_pool expects 4-D activations and masks");
  }
  std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  std::size_t ns = masks.shape()[1];
  if (masks.shape()[0] != b || masks.shape()[2] != h || masks.shape()[3] != w) {
    throw ShapeError("region_pool spatial mismatch: " + shape_str(x.shape()) +
                     " vs " + shape_str(masks.shape()));
  }
  std::size_t hw = h * w;
  Tensor out = Tensor::zeros({b, ns, c});
  auto mass = std::make_shared<std::vector<double>>(b * ns, 0.0);
  const double* px = x.data();
  const double* pm = masks.data();
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t s = 0; s < ns; ++s) {
      const double* mplane = pm + (bi * ns + s) * hw;
      double a = 0.0;
      for (std::size_t t = 0; t < hw; ++t) a += mplane[t];
      (*mass)[bi * ns + s] = a;
      double inv = 1.0 / (a + eps_mask);
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double* xplane = px + (bi * c + ci) * hw;
        double acc = 0.0;
        for (std::size_t t = 0; t < hw; ++t) acc += xplane[t] * mplane[t];
        out[(bi * ns + s) * c + ci] = acc * inv;
      }
    }
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, masks, out, mass, b, c, ns, hw, eps_mask]() mutable {
      const double* go = out.grad();
      const double* px = x.data();
      const double* pm = masks.data();
      bool want_x = wants_grad(x);
      bool want_m = wants_grad(masks);
      double* dx = want_x ? x.grad() : nullptr;
      double* dm = want_m ? masks.grad() : nullptr;
      if (!want_x && !want_m) return;
      for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t s = 0; s < ns; ++s) {
          double inv = 1.0 / ((*mass)[bi * ns + s] + eps_mask);
          const double* mplane = pm + (bi * ns + s) * hw;
          double* dmplane = want_m ? dm + (bi * ns + s) * hw : nullptr;
          for (std::size_t ci = 0; ci < c; ++ci) {
            double gv = go[(bi * ns + s) * c + ci];
            if (gv == 0.0) continue;
            double f = out[(bi * ns + s) * c + ci];
            const double* xplane = px + (bi * c + ci) * hw;
            double* dxplane = want_x ? dx + (bi * c + ci) * hw : nullptr;
            double k = gv * inv;
            for (std::size_t t = 0; t < hw; ++t) {
              if (want_x) dxplane[t] += k * mplane[t];
              if (want_m) dmplane[t] += k * (xplane[t] - f);
            }
          }
        }
      }
    });
  }
  return out;
}

SspHeadParams SspHeadParams::init(std::size_t channels, std::size_t num_attrs,
                                  Rng rng) {
  SspHeadParams p;
  double std = 1.0 / std::sqrt(static_cast<double>(channels));
  p.w_rec = Tensor::zeros({num_attrs, channels});
  p.w_loc = Tensor::zeros({num_attrs, channels});
  for (std::size_t i = 0; i < p.w_rec.size(); ++i) p.w_rec[i] = rng.normal(0, std);
  for (std::size_t i = 0; i < p.w_loc.size(); ++i) p.w_loc[i] = rng.normal(0, std);
  p.b_rec = Tensor::zeros({num_attrs});
  p.b_loc = Tensor::zeros({num_attrs});
  return p;
}

SspHeadOut ssp_head(Graph* g, const Tensor& region_features,
                    const SspHeadParams& p) {
  if (region_features.rank() != 3) {
    throw ShapeError("ssp_head expects [B x N_S x C] features");
  }
  std::size_t b = region_features.shape()[0];
  std::size_t ns = region_features.shape()[1];
  std::size_t c = region_features.shape()[2];
  std::size_t na = p.w_rec.shape()[0];
  Tensor flat = reshape(g, region_features, {b * ns, c});
  Tensor rec = reshape(g, linear(g, flat, p.w_rec, p.b_rec), {b, ns, na});
  Tensor loc = reshape(g, linear(g, flat, p.w_loc, p.b_loc), {b, ns, na});
  Tensor weights = softmax(g, loc, 1);  // over regions, per attribute
  Tensor fused = reduce_sum(g, mul(g, weights, rec), {1});

  SspHeadOut out;
  out.logits = fused;
  out.region_weights = Tensor::zeros({b, na, ns});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t a = 0; a < na; ++a)
        out.region_weights[(bi * na + a) * ns + s] = weights[(bi * ns + s) * na + a];
  return out;
}

namespace {

// m_hat[b,s] = m[b,s] / (sum_hw m[b,s] + eps); an all-zero mask yields an
// all-zero normalized copy rather than an error.
Tensor mask_sum_normalize(Graph* g, const Tensor& masks, double eps) {
  std::size_t b = masks.shape()[0], ns = masks.shape()[1];
  std::size_t hw = masks.shape()[2] * masks.shape()[3];
  Tensor out = Tensor::zeros(masks.shape());
  auto mass = std::make_shared<std::vector<double>>(b * ns, 0.0);
  const double* pm = masks.data();
  for (std::size_t i = 0; i < b * ns; ++i) {
    const double* plane = pm + i * hw;
    double a = 0.0;
    for (std::size_t t = 0; t < hw; ++t) a += plane[t];
    (*mass)[i] = a;
    double inv = 1.0 / (a + eps);
    double* oplane = out.data() + i * hw;
    for (std::size_t t = 0; t < hw; ++t) oplane[t] = plane[t] * inv;
  }
  if (g) {
    out.mark_graph_output();
    g->record([masks, out, mass, hw, eps]() mutable {
      if (!wants_grad(masks)) return;
      const double* go = out.grad();
      const double* pm = masks.data();
      double* dm = masks.grad();
      for (std::size_t i = 0; i < mass->size(); ++i) {
        double d = (*mass)[i] + eps;
        const double* gplane = go + i * hw;
        const double* mplane = pm + i * hw;
        double dot = 0.0;
        for (std::size_t t = 0; t < hw; ++t) dot += gplane[t] * mplane[t];
        double* dplane = dm + i * hw;
        for (std::size_t t = 0; t < hw; ++t)
          dplane[t] += gplane[t] / d - dot / (d * d);
      }
    });
  }
  return out;
}

// out[b, s*C + c] = x[b, c] * m_hat[b, s]; region-major channel stacking.
Tensor gate_stack(Graph* g, const Tensor& x, const Tensor& m_hat) {
  std::size_t b = x.shape()[0], c = x.shape()[1];
  std::size_t ns = m_hat.shape()[1];
  std::size_t hw = x.shape()[2] * x.shape()[3];
  Tensor out = Tensor::zeros({b, ns * c, x.shape()[2], x.shape()[3]});
  const double* px = x.data();
  const double* pm = m_hat.data();
  double* po = out.data();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t s = 0; s < ns; ++s) {
      const double* mplane = pm + (bi * ns + s) * hw;
      for (std::size_t ci = 0; ci < c; ++ci) {
        const double* xplane = px + (bi * c + ci) * hw;
        double* oplane = po + ((bi * ns + s) * c + ci) * hw;
        for (std::size_t t = 0; t < hw; ++t) oplane[t] = xplane[t] * mplane[t];
      }
    }
  if (g) {
    out.mark_graph_output();
    g->record([x, m_hat, out, b, c, ns, hw]() mutable {
      const double* go = out.grad();
      const double* px = x.data();
      const double* pm = m_hat.data();
      bool want_x = wants_grad(x);
      bool want_m = wants_grad(m_hat);
      if (!want_x && !want_m) return;
      double* dx = want_x ? x.grad() : nullptr;
      double* dm = want_m ? m_hat.grad() : nullptr;
      for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t s = 0; s < ns; ++s) {
          const double* mplane = pm + (bi * ns + s) * hw;
          double* dmplane = want_m ? dm + (bi * ns + s) * hw : nullptr;
          for (std::size_t ci = 0; ci < c; ++ci) {
            const double* gplane = go + ((bi * ns + s) * c + ci) * hw;
            const double* xplane = px + (bi * c + ci) * hw;
            double* dxplane = want_x ? dx + (bi * c + ci) * hw : nullptr;
            for (std::size_t t = 0; t < hw; ++t) {
              if (want_x) dxplane[t] += gplane[t] * mplane[t];
              if (want_m) dmplane[t] += gplane[t] * xplane[t];
            }
          }
        }
    });
  }
  return out;
}

// Spatial softmax scaled so each (b, c) plane has mean 1. Computed as
// exp * HW / sum, which makes zero logits map to exactly 1.
Tensor spatial_softmax_scaled(Graph* g, const Tensor& x) {
  std::size_t bc = x.shape()[0] * x.shape()[1];
  std::size_t hw = x.shape()[2] * x.shape()[3];
  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data();
  double* po = out.data();
  double scale = static_cast<double>(hw);
  for (std::size_t i = 0; i < bc; ++i) {
    const double* plane = px + i * hw;
    double* oplane = po + i * hw;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < hw; ++t) mx = std::max(mx, plane[t]);
    double sum = 0.0;
    for (std::size_t t = 0; t < hw; ++t) {
      double e = std::exp(plane[t] - mx);
      oplane[t] = e;
      sum += e;
    }
    for (std::size_t t = 0; t < hw; ++t) oplane[t] = oplane[t] * scale / sum;
  }
  if (g) {
    out.mark_graph_output();
    g->record([x, out, bc, hw]() mutable {
      if (!wants_grad(x)) return;
      const double* go = out.grad();
      const double* py = out.data();
      double* dx = x.grad();
      double inv_hw = 1.0 / static_cast<double>(hw);
      for (std::size_t i = 0; i < bc; ++i) {
        const double* gplane = go + i * hw;
        const double* yplane = py + i * hw;
        double* dplane = dx + i * hw;
        double dot = 0.0;
        for (std::size_t t = 0; t < hw; ++t) dot += gplane[t] * yplane[t];
        dot *= inv_hw;
        for (std::size_t t = 0; t < hw; ++t)
          dplane[t] += yplane[t] * (gplane[t] - dot);
      }
    });
  }
  return out;
}

}  // namespace

SsgParams SsgParams::init(std::size_t c_mid, std::size_t num_labels,
                          std::size_t c_out, Rng rng) {
  SsgParams p;
  p.gate_conv = conv_init(c_out, num_labels * c_mid, 1, 1, 0, rng,
                          /*with_bias=*/true);
  p.post_bn = BatchNormParams::make(num_labels * c_mid);
  return p;
}

Tensor ssg_layer(Graph* g, const Tensor& x, const Tensor& masks, SsgParams& p,
                 std::size_t pool_k, std::size_t pool_s) {
  if (x.rank() != 4 || masks.rank() != 4) {
    throw ShapeError("ssg_layer expects 4-D activations and masks");
  }
  if (x.shape()[0] != masks.shape()[0] || x.shape()[2] != masks.shape()[2] ||
      x.shape()[3] != masks.shape()[3]) {
    throw ShapeError("ssg_layer spatial mismatch: " + shape_str(x.shape()) +
                     " vs " + shape_str(masks.shape()));
  }
  if (p.gate_conv.kernel() != 1) throw ShapeError("ssg gate conv must be 1x1");
  std::size_t stacked_c = masks.shape()[1] * x.shape()[1];
  if (p.gate_conv.in_channels() != stacked_c) {
    throw ShapeError("ssg gate conv expects " +
                     std::to_string(p.gate_conv.in_channels()) +
                     " channels, stack has " + std::to_string(stacked_c));
  }
  Tensor m_hat = mask_sum_normalize(g, masks, p.eps_mask);
  Tensor stacked = gate_stack(g, x, m_hat);
  Tensor normed = batchnorm2d(g, stacked, p.post_bn);
  Tensor pooled = maxpool2d(g, normed, pool_k, pool_s);
  return conv2d(g, pooled, p.gate_conv);
}

SaEmbedParams SaEmbedParams::init(std::size_t n_in, std::size_t c_target,
                                  std::size_t k, MaskNorm norm) {
  SaEmbedParams p;
  p.pre_bn = BatchNormParams::make(n_in);
  p.phi.weight = Tensor::zeros({c_target, n_in, k, k});
  p.phi.stride = 1;
  p.phi.padding = k / 2;
  p.norm_kind = norm;
  return p;
}

Tensor sa_embed(Graph* g, const Tensor& logits_src, SaEmbedParams& p) {
  Tensor y = conv2d(g, batchnorm2d(g, logits_src, p.pre_bn), p.phi);
  if (p.norm_kind == MaskNorm::kSpatialSoftmax) {
    return spatial_softmax_scaled(g, y);
  }
  // sigmoid * 2 makes zero logits the neutral mask value 1
  return mul_scalar(g, sigmoid(g, y), 2.0);
}

Tensor sa_augment(Graph* g, const Tensor& x, const Tensor& mask) {
  if (!same_shape(x.shape(), mask.shape())) {
    throw ShapeError("sa_augment shapes differ: " + shape_str(x.shape()) +
                     " vs " + shape_str(mask.shape()));
  }
  return add(g, x, mul(g, x, add_scalar(g, mask, -1.0)));
}

SaParams SaParams::init(std::size_t num_labels, std::size_t num_attrs,
                        std::size_t c_attr, std::size_t c_seg, std::size_t kernel,
                        Rng rng) {
  SaParams p;
  p.phi_s = SaEmbedParams::init(num_labels, c_attr, kernel,
                                MaskNorm::kSpatialSoftmax);
  p.phi_a = SaEmbedParams::init(num_attrs, c_seg, kernel,
                                MaskNorm::kChannelSigmoid);
  p.attr_head_stage1 = AttrHeadParams::init(c_attr, num_attrs, rng);
  return p;
}

void SaParams::set_training(bool training) {
  phi_s.pre_bn.training_mode = training;
  phi_a.pre_bn.training_mode = training;
}

SaForwardOut sa_forward(Graph* g, const Tensor& x_a, const Tensor& x_s,
                        const SegHeadParams& seg_head_p, SaParams& sa,
                        const AttrHeadParams& attr_head_final,
                        std::size_t out_h, std::size_t out_w) {
  std::size_t h = x_a.shape()[2], w = x_a.shape()[3];
  SaForwardOut out;
  out.seg_logits_stage1 = seg_head_logits(g, x_s, seg_head_p);
  out.attr_logits_stage1 = attr_head(g, global_avg_pool(g, x_a), sa.attr_head_stage1);

  Tensor mask_for_attr = sa_embed(g, out.seg_logits_stage1, sa.phi_s);
  Tensor mask_for_seg =
      sa_embed(g, tile_spatial(g, out.attr_logits_stage1, h, w), sa.phi_a);

  Tensor x_a_aug = sa_augment(g, x_a, mask_for_attr);
  Tensor x_s_aug = sa_augment(g, x_s, mask_for_seg);

  out.attr_logits_final = attr_head(g, global_avg_pool(g, x_a_aug), attr_head_final);
  out.seg_logits_final =
      upsample_bilinear(g, seg_head_logits(g, x_s_aug, seg_head_p), out_h, out_w);
  return out;
}

Tensor naive_concat_input(Graph* g, const Tensor& image, const Tensor& masks,
                          BatchNormParams& input_bn) {
  Tensor cat = concat_channels(g, {image, masks});
  return batchnorm2d(g, cat, input_bn);
}

Mechanism mechanism_from_string(const std::string& name) {
  if (name == "ssp") return Mechanism::kSsp;
  if (name == "sa") return Mechanism::kSa;
  throw UsageError("unknown mechanism '" + name + "' (expected ssp or sa)");
}

namespace {
void require_positive(long long v, const char* name) {
  if (v <= 0) {
    throw ConfigError(std::string(name) + " must be positive, got " +
                      std::to_string(v));
  }
}
}  // namespace

std::size_t footprint_formula(Mechanism mech, long long ns, long long na,
                              long long c, long long h, long long w) {
  require_positive(ns, "ns");
  require_positive(na, "na");
  require_positive(c, "c");
  require_positive(h, "h");
  require_positive(w, "w");
  auto u = [](long long v) { return static_cast<std::size_t>(v); };
  if (mech == Mechanism::kSsp) {
    return u(ns) * u(c) * u(h) * u(w) + u(ns) * u(na);
  }
  return u(ns) * u(h) * u(w) + u(na) * u(h) * u(w);
}

std::size_t footprint_instrumented(Mechanism mech, long long ns_, long long na_,
                                   long long c_, long long h_, long long w_) {
  require_positive(ns_, "ns");
  require_positive(na_, "na");
  require_positive(c_, "c");
  require_positive(h_, "h");
  require_positive(w_, "w");
  std::size_t ns = static_cast<std::size_t>(ns_), na = static_cast<std::size_t>(na_);
  std::size_t c = static_cast<std::size_t>(c_), h = static_cast<std::size_t>(h_),
              w = static_cast<std::size_t>(w_);
  std::size_t hw = h * w;
  std::size_t counted = 0;

  Rng rng(7);
  std::vector<double> x(c * hw);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  // uniform soft masks summing to 1 over regions at each pixel
  std::vector<double> masks(ns * hw);
  for (std::size_t t = 0; t < hw; ++t) {
    double sum = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double v = rng.uniform(0.05, 1.0);
      masks[s * hw + t] = v;
      sum += v;
    }
    for (std::size_t s = 0; s < ns; ++s) masks[s * hw + t] /= sum;
  }

  if (mech == Mechanism::kSsp) {
    std::vector<double> w_rec(na * c), b_rec(na, 0.0), w_loc(na * c), b_loc(na, 0.0);
    for (double& v : w_rec) v = rng.normal(0, 0.1);
    for (double& v : w_loc) v = rng.normal(0, 0.1);
    std::vector<double> rec(ns * na), loc(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
      // one gated copy of the activations per region
      std::vector<double> gated(c * hw);
      counted += gated.size();
      double mass = 0.0;
      for (std::size_t t = 0; t < hw; ++t) mass += masks[s * hw + t];
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t t = 0; t < hw; ++t)
          gated[ci * hw + t] = x[ci * hw + t] * masks[s * hw + t];
      std::vector<double> pooled(c);
      double inv = 1.0 / (mass + kRegionPoolEps);
      for (std::size_t ci = 0; ci < c; ++ci) {
        double acc = 0.0;
        for (std::size_t t = 0; t < hw; ++t) acc += gated[ci * hw + t];
        pooled[ci] = acc * inv;
      }
      // per-region logits from the shared recognition classifier
      std::vector<double> region_logits(na);
      counted += region_logits.size();
      for (std::size_t a = 0; a < na; ++a) {
        double racc = b_rec[a], lacc = b_loc[a];
        for (std::size_t ci = 0; ci < c; ++ci) {
          racc += w_rec[a * c + ci] * pooled[ci];
          lacc += w_loc[a * c + ci] * pooled[ci];
        }
        region_logits[a] = racc;
        loc[s * na + a] = lacc;
      }
      std::copy(region_logits.begin(), region_logits.end(), rec.begin() + s * na);
    }
    // fuse: per-attribute softmax over regions, weighted sum
    volatile double sink = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < ns; ++s) mx = std::max(mx, loc[s * na + a]);
      double z = 0.0;
      for (std::size_t s = 0; s < ns; ++s) z += std::exp(loc[s * na + a] - mx);
      double fused = 0.0;
      for (std::size_t s = 0; s < ns; ++s)
        fused += std::exp(loc[s * na + a] - mx) / z * rec[s * na + a];
      sink = sink + fused;
    }
    return counted;
  }

  // SA holds the two embedding input stacks instead of gated copies: the
  // semantic probability maps and the spatially tiled attribute logits.
  std::vector<double> seg_prob_maps(ns * hw);
  counted += seg_prob_maps.size();
  std::copy(masks.begin(), masks.end(), seg_prob_maps.begin());
  std::vector<double> attr_logits(na);
  for (double& v : attr_logits) v = rng.normal(0, 1.0);
  std::vector<double> tiled_attr(na * hw);
  counted += tiled_attr.size();
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t t = 0; t < hw; ++t) tiled_attr[a * hw + t] = attr_logits[a];

  // consume them through 1x1 embeddings into per-channel mask planes,
  // accumulated directly onto the activations
  std::vector<double> phi_s(c * ns), phi_a(ns * na);
  for (double& v : phi_s) v = rng.normal(0, 0.1);
  for (double& v : phi_a) v = rng.normal(0, 0.1);
  volatile double sink = 0.0;
  for (std::size_t ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    for (std::size_t t = 0; t < hw; ++t) {
      double m = 0.0;
      for (std::size_t s = 0; s < ns; ++s)
        m += phi_s[ci * ns + s] * seg_prob_maps[s * hw + t];
      acc += x[ci * hw + t] * m;
    }
    sink = sink + acc;
  }
  for (std::size_t s = 0; s < ns; ++s) {
    double acc = 0.0;
    for (std::size_t t = 0; t < hw; ++t) {
      double m = 0.0;
      for (std::size_t a = 0; a < na; ++a)
        m += phi_a[s * na + a] * tiled_attr[a * hw + t];
      acc += m;
    }
    sink = sink + acc;
  }
  return counted;
}

std::vector<std::vector<double>> inspect_phi(const Conv2dParams& phi) {
  std::size_t rows = phi.out_channels(), cols = phi.in_channels();
  std::size_t kk = phi.kernel() * phi.kernel();
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols, 0.0));
  for (std::size_t o = 0; o < rows; ++o) {
    for (std::size_t i = 0; i < cols; ++i) {
      double acc = 0.0;
      const double* wk = phi.weight.data() + (o * cols + i) * kk;
      for (std::size_t t = 0; t < kk; ++t) acc += wk[t];
      m[o][i] = acc / static_cast<double>(kk);
    }
    double lo = *std::min_element(m[o].begin(), m[o].end());
    double hi = *std::max_element(m[o].begin(), m[o].end());
    if (hi - lo < 1e-12) {
      std::fill(m[o].begin(), m[o].end(), 0.5);
    } else {
      for (double& v : m[o]) v = (v - lo) / (hi - lo);
    }
  }
  return m;
}

void write_phi_csv(std::ostream& os, const std::vector<std::vector<double>>& m,
                   const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels) {
  os << "label";
  for (const auto& c : col_labels) os << "," << c;
  os << "\n";
  os << std::fixed << std::setprecision(6);
  for (std::size_t r = 0; r < m.size(); ++r) {
    os << (r < row_labels.size() ? row_labels[r] : "row" + std::to_string(r));
    for (double v : m[r]) os << "," << v;
    os << "\n";
  }
}

}  // namespace symbiotic
