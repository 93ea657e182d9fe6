#include "symbiotic/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "symbiotic/backbone.hpp"
#include "symbiotic/errors.hpp"
#include "symbiotic/layers.hpp"
#include "symbiotic/mechanisms.hpp"
#include "symbiotic/ops.hpp"
#include "symbiotic/rng.hpp"

namespace symbiotic {
namespace gradcheck {

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

namespace {

// Fixed random projection turning any output into a scalar loss.
Tensor project(Graph* g, const Tensor& y, Rng& rng) {
  Tensor proj = random_tensor(y.shape(), rng, -1.0, 1.0);
  std::vector<std::size_t> axes(y.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  return reduce_sum(g, mul(g, y, proj), axes);
}

Tensor combine(Graph* g, const Tensor& a, const Tensor& b) {
  return add(g, a, b);
}

}  // namespace

Result run_check(const Check& check, double step, double rel_tol, double abs_tol) {
  for (Tensor t : check.wrt) {  // handles share storage
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Graph g;
  Tensor loss = check.forward(&g);
  g.backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const Tensor& t : check.wrt) {
    t.grad();  // ensure allocated
    analytic.push_back(t.grad_vec());
  }

  Result res;
  res.name = check.name;
  res.pass = true;
  for (std::size_t ti = 0; ti < check.wrt.size(); ++ti) {
    Tensor t = check.wrt[ti];
    for (std::size_t i = 0; i < t.size(); ++i) {
      double orig = t[i];
      t[i] = orig + step;
      double f_plus = check.forward(nullptr).item();
      t[i] = orig - step;
      double f_minus = check.forward(nullptr).item();
      t[i] = orig;
      double numeric = (f_plus - f_minus) / (2.0 * step);
      double ana = analytic[ti][i];
      double diff = std::abs(ana - numeric);
      double denom = std::max(std::abs(ana), std::abs(numeric));
      bool ok = diff <= abs_tol || (denom > 0.0 && diff / denom <= rel_tol);
      if (diff > abs_tol && denom > 0.0) {
        res.max_rel_err = std::max(res.max_rel_err, diff / denom);
      }
      if (!ok) res.pass = false;
      ++res.checked;
    }
  }
  return res;
}

std::vector<Check> standard_suite(std::uint64_t seed) {
  std::vector<Check> checks;
  Rng seeder(derive_seed(seed, "gradcheck"));

  {
    Rng rng = seeder.substream("elementwise");
    Tensor a = random_tensor({2, 3, 2}, rng);
    Tensor b = random_tensor({2, 3, 2}, rng);
    Tensor c = random_tensor({2, 3, 1}, rng);  // trailing-axis broadcast
    Rng prng = rng;
    checks.push_back({"elementwise",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        Tensor s = add(g, a, b);
                        Tensor m = mul(g, s, c);
                        Tensor d = sub(g, m, a);
                        return project(g, d, r);
                      },
                      {a, b, c}});
  }
  {
    Rng rng = seeder.substream("matmul");
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    Rng prng = rng;
    checks.push_back({"matmul",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, matmul(g, a, b), r);
                      },
                      {a, b}});
  }
  {
    Rng rng = seeder.substream("reductions");
    Tensor x = random_tensor({3, 4}, rng);
    Rng prng = rng;
    checks.push_back({"reductions",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        Tensor s = project(g, reduce_sum(g, x, {1}), r);
                        Tensor m = project(g, reduce_mean(g, x, {0}), r);
                        Tensor mx = project(g, reduce_max(g, x, {1}), r);
                        return combine(g, combine(g, s, m), mx);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("softmax");
    Tensor x = random_tensor({2, 5, 3}, rng);
    Rng prng = rng;
    checks.push_back({"softmax",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, softmax(g, x, 1), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("relu");
    Tensor x = random_tensor({4, 5}, rng);
    Rng prng = rng;
    checks.push_back({"relu",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, relu(g, x), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("sigmoid");
    Tensor x = random_tensor({4, 5}, rng);
    Rng prng = rng;
    checks.push_back({"sigmoid",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, sigmoid(g, x), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("linear");
    Tensor x = random_tensor({3, 4}, rng);
    Tensor w = random_tensor({2, 4}, rng);
    Tensor b = random_tensor({2}, rng);
    Rng prng = rng;
    checks.push_back({"linear",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, linear(g, x, w, b), r);
                      },
                      {x, w, b}});
  }
  {
    Rng rng = seeder.substream("conv2d");
    Tensor x = random_tensor({1, 2, 4, 4}, rng);
    Conv2dParams p;
    p.weight = random_tensor({3, 2, 3, 3}, rng);
    p.bias = random_tensor({3}, rng);
    p.stride = 1;
    p.padding = 1;
    Rng prng = rng;
    checks.push_back({"conv2d",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, conv2d(g, x, p), r);
                      },
                      {x, p.weight, p.bias}});
  }
  {
    Rng rng = seeder.substream("conv2d_strided");
    Tensor x = random_tensor({2, 3, 5, 5}, rng);
    Conv2dParams p;
    p.weight = random_tensor({2, 3, 3, 3}, rng);
    p.stride = 2;
    p.padding = 1;
    Rng prng = rng;
    checks.push_back({"conv2d_strided",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, conv2d(g, x, p), r);
                      },
                      {x, p.weight}});
  }
  {
    Rng rng = seeder.substream("batchnorm2d");
    Tensor x = random_tensor({2, 3, 3, 3}, rng);
    auto bn = std::make_shared<BatchNormParams>(BatchNormParams::make(3));
    for (std::size_t i = 0; i < 3; ++i) {
      bn->gamma[i] = rng.uniform(0.5, 1.5);
      bn->beta[i] = rng.uniform(-0.5, 0.5);
    }
    Rng prng = rng;
    checks.push_back({"batchnorm2d",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, batchnorm2d(g, x, *bn), r);
                      },
                      {x, bn->gamma, bn->beta}});
  }
  {
    Rng rng = seeder.substream("batchnorm2d_eval");
    Tensor x = random_tensor({2, 3, 3, 3}, rng);
    auto bn = std::make_shared<BatchNormParams>(BatchNormParams::make(3));
    bn->training_mode = false;
    for (std::size_t i = 0; i < 3; ++i) {
      bn->gamma[i] = rng.uniform(0.5, 1.5);
      bn->beta[i] = rng.uniform(-0.5, 0.5);
      bn->running_mean[i] = rng.uniform(-0.5, 0.5);
      bn->running_var[i] = rng.uniform(0.5, 2.0);
    }
    Rng prng = rng;
    checks.push_back({"batchnorm2d_eval",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, batchnorm2d(g, x, *bn), r);
                      },
                      {x, bn->gamma, bn->beta}});
  }
  {
    Rng rng = seeder.substream("maxpool2d");
    Tensor x = random_tensor({1, 2, 4, 4}, rng);
    Rng prng = rng;
    checks.push_back({"maxpool2d",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, maxpool2d(g, x, 2, 2), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("global_avg_pool");
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    Rng prng = rng;
    checks.push_back({"global_avg_pool",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, global_avg_pool(g, x), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("spp_pool");
    Tensor x = random_tensor({1, 2, 5, 5}, rng);
    Rng prng = rng;
    checks.push_back({"spp_pool",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, spp_pool(g, x), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("seg_loss");
    Tensor logits = random_tensor({2, 4, 3, 3}, rng);
    LabelMap labels;
    labels.batch = 2;
    labels.h = 3;
    labels.w = 3;
    labels.labels.resize(18);
    for (auto& l : labels.labels) {
      l = static_cast<std::uint8_t>(rng.uniform_index(5));
      if (l == 4) l = LabelMap::kIgnore;  // sprinkle ignored pixels
    }
    labels.labels[0] = 0;  // keep at least one scored pixel
    checks.push_back({"seg_loss",
                      [=](Graph* g) mutable { return seg_loss(g, logits, labels); },
                      {logits}});
  }
  {
    Rng rng = seeder.substream("attr_loss");
    Tensor logits = random_tensor({3, 5}, rng);
    AttrTargets t;
    t.batch = 3;
    t.num_attrs = 5;
    t.values.resize(15);
    t.present.resize(15);
    for (std::size_t i = 0; i < 15; ++i) {
      t.values[i] = rng.bernoulli(0.5) ? 1 : 0;
      t.present[i] = rng.bernoulli(0.8) ? 1 : 0;
    }
    t.present[0] = 1;
    Tensor wpos = random_tensor({5}, rng, 0.5, 3.0);
    checks.push_back(
        {"attr_loss",
         [=](Graph* g) mutable { return attr_loss(g, logits, t, wpos); },
         {logits}});
  }
  {
    Rng rng = seeder.substream("region_pool");
    Tensor x = random_tensor({1, 3, 4, 4}, rng);
    // soft partition of unity over 2 regions
    Tensor masks = Tensor::zeros({1, 2, 4, 4});
    for (std::size_t t = 0; t < 16; ++t) {
      double a = rng.uniform(0.05, 0.95);
      masks[t] = a;
      masks[16 + t] = 1.0 - a;
    }
    Rng prng = rng;
    checks.push_back({"region_pool",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, region_pool(g, x, masks), r);
                      },
                      {x, masks}});
  }
  {
    Rng rng = seeder.substream("ssp_head");
    Tensor f = random_tensor({2, 3, 4}, rng);
    SspHeadParams p = SspHeadParams::init(4, 2, rng.substream("params"));
    Rng prng = rng;
    checks.push_back({"ssp_head",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        SspHeadParams pp = p;
                        return project(g, ssp_head(g, f, pp).logits, r);
                      },
                      {f, p.w_rec, p.b_rec, p.w_loc, p.b_loc}});
  }
  {
    Rng rng = seeder.substream("ssg_layer");
    Tensor x = random_tensor({1, 2, 4, 4}, rng);
    Tensor masks = Tensor::zeros({1, 3, 4, 4});
    for (std::size_t t = 0; t < 16; ++t) {
      double a = rng.uniform(0.05, 0.9);
      double b = rng.uniform(0.0, 1.0 - a);
      masks[t] = a;
      masks[16 + t] = b;
      masks[32 + t] = 1.0 - a - b;
    }
    auto p = std::make_shared<SsgParams>(
        SsgParams::init(2, 3, 2, rng.substream("params")));
    Rng prng = rng;
    checks.push_back({"ssg_layer",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, ssg_layer(g, x, masks, *p, 2, 2), r);
                      },
                      {x, masks, p->gate_conv.weight, p->gate_conv.bias,
                       p->post_bn.gamma, p->post_bn.beta}});
  }
  {
    Rng rng = seeder.substream("sa_embed");
    Tensor src = random_tensor({1, 3, 4, 4}, rng);
    auto p = std::make_shared<SaEmbedParams>(
        SaEmbedParams::init(3, 2, 3, MaskNorm::kSpatialSoftmax));
    for (std::size_t i = 0; i < p->phi.weight.size(); ++i) {
      p->phi.weight[i] = rng.normal(0.0, 0.3);
    }
    Rng prng = rng;
    checks.push_back({"sa_embed",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, sa_embed(g, src, *p), r);
                      },
                      {src, p->phi.weight, p->pre_bn.gamma, p->pre_bn.beta}});
  }
  {
    Rng rng = seeder.substream("sa_embed_sigmoid");
    Tensor src = random_tensor({1, 3, 4, 4}, rng);
    auto p = std::make_shared<SaEmbedParams>(
        SaEmbedParams::init(3, 2, 1, MaskNorm::kChannelSigmoid));
    for (std::size_t i = 0; i < p->phi.weight.size(); ++i) {
      p->phi.weight[i] = rng.normal(0.0, 0.3);
    }
    Rng prng = rng;
    checks.push_back({"sa_embed_sigmoid",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, sa_embed(g, src, *p), r);
                      },
                      {src, p->phi.weight, p->pre_bn.gamma, p->pre_bn.beta}});
  }
  {
    Rng rng = seeder.substream("sa_augment");
    Tensor x = random_tensor({2, 3, 3, 3}, rng);
    Tensor mask = random_tensor({2, 3, 3, 3}, rng, 0.2, 1.8);
    Rng prng = rng;
    checks.push_back({"sa_augment",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, sa_augment(g, x, mask), r);
                      },
                      {x, mask}});
  }
  {
    Rng rng = seeder.substream("sa_forward");
    std::size_t ns = 3, na = 2;
    Tensor x_a = random_tensor({1, 4, 6, 6}, rng);
    Tensor x_s = random_tensor({1, 5, 6, 6}, rng);
    auto seg = std::make_shared<SegHeadParams>(
        SegHeadParams::init(5, ns, rng.substream("seg")));
    auto sa = std::make_shared<SaParams>(
        SaParams::init(ns, na, 4, 5, 3, rng.substream("sa")));
    auto head = std::make_shared<AttrHeadParams>(
        AttrHeadParams::init(4, na, rng.substream("head")));
    for (std::size_t i = 0; i < sa->phi_s.phi.weight.size(); ++i) {
      sa->phi_s.phi.weight[i] = rng.normal(0.0, 0.2);
    }
    for (std::size_t i = 0; i < sa->phi_a.phi.weight.size(); ++i) {
      sa->phi_a.phi.weight[i] = rng.normal(0.0, 0.2);
    }
    Rng prng = rng;
    checks.push_back(
        {"sa_forward",
         [=](Graph* g) mutable {
           Rng r = prng;
           SaForwardOut o = sa_forward(g, x_a, x_s, *seg, *sa, *head, 12, 12);
           return combine(g, project(g, o.seg_logits_final, r),
                          project(g, o.attr_logits_final, r));
         },
         {x_a, x_s, sa->phi_s.phi.weight, sa->phi_a.phi.weight,
          sa->attr_head_stage1.weight, sa->attr_head_stage1.bias,
          seg->conv.weight, seg->conv.bias, head->weight, head->bias,
          sa->phi_s.pre_bn.gamma, sa->phi_a.pre_bn.beta}});
  }
  {
    Rng rng = seeder.substream("l2norm_scale");
    Tensor x = random_tensor({1, 3, 3, 3}, rng);
    Tensor scale = Tensor::full({1}, rng.uniform(4.0, 12.0));
    Rng prng = rng;
    checks.push_back({"l2norm_scale",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, l2norm_scale(g, x, scale), r);
                      },
                      {x, scale}});
  }
  {
    Rng rng = seeder.substream("upsample_bilinear");
    Tensor x = random_tensor({1, 2, 3, 3}, rng);
    Rng prng = rng;
    checks.push_back({"upsample_bilinear",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, upsample_bilinear(g, x, 6, 6), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("nn_resize");
    Tensor x = random_tensor({1, 2, 4, 4}, rng);
    Rng prng = rng;
    checks.push_back({"nn_resize",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, nn_resize(g, x, 2, 2), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("tile_spatial");
    Tensor x = random_tensor({2, 3}, rng);
    Rng prng = rng;
    checks.push_back({"tile_spatial",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, tile_spatial(g, x, 3, 2), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("concat_channels");
    Tensor a = random_tensor({1, 2, 3, 3}, rng);
    Tensor b = random_tensor({1, 3, 3, 3}, rng);
    Rng prng = rng;
    checks.push_back({"concat_channels",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, concat_channels(g, {a, b}), r);
                      },
                      {a, b}});
  }
  {
    Rng rng = seeder.substream("reshape");
    Tensor x = random_tensor({2, 6}, rng);
    Rng prng = rng;
    checks.push_back({"reshape",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, reshape(g, x, {3, 4}), r);
                      },
                      {x}});
  }
  {
    Rng rng = seeder.substream("backbone");
    BackboneConfig cfg;
    cfg.stem_channels = {4, 6};
    cfg.block_channels = {6, 8};
    auto trunk = std::make_shared<BackboneParams>(
        BackboneParams::init(cfg, rng.substream("trunk")));
    Tensor image = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
    Rng prng = rng;
    std::vector<Tensor> wrt = {image};
    for (auto& b : trunk->stem) {
      wrt.push_back(b.conv.weight);
      wrt.push_back(b.bn.gamma);
      wrt.push_back(b.bn.beta);
    }
    for (auto& b : trunk->blocks) wrt.push_back(b.conv.weight);
    for (auto& s : trunk->fusion_scales) wrt.push_back(s);
    checks.push_back({"backbone",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        FeaturePair f = forward_shared(g, image, *trunk, true);
                        return combine(g, project(g, f.x_a, r),
                                       project(g, f.x_s, r));
                      },
                      wrt});
  }
  {
    Rng rng = seeder.substream("seg_head");
    SegHeadParams p = SegHeadParams::init(4, 3, rng.substream("params"));
    Tensor x = random_tensor({1, 4, 3, 3}, rng);
    Rng prng = rng;
    checks.push_back({"seg_head",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, seg_head(g, x, p, 6, 6), r);
                      },
                      {x, p.conv.weight, p.conv.bias}});
  }
  {
    Rng rng = seeder.substream("attr_head");
    AttrHeadParams p = AttrHeadParams::init(5, 3, rng.substream("params"));
    Tensor x = random_tensor({2, 5}, rng);
    Rng prng = rng;
    checks.push_back({"attr_head",
                      [=](Graph* g) mutable {
                        Rng r = prng;
                        return project(g, attr_head(g, x, p), r);
                      },
                      {x, p.weight, p.bias}});
  }
  return checks;
}

std::vector<Result> run_suite(std::uint64_t seed, const std::string& filter,
                              double step, double rel_tol, double abs_tol) {
  std::vector<Result> results;
  bool matched = false;
  for (const Check& c : standard_suite(seed)) {
    if (filter != "all" && c.name != filter) continue;
    matched = true;
    results.push_back(run_check(c, step, rel_tol, abs_tol));
  }
  if (!matched) {
    throw UsageError("no gradcheck module named '" + filter + "'");
  }
  return results;
}

}  // namespace gradcheck
}  // namespace symbiotic
