#include "symbiotic/model.hpp"

#include "symbiotic/errors.hpp"
#include "symbiotic/ops.hpp"

namespace symbiotic {

Variant variant_from_string(const std::string& name) {
  if (name == "baseline_gap") return Variant::kBaselineGap;
  if (name == "naive_concat") return Variant::kNaiveConcat;
  if (name == "sppnet_star") return Variant::kSppnetStar;
  if (name == "ssp") return Variant::kSsp;
  if (name == "ssg") return Variant::kSsg;
  if (name == "sa") return Variant::kSa;
  throw UsageError("unknown variant '" + name + "'");
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::kBaselineGap: return "baseline_gap";
    case Variant::kNaiveConcat: return "naive_concat";
    case Variant::kSppnetStar: return "sppnet_star";
    case Variant::kSsp: return "ssp";
    case Variant::kSsg: return "ssg";
    case Variant::kSa: return "sa";
  }
  throw UsageError("bad variant enum");
}

bool variant_needs_masks(Variant v) {
  return v == Variant::kNaiveConcat || v == Variant::kSsp || v == Variant::kSsg;
}

bool variant_has_seg_task(Variant v) {
  return v == Variant::kBaselineGap || v == Variant::kSa;
}

Model Model::init(Variant v, const ModelDims& dims, std::uint64_t seed,
                  const BackboneConfig& cfg, std::size_t sa_kernel) {
  Model m;
  m.variant = v;
  m.dims = dims;
  m.trunk_cfg = cfg;
  m.sa_kernel = sa_kernel;
  if (v == Variant::kNaiveConcat) {
    m.trunk_cfg.in_channels = 3 + dims.num_seg_labels;
  }

  // Named substreams keep the weights of shared components identical
  // across variants for a given seed.
  std::uint64_t init_seed = derive_seed(seed, "init");
  m.trunk = BackboneParams::init(m.trunk_cfg, Rng(derive_seed(init_seed, "trunk")));
  std::size_t c_attr = m.trunk.attr_channels();
  std::size_t c_seg = m.trunk.seg_channels();

  if (variant_has_seg_task(v)) {
    m.seg_head = SegHeadParams::init(c_seg, dims.num_seg_labels,
                                     Rng(derive_seed(init_seed, "seg_head")));
  }
  switch (v) {
    case Variant::kBaselineGap:
    case Variant::kNaiveConcat:
    case Variant::kSa:
      m.attr_head = AttrHeadParams::init(c_attr, dims.num_attrs,
                                         Rng(derive_seed(init_seed, "attr_head")));
      break;
    case Variant::kSppnetStar:
      m.attr_head = AttrHeadParams::init(c_attr * 5, dims.num_attrs,
                                         Rng(derive_seed(init_seed, "attr_head")));
      break;
    case Variant::kSsp:
      m.ssp = SspHeadParams::init(c_attr, dims.num_attrs,
                                  Rng(derive_seed(init_seed, "ssp_head")));
      break;
    case Variant::kSsg: {
      std::size_t c_mid = m.trunk_cfg.block_channels[m.ssg_block];
      m.ssg = SsgParams::init(c_mid, dims.num_seg_labels, c_mid,
                              Rng(derive_seed(init_seed, "ssg")));
      m.attr_head = AttrHeadParams::init(c_attr, dims.num_attrs,
                                         Rng(derive_seed(init_seed, "attr_head")));
      break;
    }
  }
  if (v == Variant::kSa) {
    m.sa = SaParams::init(dims.num_seg_labels, dims.num_attrs, c_attr, c_seg,
                          sa_kernel, Rng(derive_seed(init_seed, "sa_stage1")));
  }
  if (v == Variant::kNaiveConcat) {
    m.naive_bn = BatchNormParams::make(3 + dims.num_seg_labels);
  }
  return m;
}

void Model::set_training(bool training) {
  trunk.set_training(training);
  if (variant == Variant::kSsg) ssg.post_bn.training_mode = training;
  if (variant == Variant::kSa) sa.set_training(training);
  if (variant == Variant::kNaiveConcat) naive_bn.training_mode = training;
}

Model::Forward Model::forward(Graph* g, const Tensor& images, const Tensor& masks,
                              bool need_seg) {
  if (variant_needs_masks(variant) && !masks.defined()) {
    throw ConfigError(variant_to_string(variant) + " forward requires masks");
  }
  if (need_seg && !variant_has_seg_task(variant)) {
    throw ConfigError(variant_to_string(variant) +
                      " has no segmentation branch");
  }
  Forward out;
  switch (variant) {
    case Variant::kBaselineGap: {
      FeaturePair f = forward_shared(g, images, trunk, need_seg);
      out.attr_logits = symbiotic::attr_head(g, global_avg_pool(g, f.x_a), attr_head);
      if (need_seg) {
        out.seg_logits = symbiotic::seg_head(g, f.x_s, seg_head, dims.img_h, dims.img_w);
      }
      break;
    }
    case Variant::kSppnetStar: {
      FeaturePair f = forward_shared(g, images, trunk, false);
      out.attr_logits = symbiotic::attr_head(g, spp_pool(g, f.x_a), attr_head);
      break;
    }
    case Variant::kNaiveConcat: {
      Tensor input = naive_concat_input(g, images, masks, naive_bn);
      FeaturePair f = forward_shared(g, input, trunk, false);
      out.attr_logits = symbiotic::attr_head(g, global_avg_pool(g, f.x_a), attr_head);
      break;
    }
    case Variant::kSsp: {
      FeaturePair f = forward_shared(g, images, trunk, false);
      Tensor m = nn_resize(nullptr, masks, f.x_a.shape()[2], f.x_a.shape()[3]);
      SspHeadOut ho = ssp_head(g, region_pool(g, f.x_a, m), ssp);
      out.attr_logits = ho.logits;
      out.region_weights = ho.region_weights;
      break;
    }
    case Variant::kSsg: {
      Tensor x_a = forward_stem_blocks_with_hook(
          g, images, trunk, ssg_block, [&](Graph* gg, const Tensor& raw) {
            Tensor m = nn_resize(nullptr, masks, raw.shape()[2], raw.shape()[3]);
            return ssg_layer(gg, raw, m, ssg, ssg_pool_k, ssg_pool_s);
          });
      out.attr_logits = symbiotic::attr_head(g, global_avg_pool(g, x_a), attr_head);
      break;
    }
    case Variant::kSa: {
      FeaturePair f = forward_shared(g, images, trunk, true);
      SaForwardOut so = sa_forward(g, f.x_a, f.x_s, seg_head, sa, attr_head,
                                   dims.img_h, dims.img_w);
      out.attr_logits = so.attr_logits_final;
      out.seg_logits = so.seg_logits_final;
      break;
    }
  }
  return out;
}

namespace {

void add_conv(std::vector<std::pair<std::string, Tensor>>& out,
              const std::string& prefix, const Conv2dParams& c) {
  out.emplace_back(prefix + ".weight", c.weight);
  if (c.bias.defined()) out.emplace_back(prefix + ".bias", c.bias);
}

void add_bn(std::vector<std::pair<std::string, Tensor>>& out,
            const std::string& prefix, const BatchNormParams& b, bool with_stats) {
  out.emplace_back(prefix + ".gamma", b.gamma);
  out.emplace_back(prefix + ".beta", b.beta);
  if (with_stats) {
    out.emplace_back(prefix + ".running_mean", b.running_mean);
    out.emplace_back(prefix + ".running_var", b.running_var);
  }
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> Model::named(bool with_stats) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < trunk.stem.size(); ++i) {
    std::string p = "trunk.stem" + std::to_string(i);
    add_conv(out, p + ".conv", trunk.stem[i].conv);
    add_bn(out, p + ".bn", trunk.stem[i].bn, with_stats);
  }
  for (std::size_t i = 0; i < trunk.blocks.size(); ++i) {
    std::string p = "trunk.block" + std::to_string(i);
    add_conv(out, p + ".conv", trunk.blocks[i].conv);
    add_bn(out, p + ".bn", trunk.blocks[i].bn, with_stats);
  }
  for (std::size_t i = 0; i < trunk.fusion_scales.size(); ++i) {
    out.emplace_back("trunk.fusion_scale" + std::to_string(i),
                     trunk.fusion_scales[i]);
  }
  if (variant_has_seg_task(variant)) add_conv(out, "seg_head.conv", seg_head.conv);
  if (attr_head.weight.defined()) {
    out.emplace_back("attr_head.weight", attr_head.weight);
    out.emplace_back("attr_head.bias", attr_head.bias);
  }
  if (variant == Variant::kSsp) {
    out.emplace_back("ssp.rec.weight", ssp.w_rec);
    out.emplace_back("ssp.rec.bias", ssp.b_rec);
    out.emplace_back("ssp.loc.weight", ssp.w_loc);
    out.emplace_back("ssp.loc.bias", ssp.b_loc);
  }
  if (variant == Variant::kSsg) {
    add_conv(out, "ssg.gate_conv", ssg.gate_conv);
    add_bn(out, "ssg.post_bn", ssg.post_bn, with_stats);
  }
  if (variant == Variant::kSa) {
    out.emplace_back("sa.stage1.weight", sa.attr_head_stage1.weight);
    out.emplace_back("sa.stage1.bias", sa.attr_head_stage1.bias);
    add_bn(out, "sa.pre_bn_s", sa.phi_s.pre_bn, with_stats);
    out.emplace_back("sa.phi_s.weight", sa.phi_s.phi.weight);
    add_bn(out, "sa.pre_bn_a", sa.phi_a.pre_bn, with_stats);
    out.emplace_back("sa.phi_a.weight", sa.phi_a.phi.weight);
  }
  if (variant == Variant::kNaiveConcat) {
    add_bn(out, "naive.input_bn", naive_bn, with_stats);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> Model::named_params() const {
  return named(false);
}

std::vector<std::pair<std::string, Tensor>> Model::named_state() const {
  return named(true);
}

Checkpoint Model::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.meta["variant"] = variant_to_string(variant);
  ckpt.meta["dims"] = {{"img_h", dims.img_h},
                       {"img_w", dims.img_w},
                       {"n_s", dims.num_seg_labels},
                       {"n_a", dims.num_attrs}};
  ckpt.meta["trunk"] = {{"in_channels", trunk_cfg.in_channels},
                        {"stem_channels", trunk_cfg.stem_channels},
                        {"block_channels", trunk_cfg.block_channels},
                        {"kernel", trunk_cfg.kernel}};
  ckpt.meta["sa_kernel"] = sa_kernel;
  for (auto& [name, t] : named_state()) {
    ckpt.add(name, t);
  }
  return ckpt;
}

Model Model::from_checkpoint(const Checkpoint& ckpt) {
  ModelDims dims;
  dims.img_h = ckpt.meta["dims"]["img_h"].get<std::size_t>();
  dims.img_w = ckpt.meta["dims"]["img_w"].get<std::size_t>();
  dims.num_seg_labels = ckpt.meta["dims"]["n_s"].get<std::size_t>();
  dims.num_attrs = ckpt.meta["dims"]["n_a"].get<std::size_t>();
  BackboneConfig cfg;
  cfg.in_channels = 3;  // reset below when variants changed it
  cfg.stem_channels =
      ckpt.meta["trunk"]["stem_channels"].get<std::vector<std::size_t>>();
  cfg.block_channels =
      ckpt.meta["trunk"]["block_channels"].get<std::vector<std::size_t>>();
  cfg.kernel = ckpt.meta["trunk"]["kernel"].get<std::size_t>();
  Variant v = variant_from_string(ckpt.meta["variant"].get<std::string>());
  std::size_t sa_kernel = ckpt.meta.value("sa_kernel", std::size_t{3});
  Model m = Model::init(v, dims, /*seed=*/0, cfg, sa_kernel);
  m.load_state(ckpt);
  return m;
}

void Model::load_state(const Checkpoint& ckpt) {
  for (auto& [name, t] : named_state()) {
    const Tensor& src = ckpt.get(name);
    if (!same_shape(src.shape(), t.shape())) {
      throw VersionError("checkpoint entry " + name + " has shape " +
                         shape_str(src.shape()) + ", model expects " +
                         shape_str(t.shape()));
    }
    std::copy(src.data(), src.data() + src.size(), t.data());
  }
}

void Model::load_trunk(const Checkpoint& ckpt) {
  for (auto& [name, t] : named_state()) {
    if (name.rfind("trunk.", 0) != 0) continue;
    const Tensor& src = ckpt.get(name);
    if (!same_shape(src.shape(), t.shape())) {
      throw VersionError("trunk entry " + name + " has shape " +
                         shape_str(src.shape()) + ", model expects " +
                         shape_str(t.shape()));
    }
    std::copy(src.data(), src.data() + src.size(), t.data());
  }
}

}  // namespace symbiotic
