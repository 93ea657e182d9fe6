#include "symbiotic/backbone.hpp"

#include <cmath>

#include "symbiotic/errors.hpp"
#include "symbiotic/ops.hpp"

namespace symbiotic {

Conv2dParams conv_init(std::size_t c_out, std::size_t c_in, std::size_t k,
                       std::size_t stride, std::size_t padding, Rng& rng,
                       bool with_bias) {
  Conv2dParams p;
  p.weight = Tensor::zeros({c_out, c_in, k, k});
  double std = std::sqrt(2.0 / static_cast<double>(c_in * k * k));
  for (std::size_t i = 0; i < p.weight.size(); ++i)
    p.weight[i] = rng.normal(0.0, std);
  if (with_bias) p.bias = Tensor::zeros({c_out});
  p.stride = stride;
  p.padding = padding;
  return p;
}

BackboneParams BackboneParams::init(const BackboneConfig& cfg, Rng rng) {
  BackboneParams p;
  p.cfg = cfg;
  std::size_t cin = cfg.in_channels;
  std::size_t pad = cfg.kernel / 2;
  for (std::size_t c_out : cfg.stem_channels) {
    ConvBnBlock b;
    b.conv = conv_init(c_out, cin, cfg.kernel, 2, pad, rng);
    b.bn = BatchNormParams::make(c_out);
    p.stem.push_back(std::move(b));
    cin = c_out;
  }
  for (std::size_t c_out : cfg.block_channels) {
    ConvBnBlock b;
    b.conv = conv_init(c_out, cin, cfg.kernel, 1, pad, rng);
    b.bn = BatchNormParams::make(c_out);
    p.blocks.push_back(std::move(b));
    cin = c_out;
    p.fusion_scales.push_back(Tensor::full({1}, 10.0));
  }
  return p;
}

std::size_t BackboneParams::seg_channels() const {
  std::size_t c = 0;
  for (std::size_t b : cfg.block_channels) c += b;
  return c;
}

void BackboneParams::set_training(bool training) {
  for (auto& b : stem) b.bn.training_mode = training;
  for (auto& b : blocks) b.bn.training_mode = training;
}

FeaturePair forward_shared(Graph* g, const Tensor& image, BackboneParams& p,
                           bool need_seg_features) {
  std::size_t stride = p.total_stride();
  if (image.shape()[2] % stride != 0 || image.shape()[3] % stride != 0) {
    throw ShapeError("input spatial size " + shape_str(image.shape()) +
                     " not divisible by trunk stride " + std::to_string(stride));
  }
  Tensor x = image;
  for (auto& b : p.stem) {
    x = relu(g, batchnorm2d(g, conv2d(g, x, b.conv), b.bn));
  }
  std::vector<Tensor> taps;
  for (auto& b : p.blocks) {
    x = relu(g, batchnorm2d(g, conv2d(g, x, b.conv), b.bn));
    taps.push_back(x);
  }
  FeaturePair out;
  out.x_a = x;
  if (need_seg_features) {
    std::size_t th = x.shape()[2], tw = x.shape()[3];
    std::vector<Tensor> scaled;
    for (std::size_t i = 0; i < taps.size(); ++i) {
      Tensor level = taps[i];
      if (level.shape()[2] != th || level.shape()[3] != tw) {
        level = nn_resize(g, level, th, tw);
      }
      scaled.push_back(l2norm_scale(g, level, p.fusion_scales[i]));
    }
    out.x_s = concat_channels(g, scaled);
  }
  return out;
}

Tensor forward_stem_blocks_with_hook(Graph* g, const Tensor& image,
                                     BackboneParams& p, std::size_t gate_at,
                                     const BlockHook& hook) {
  std::size_t stride = p.total_stride();
  if (image.shape()[2] % stride != 0 || image.shape()[3] % stride != 0) {
    throw ShapeError("input spatial size not divisible by trunk stride");
  }
  Tensor x = image;
  for (auto& b : p.stem) {
    x = relu(g, batchnorm2d(g, conv2d(g, x, b.conv), b.bn));
  }
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    if (i == gate_at) {
      // raw conv output handed to the hook; the hook owns normalization
      x = relu(g, hook(g, conv2d(g, x, b.conv)));
    } else {
      x = relu(g, batchnorm2d(g, conv2d(g, x, b.conv), b.bn));
    }
  }
  return x;
}

SegHeadParams SegHeadParams::init(std::size_t in_channels, std::size_t num_labels,
                                  Rng rng) {
  SegHeadParams p;
  p.conv = conv_init(num_labels, in_channels, 1, 1, 0, rng, /*with_bias=*/true);
  return p;
}

Tensor seg_head_logits(Graph* g, const Tensor& x_s, const SegHeadParams& p) {
  return conv2d(g, x_s, p.conv);
}

Tensor seg_head(Graph* g, const Tensor& x_s, const SegHeadParams& p,
                std::size_t out_h, std::size_t out_w) {
  return upsample_bilinear(g, seg_head_logits(g, x_s, p), out_h, out_w);
}

AttrHeadParams AttrHeadParams::init(std::size_t in_dim, std::size_t num_attrs,
                                    Rng rng) {
  AttrHeadParams p;
  p.weight = Tensor::zeros({num_attrs, in_dim});
  double std = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight[i] = rng.normal(0.0, std);
  p.bias = Tensor::zeros({num_attrs});
  return p;
}

Tensor attr_head(Graph* g, const Tensor& pooled, const AttrHeadParams& p) {
  return linear(g, pooled, p.weight, p.bias);
}

}  // namespace symbiotic
