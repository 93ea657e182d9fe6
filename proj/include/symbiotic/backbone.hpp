#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "symbiotic/layers.hpp"
#include "symbiotic/rng.hpp"

namespace symbiotic {

struct ConvBnBlock {
  Conv2dParams conv;
  BatchNormParams bn;
};

// Small trunk standing in for a large pretrained backbone: two stride-2
// stem convs (total stride 4) followed by stride-1 blocks, all conv-bn-relu.
struct BackboneConfig {
  std::size_t in_channels = 3;
  std::vector<std::size_t> stem_channels = {12, 20};   // each at stride 2
  std::vector<std::size_t> block_channels = {28, 32};  // stride 1, all tapped
  std::size_t kernel = 3;
};

struct BackboneParams {
  BackboneConfig cfg;
  std::vector<ConvBnBlock> stem;
  std::vector<ConvBnBlock> blocks;
  // learnable per-tap scale applied after l2 normalization, init 10.0
  std::vector<Tensor> fusion_scales;

  static BackboneParams init(const BackboneConfig& cfg, Rng rng);

  std::size_t total_stride() const { return std::size_t{1} << stem.size(); }
  std::size_t attr_channels() const { return cfg.block_channels.back(); }
  std::size_t seg_channels() const;
  void set_training(bool training);
};

struct FeaturePair {
  Tensor x_a;  // final block activations
  Tensor x_s;  // concat of l2-normalized, scaled taps (one per block)
};

// One trunk pass shared by both tasks. Set need_seg_features = false to
// skip assembling x_s when only the attribute branch is consumed.
FeaturePair forward_shared(Graph* g, const Tensor& image, BackboneParams& p,
                           bool need_seg_features = true);

// Trunk walk with a hook replacing block `gate_at`'s bn/relu; used to slot
// a gating layer between a block's convolution and its normalization.
using BlockHook = std::function<Tensor(Graph*, const Tensor&)>;
Tensor forward_stem_blocks_with_hook(Graph* g, const Tensor& image,
                                     BackboneParams& p, std::size_t gate_at,
                                     const BlockHook& hook);

struct SegHeadParams {
  Conv2dParams conv;  // 1x1 -> N_S
  static SegHeadParams init(std::size_t in_channels, std::size_t num_labels,
                            Rng rng);
};

// Per-pixel class logits at feature resolution.
Tensor seg_head_logits(Graph* g, const Tensor& x_s, const SegHeadParams& p);
// Feature-resolution logits bilinearly upsampled to image resolution.
Tensor seg_head(Graph* g, const Tensor& x_s, const SegHeadParams& p,
                std::size_t out_h, std::size_t out_w);

struct AttrHeadParams {
  Tensor weight;  // [N_A x C]
  Tensor bias;    // [N_A]
  static AttrHeadParams init(std::size_t in_dim, std::size_t num_attrs, Rng rng);
};

Tensor attr_head(Graph* g, const Tensor& pooled, const AttrHeadParams& p);

// He-style normal initialization for conv weights (no bias; bn follows).
Conv2dParams conv_init(std::size_t c_out, std::size_t c_in, std::size_t k,
                       std::size_t stride, std::size_t padding, Rng& rng,
                       bool with_bias = false);

}  // namespace symbiotic
