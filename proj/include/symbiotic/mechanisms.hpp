#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "symbiotic/backbone.hpp"
#include "symbiotic/layers.hpp"

namespace symbiotic {

// Per-pixel probability stack over semantic labels: [B x N_S x H x W],
// values in [0,1], summing to 1 over labels at every pixel (softmax output
// or one-hot ground truth).
struct SemMaskStack {
  Tensor probs;

  std::size_t num_labels() const { return probs.shape()[1]; }
};

// Throws ShapeError when values leave [0,1] or pixel sums drift from 1.
void validate_mask_stack(const SemMaskStack& m, double tol = 1e-6);

SemMaskStack one_hot_masks(const LabelMap& labels, std::size_t num_labels);

constexpr double kRegionPoolEps = 1e-6;

// Mask-mass-normalized pooling: f[b,s,c] = sum(x * m) / (sum(m) + eps).
// x: [B x C x H x W], masks: [B x N_S x H x W] -> [B x N_S x C].
Tensor region_pool(Graph* g, const Tensor& x, const Tensor& masks,
                   double eps_mask = kRegionPoolEps);

// Shared-per-region linear classifiers, one recognition and one
// localization branch; localization logits softmax-normalized over regions
// per attribute, recognition logits fused by the resulting weights.
struct SspHeadParams {
  Tensor w_rec, b_rec;  // [N_A x C], [N_A]
  Tensor w_loc, b_loc;
  static SspHeadParams init(std::size_t channels, std::size_t num_attrs, Rng rng);
};

struct SspHeadOut {
  Tensor logits;          // [B x N_A]
  Tensor region_weights;  // [B x N_A x N_S], detached inspection copy
};

SspHeadOut ssp_head(Graph* g, const Tensor& region_features, const SspHeadParams& p);

// Gated max pooling: per-region mask normalization to unit mass, gated
// copies stacked over channels, batch norm, max pool, then a 1x1
// convolution restoring the channel count.
struct SsgParams {
  Conv2dParams gate_conv;   // 1x1, C_in = N_S * C_mid
  BatchNormParams post_bn;  // over the stacked N_S * C_mid channels
  double eps_mask = kRegionPoolEps;

  static SsgParams init(std::size_t c_mid, std::size_t num_labels,
                        std::size_t c_out, Rng rng);
};

Tensor ssg_layer(Graph* g, const Tensor& x, const Tensor& masks, SsgParams& p,
                 std::size_t pool_k, std::size_t pool_s);

enum class MaskNorm { kSpatialSoftmax, kChannelSigmoid };

// Embedding that turns one task's logit maps into per-channel masks for the
// other task's features. Kernels start at zero with no bias so every channel
// initially weighs all regions equally.
struct SaEmbedParams {
  BatchNormParams pre_bn;  // over N_in channels
  Conv2dParams phi;        // [C_target x N_in x k x k], no bias, zero-init
  MaskNorm norm_kind = MaskNorm::kSpatialSoftmax;

  static SaEmbedParams init(std::size_t n_in, std::size_t c_target, std::size_t k,
                            MaskNorm norm);
};

Tensor sa_embed(Graph* g, const Tensor& logits_src, SaEmbedParams& p);

// x + x * (mask - 1); the explicit add keeps zero-init embeddings an exact
// bitwise identity.
Tensor sa_augment(Graph* g, const Tensor& x, const Tensor& mask);

struct SaParams {
  SaEmbedParams phi_s;            // seg logits -> attr feature masks
  SaEmbedParams phi_a;            // tiled attr logits -> seg feature masks
  AttrHeadParams attr_head_stage1;

  static SaParams init(std::size_t num_labels, std::size_t num_attrs,
                       std::size_t c_attr, std::size_t c_seg, std::size_t kernel,
                       Rng rng);
  void set_training(bool training);
};

struct SaForwardOut {
  Tensor seg_logits_final;   // [B x N_S x out_h x out_w]
  Tensor attr_logits_final;  // [B x N_A]
  Tensor seg_logits_stage1;  // feature resolution
  Tensor attr_logits_stage1;
};

// Both tasks augment each other through their stage-1 logits; the final
// heads run on the augmented features and losses attach to them only.
// The segmentation head is reused across both passes.
SaForwardOut sa_forward(Graph* g, const Tensor& x_a, const Tensor& x_s,
                        const SegHeadParams& seg_head_p, SaParams& sa,
                        const AttrHeadParams& attr_head_final,
                        std::size_t out_h, std::size_t out_w);

// Channel concatenation of image and masks followed by batch normalization
// over all 3 + N_S channels.
Tensor naive_concat_input(Graph* g, const Tensor& image, const Tensor& masks,
                          BatchNormParams& input_bn);

enum class Mechanism { kSsp, kSa };

Mechanism mechanism_from_string(const std::string& name);

// Closed-form element counts of the mechanism-specific intermediates.
std::size_t footprint_formula(Mechanism mech, long long ns, long long na,
                              long long c, long long h, long long w);
// Runs a materializing forward and counts every element the mechanism
// actually allocates for those intermediates.
std::size_t footprint_instrumented(Mechanism mech, long long ns, long long na,
                                   long long c, long long h, long long w);

// Mean over the k x k kernel per (out, in) pair, then per-row min-max
// normalization to [0,1]; constant rows map to 0.5.
std::vector<std::vector<double>> inspect_phi(const Conv2dParams& phi);

void write_phi_csv(std::ostream& os, const std::vector<std::vector<double>>& m,
                   const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels);

}  // namespace symbiotic
