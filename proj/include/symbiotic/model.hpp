#pragma once

#include <string>
#include <utility>
#include <vector>

#include "symbiotic/backbone.hpp"
#include "symbiotic/checkpoint.hpp"
#include "symbiotic/mechanisms.hpp"

namespace symbiotic {

enum class Variant {
  kBaselineGap,
  kNaiveConcat,
  kSppnetStar,
  kSsp,
  kSsg,
  kSa,
};

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant v);

// True for variants whose attribute branch consumes semantic masks as data.
bool variant_needs_masks(Variant v);
// True for variants that can train or evaluate the segmentation task.
bool variant_has_seg_task(Variant v);

struct ModelDims {
  std::size_t img_h = 32, img_w = 32;
  std::size_t num_seg_labels = 5;
  std::size_t num_attrs = 8;
};

// One weight-shared trunk plus per-variant attribute aggregation. The
// segmentation head exists for the two-task variants (baseline and the
// symbiotic model); the rest are attribute-only.
struct Model {
  Variant variant = Variant::kBaselineGap;
  ModelDims dims;
  BackboneConfig trunk_cfg;
  std::size_t ssg_block = 0;       // gate after this block's convolution
  std::size_t ssg_pool_k = 2, ssg_pool_s = 2;
  std::size_t sa_kernel = 3;

  BackboneParams trunk;
  SegHeadParams seg_head;
  AttrHeadParams attr_head;        // final attribute classifier
  SspHeadParams ssp;
  SsgParams ssg;
  SaParams sa;
  BatchNormParams naive_bn;        // input normalization, naive variant

  static Model init(Variant v, const ModelDims& dims, std::uint64_t seed,
                    const BackboneConfig& cfg = BackboneConfig{},
                    std::size_t sa_kernel = 3);

  void set_training(bool training);

  struct Forward {
    Tensor attr_logits;       // [B x N_A]
    Tensor seg_logits;        // [B x N_S x H x W] at image resolution, if computed
    Tensor region_weights;    // [B x N_A x N_S], ssp variant only
  };

  // masks: image-resolution SemMaskStack probs, required by the
  // mask-consuming variants and ignored otherwise.
  Forward forward(Graph* g, const Tensor& images, const Tensor& masks,
                  bool need_seg);

  std::vector<std::pair<std::string, Tensor>> named_params() const;  // trainable
  std::vector<std::pair<std::string, Tensor>> named_state() const;   // + running stats

  Checkpoint to_checkpoint() const;
  static Model from_checkpoint(const Checkpoint& ckpt);
  void load_state(const Checkpoint& ckpt);
  // Copies trunk.* entries only; shapes must agree.
  void load_trunk(const Checkpoint& ckpt);

 private:
  std::vector<std::pair<std::string, Tensor>> named(bool with_stats) const;
};

}  // namespace symbiotic
