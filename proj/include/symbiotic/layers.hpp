#pragma once

#include <cstdint>
#include <vector>

#include "symbiotic/graph.hpp"
#include "symbiotic/tensor.hpp"

namespace symbiotic {

struct Conv2dParams {
  Tensor weight;  // [C_out x C_in x k x k]
  Tensor bias;    // [C_out], may be undefined
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_channels() const { return weight.shape()[0]; }
  std::size_t in_channels() const { return weight.shape()[1]; }
  std::size_t kernel() const { return weight.shape()[2]; }
};

Tensor conv2d(Graph* g, const Tensor& x, const Conv2dParams& p);

struct BatchNormParams {
  Tensor gamma;         // [C]
  Tensor beta;          // [C]
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]
  double momentum = 0.1;
  double eps = 1e-5;
  bool training_mode = true;

  static BatchNormParams make(std::size_t channels, double momentum = 0.1,
                              double eps = 1e-5);
  std::size_t channels() const { return gamma.size(); }
};

// Training mode normalizes per channel over (B, H, W) with biased variance,
// applies gamma/beta and updates running stats by exponential moving
// average; eval mode uses the running statistics only.
Tensor batchnorm2d(Graph* g, const Tensor& x, BatchNormParams& p);

Tensor maxpool2d(Graph* g, const Tensor& x, std::size_t k, std::size_t stride);

Tensor global_avg_pool(Graph* g, const Tensor& x);  // [B x C x H x W] -> [B x C]

// Two-level pyramid: global average plus the four 2x2-grid cell averages,
// laid out per channel as [gap, cell00, cell01, cell10, cell11].
Tensor spp_pool(Graph* g, const Tensor& x);  // -> [B x C*5]

// Per-pixel integer labels; 255 marks ignored pixels.
struct LabelMap {
  std::size_t batch = 0, h = 0, w = 0;
  std::vector<std::uint8_t> labels;  // row-major [batch x h x w]

  static constexpr std::uint8_t kIgnore = 255;

  std::uint8_t at(std::size_t b, std::size_t y, std::size_t x) const {
    return labels[(b * h + y) * w + x];
  }
  std::uint8_t& at(std::size_t b, std::size_t y, std::size_t x) {
    return labels[(b * h + y) * w + x];
  }
};

// Batched attribute targets with a presence mask (missing labels allowed).
struct AttrTargets {
  std::size_t batch = 0, num_attrs = 0;
  std::vector<std::uint8_t> values;   // [batch x num_attrs], 0/1
  std::vector<std::uint8_t> present;  // [batch x num_attrs], 0/1
};

struct LossWeights {
  Tensor attr_pos_weight;  // [N_A], defaults to ones
  double seg_weight = 1.0;
  double attr_weight = 1.0;
};

// Mean over non-ignored pixels of -log softmax(logits)[label].
Tensor seg_loss(Graph* g, const Tensor& logits, const LabelMap& labels);

// Mean over present entries of weighted binary cross entropy on logits,
// computed in log-sum-exp form.
Tensor attr_loss(Graph* g, const Tensor& logits, const AttrTargets& targets,
                 const Tensor& pos_weight);

}  // namespace symbiotic
