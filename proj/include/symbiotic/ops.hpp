#pragma once

#include <cstddef>
#include <vector>

#include "symbiotic/graph.hpp"
#include "symbiotic/tensor.hpp"

namespace symbiotic {

// Elementwise ops. b may equal a's shape or be broadcastable by stretching
// a trailing run of size-1 axes. Pass g = nullptr to skip recording.
Tensor add(Graph* g, const Tensor& a, const Tensor& b);
Tensor sub(Graph* g, const Tensor& a, const Tensor& b);
Tensor mul(Graph* g, const Tensor& a, const Tensor& b);
Tensor add_scalar(Graph* g, const Tensor& a, double c);
Tensor mul_scalar(Graph* g, const Tensor& a, double c);

Tensor matmul(Graph* g, const Tensor& a, const Tensor& b);

// y = x . w^T + b with x: [M x K], w: [N x K], b: [N] (b may be undefined).
Tensor linear(Graph* g, const Tensor& x, const Tensor& w, const Tensor& b);

// Reductions remove the listed axes. An empty axis list is the identity.
Tensor reduce_sum(Graph* g, const Tensor& x, const std::vector<std::size_t>& axes);
Tensor reduce_mean(Graph* g, const Tensor& x, const std::vector<std::size_t>& axes);
// max routes its gradient to the first (row-major) argmax element on ties
Tensor reduce_max(Graph* g, const Tensor& x, const std::vector<std::size_t>& axes);

Tensor softmax(Graph* g, const Tensor& x, std::size_t axis);
Tensor relu(Graph* g, const Tensor& x);
Tensor sigmoid(Graph* g, const Tensor& x);

Tensor reshape(Graph* g, const Tensor& x, Shape new_shape);

// Concatenate 4-D tensors along the channel axis.
Tensor concat_channels(Graph* g, const std::vector<Tensor>& xs);

// [B x C] -> [B x C x h x w], every spatial position a copy of the vector.
Tensor tile_spatial(Graph* g, const Tensor& x, std::size_t h, std::size_t w);

// Per spatial position, scale the channel vector to unit l2 norm (guarded
// by eps) and multiply by the learnable scalar `scale` (shape {1}).
Tensor l2norm_scale(Graph* g, const Tensor& x, const Tensor& scale,
                    double eps = 1e-12);

// Corner-anchored bilinear interpolation to (out_h, out_w).
Tensor upsample_bilinear(Graph* g, const Tensor& x, std::size_t out_h,
                         std::size_t out_w);

// Nearest-neighbour resize (pixel-centre sampling) to (out_h, out_w).
Tensor nn_resize(Graph* g, const Tensor& x, std::size_t out_h, std::size_t out_w);

}  // namespace symbiotic
