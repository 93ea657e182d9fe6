#pragma once

#include <functional>
#include <vector>

#include "symbiotic/tensor.hpp"

namespace symbiotic {

// Append-only tape of executed ops. Backward visits the recorded rules in
// exact reverse append order; each rule accumulates into input grads.
// A graph and its tensors belong to one logical thread.
class Graph {
 public:
  void record(std::function<void()> backward_rule) {
    nodes_.push_back(std::move(backward_rule));
  }

  std::size_t size() const { return nodes_.size(); }

  // Seeds loss grad with 1 and replays the tape backwards. Repeated calls
  // accumulate unless grads are zeroed in between.
  void backward(Tensor& loss);

  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

// True when a backward rule should write into t's grad buffer.
inline bool wants_grad(const Tensor& t) {
  return t.requires_grad() || t.graph_output();
}

}  // namespace symbiotic
