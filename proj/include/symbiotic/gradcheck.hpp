#pragma once

#include <functional>
#include <string>
#include <vector>

#include "symbiotic/graph.hpp"
#include "symbiotic/tensor.hpp"

namespace symbiotic {
namespace gradcheck {

// A differentiable scenario: `forward` rebuilds the computation from the
// current values of the captured inputs and returns a scalar loss. `wrt`
// lists the tensors whose analytic gradients are compared against central
// finite differences.
struct Check {
  std::string name;
  std::function<Tensor(Graph*)> forward;
  std::vector<Tensor> wrt;
};

struct Result {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool pass = false;
};

// Central differences with the given step; an element passes when the
// absolute difference is below abs_tol (near-zero forgiveness) or the
// relative error is below rel_tol.
Result run_check(const Check& check, double step = 1e-5, double rel_tol = 1e-4,
                 double abs_tol = 1e-7);

// The standard suite covering every differentiable op, parameterized by
// seed. `filter` selects by exact name; "all" keeps everything.
std::vector<Check> standard_suite(std::uint64_t seed);
std::vector<Result> run_suite(std::uint64_t seed, const std::string& filter,
                              double step = 1e-5, double rel_tol = 1e-4,
                              double abs_tol = 1e-7);

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0);

}  // namespace gradcheck
}  // namespace symbiotic
