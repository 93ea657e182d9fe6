#include "symbiotic/graph.hpp"

#include "symbiotic/errors.hpp"

namespace symbiotic {

void Graph::backward(Tensor& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " +
                     shape_str(loss.shape()));
  }
  loss.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace symbiotic
