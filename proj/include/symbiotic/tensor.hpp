#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace symbiotic {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

// Dense row-major f64 tensor with an optional gradient buffer. Copies are
// shallow (shared storage); an instance is immutable once it participates
// in a recorded graph, except for grad accumulation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from_data(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->values.size(); }

  double* data() { return impl_->values.data(); }
  const double* data() const { return impl_->values.data(); }
  std::vector<double>& values() { return impl_->values; }
  const std::vector<double>& values() const { return impl_->values; }

  double operator[](std::size_t i) const { return impl_->values[i]; }
  double& operator[](std::size_t i) { return impl_->values[i]; }

  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    impl_->requires_grad = v;
    return *this;
  }

  // Set on tensors produced by recorded ops; backward rules propagate into
  // a tensor iff it requires grad or was itself produced on the tape.
  bool graph_output() const { return impl_->graph_output; }
  void mark_graph_output() { impl_->graph_output = true; }

  bool has_grad() const { return !impl_->grad.empty(); }
  // Lazily allocates a zero-filled gradient buffer of matching length.
  // Const because copies share storage and grad accumulation is the one
  // mutation permitted on a tensor participating in a recorded graph.
  double* grad() const;
  const std::vector<double>& grad_vec() const { return impl_->grad; }
  void zero_grad();

  Tensor clone() const;  // deep copy of values; grad not copied

  bool all_finite() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    bool graph_output = false;
  };
  std::shared_ptr<Impl> impl_;

  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
};

// Little-endian binary tensor records: magic "STNS", u8 rank, u32 dims,
// u8 payload code (0 = f64, 1 = u8), raw row-major payload.
namespace stns {

void write_f64(std::ostream& os, const Shape& shape, const double* values);
void write_u8(std::ostream& os, const Shape& shape, const std::uint8_t* values);

struct Record {
  Shape shape;
  bool is_u8 = false;
  std::vector<double> f64;
  std::vector<std::uint8_t> u8;
};

Record read(std::istream& is, const std::string& what);
Tensor read_tensor(std::istream& is, const std::string& what);

void write_tensor_file(const std::string& path, const Tensor& t);
Tensor read_tensor_file(const std::string& path);

}  // namespace stns

}  // namespace symbiotic
