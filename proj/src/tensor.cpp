#include "symbiotic/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "symbiotic/errors.hpp"

namespace symbiotic {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

static void validate_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero-length axis in " + shape_str(shape));
  }
}

Tensor Tensor::zeros(Shape shape) {
  validate_shape(shape);
  auto impl = std::make_shared<Impl>();
  impl->values.assign(shape_numel(shape), 0.0);
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.impl_->values) v = value;
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return from_data({}, {value}); }

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->values[0];
}

double* Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad.data();
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t = from_data(impl_->shape, impl_->values);
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : impl_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace stns {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'N', 'S'};
constexpr std::uint8_t kPayloadF64 = 0;
constexpr std::uint8_t kPayloadU8 = 1;

void put_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void write_header(std::ostream& os, const Shape& shape, std::uint8_t payload) {
  os.write(kMagic, 4);
  if (shape.size() > 255) throw ShapeError("rank exceeds STNS limit");
  std::uint8_t rank = static_cast<std::uint8_t>(shape.size());
  os.write(reinterpret_cast<const char*>(&rank), 1);
  for (std::size_t d : shape) {
    if (d > 0xffffffffULL) throw ShapeError("dimension exceeds STNS limit");
    put_u32_le(os, static_cast<std::uint32_t>(d));
  }
  os.write(reinterpret_cast<const char*>(&payload), 1);
}

}  // namespace

void write_f64(std::ostream& os, const Shape& shape, const double* values) {
  write_header(os, shape, kPayloadF64);
  std::size_t n = shape_numel(shape);
  for (std::size_t i = 0; i < n; ++i) put_f64_le(os, values[i]);
}

void write_u8(std::ostream& os, const Shape& shape, const std::uint8_t* values) {
  write_header(os, shape, kPayloadU8);
  os.write(reinterpret_cast<const char*>(values), shape_numel(shape));
}

Record read(std::istream& is, const std::string& what) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw CorruptDatasetError(what + ": bad STNS magic");
  }
  std::uint8_t rank;
  is.read(reinterpret_cast<char*>(&rank), 1);
  Record rec;
  rec.shape.resize(rank);
  for (std::uint8_t i = 0; i < rank; ++i) rec.shape[i] = get_u32_le(is);
  std::uint8_t payload;
  is.read(reinterpret_cast<char*>(&payload), 1);
  if (!is) throw CorruptDatasetError(what + ": truncated STNS header");
  std::size_t n = shape_numel(rec.shape);
  if (payload == kPayloadF64) {
    rec.f64.resize(n);
    for (std::size_t i = 0; i < n; ++i) rec.f64[i] = get_f64_le(is);
  } else if (payload == kPayloadU8) {
    rec.is_u8 = true;
    rec.u8.resize(n);
    is.read(reinterpret_cast<char*>(rec.u8.data()), static_cast<std::streamsize>(n));
  } else {
    throw CorruptDatasetError(what + ": unknown STNS payload code");
  }
  if (!is) throw CorruptDatasetError(what + ": truncated STNS payload");
  return rec;
}

Tensor read_tensor(std::istream& is, const std::string& what) {
  Record rec = read(is, what);
  if (rec.is_u8) throw CorruptDatasetError(what + ": expected f64 payload");
  return Tensor::from_data(std::move(rec.shape), std::move(rec.f64));
}

void write_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CorruptDatasetError("cannot open " + path + " for writing");
  write_f64(os, t.shape(), t.data());
}

Tensor read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CorruptDatasetError("cannot open " + path);
  return read_tensor(is, path);
}

}  // namespace stns

}  // namespace symbiotic
