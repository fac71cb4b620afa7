#include "crackdet/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "crackdet/errors.hpp"
#include "crackdet/rng.hpp"

namespace crackdet {

size_t shape_count(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension");
    n *= static_cast<size_t>(d);
  }
  return shape.empty() ? 0 : n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(shape_count(shape_), 0.0f);
}

Tensor Tensor::full(std::vector<int> shape, float v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(std::vector<int> shape) {
  if (shape_count(shape) != data_.size())
    throw ShapeError("reshape changes element count (" + shape_str() + ")");
  shape_ = std::move(shape);
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

void axpy(float alpha, const Tensor& x, Tensor& y) {
  if (!x.same_shape(y)) throw ShapeError("axpy shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  const float* xi = x.data();
  float* yi = y.data();
  const size_t n = x.size();
  for (size_t i = 0; i < n; ++i) yi[i] += alpha * xi[i];
}

uint64_t bit_checksum(const Tensor& t, uint64_t basis) {
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(t.data()),
                                  t.size() * sizeof(float)),
                 basis);
}

}  // namespace crackdet
