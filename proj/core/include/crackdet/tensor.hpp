#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace crackdet {

// Dense float32 tensor, row-major. Images and activations use NHWC order;
// matrices use [rows, cols].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape)
      : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, float v);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> flat() { return {data_.data(), data_.size()}; }
  std::span<const float> flat() const { return {data_.data(), data_.size()}; }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  // NHWC accessors.
  float& at(int n, int h, int w, int c) {
    return data_[offset(n, h, w, c)];
  }
  float at(int n, int h, int w, int c) const {
    return data_[offset(n, h, w, c)];
  }
  // 2-D accessors ([rows, cols]).
  float& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  float at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

  void fill(float v);
  void reshape(std::vector<int> shape);  // same element count
  void release() { data_.clear(); data_.shrink_to_fit(); shape_.clear(); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

 private:
  size_t offset(int n, int h, int w, int c) const {
    return ((static_cast<size_t>(n) * shape_[1] + h) * shape_[2] + w) * shape_[3] + c;
  }

  std::vector<int> shape_;
  std::vector<float> data_;
};

// y += x (same shape).
void axpy(float alpha, const Tensor& x, Tensor& y);

// Checksum over raw float bits; order-sensitive, used for the frozen-backbone
// invariant.
uint64_t bit_checksum(const Tensor& t, uint64_t basis = 0xcbf29ce484222325ull);

size_t shape_count(const std::vector<int>& shape);

}  // namespace crackdet
