// Copyright 2026  ttaudio authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TTA_NN_TENSOR_HPP
#define TTA_NN_TENSOR_HPP

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <new>
#include <numeric>
#include <vector>

namespace tta {

// Fixed 64-byte alignment for every tensor buffer. SIMD reductions pick their
// peel/tail split from the buffer address; pinning the alignment makes results
// a function of shape alone, so identically-seeded runs match bitwise.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(alignment));
  }
  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U>;
  };
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
  friend bool operator!=(const AlignedAllocator&, const AlignedAllocator&) { return false; }
};

using FVec = std::vector<float, AlignedAllocator<float>>;

// Dense row-major float tensor, rank 1..4. All model math is float; audio and
// loss math stay in double elsewhere.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(numel_of(shape_), 0.0f);
  }
  Tensor(std::vector<int> shape, FVec data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    assert(static_cast<std::int64_t>(data_.size()) == numel_of(shape_));
  }

  static std::int64_t numel_of(const std::vector<int>& shape) {
    std::int64_t n = shape.empty() ? 0 : 1;
    for (int d : shape) n *= d;
    return n;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  FVec& vec() { return data_; }
  const FVec& vec() const { return data_; }

  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  float& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  float at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  float& at(int n, int c, int h, int w) {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  float at(int n, int c, int h, int w) const {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0f); }

  Tensor reshaped(std::vector<int> shape) const {
    assert(numel_of(shape) == numel());
    return Tensor(std::move(shape), data_);
  }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

 private:
  std::vector<int> shape_;
  FVec data_;
};

}  // namespace tta

#endif  // TTA_NN_TENSOR_HPP
