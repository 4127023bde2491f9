// Copyright 2026 The hurmacl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hurmacl/error.hpp"

namespace hurmacl {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

// Dense row-major array. Layout conventions used throughout:
// feature maps are [K, H, W], token matrices are [L, E], scalars are [1].
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == shape_numel(shape_),
            "tensor data size does not match shape " + shape_str(shape_));
  }

  static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int a, int b) { return data_[static_cast<std::size_t>(a) * shape_[1] + b]; }
  const T& at(int a, int b) const {
    return data_[static_cast<std::size_t>(a) * shape_[1] + b];
  }
  T& at(int a, int b, int c) {
    return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
  }
  const T& at(int a, int b, int c) const {
    return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
  }

  T item() const {
    require(data_.size() == 1, "item() on non-scalar tensor " + shape_str(shape_));
    return data_[0];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(Shape s) const {
    require(shape_numel(s) == data_.size(), "reshape size mismatch");
    return Tensor(std::move(s), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

}  // namespace hurmacl
