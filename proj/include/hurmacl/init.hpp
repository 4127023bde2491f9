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

#include <cmath>
#include <cstdint>
#include <string>

#include "hurmacl/autograd.hpp"
#include "hurmacl/rng.hpp"

namespace hurmacl {

// Every parameter draws from its own stream seeded by (seed, name), so the
// values never depend on which other parameters exist or their order.
template <typename T>
void add_uniform(ParameterStore<T>& store, const std::string& name, Shape shape, double bound,
                 std::uint64_t seed) {
  Tensor<T> t(std::move(shape));
  Rng rng(derive_seed(seed, name));
  for (auto& v : t.vec()) v = static_cast<T>(rng.uniform(-bound, bound));
  store.add(name, std::move(t));
}

template <typename T>
void add_normal(ParameterStore<T>& store, const std::string& name, Shape shape, double stddev,
                std::uint64_t seed) {
  Tensor<T> t(std::move(shape));
  Rng rng(derive_seed(seed, name));
  for (auto& v : t.vec()) v = static_cast<T>(stddev * rng.normal());
  store.add(name, std::move(t));
}

template <typename T>
void add_constant(ParameterStore<T>& store, const std::string& name, Shape shape, double value) {
  store.add(name, Tensor<T>(std::move(shape), static_cast<T>(value)));
}

// Kaiming-uniform bound for fan-in initialisation under a leaky rectifier.
inline double kaiming_bound(int fan_in, double negative_slope) {
  return std::sqrt(6.0 / ((1.0 + negative_slope * negative_slope) * fan_in));
}

}  // namespace hurmacl
