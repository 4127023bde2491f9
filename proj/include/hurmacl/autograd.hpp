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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hurmacl/tensor.hpp"

namespace hurmacl {

// Named parameters with gradient slots. Iteration order is the sorted name
// order, which fixes the order of every per-parameter reduction.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    Tensor<T> value;
    Tensor<T> grad;
  };

  void add(const std::string& name, Tensor<T> value) {
    require(!entries_.contains(name), "duplicate parameter name: " + name);
    Tensor<T> grad(value.shape());
    entries_.emplace(name, Entry{std::move(value), std::move(grad)});
  }
  bool contains(const std::string& name) const { return entries_.contains(name); }

  Tensor<T>& value(const std::string& name) { return entry(name).value; }
  const Tensor<T>& value(const std::string& name) const { return entry(name).value; }
  Tensor<T>& grad(const std::string& name) { return entry(name).grad; }
  const Tensor<T>& grad(const std::string& name) const { return entry(name).grad; }

  void zero_grad() {
    for (auto& [_, e] : entries_) e.grad.fill(T(0));
  }
  std::size_t size() const { return entries_.size(); }
  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : entries_) out.push_back(k);
    return out;
  }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    require(it != entries_.end(), "unknown parameter: " + name);
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    require(it != entries_.end(), "unknown parameter: " + name);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are recorded in creation order, which is a
// topological order, so backward() walks them in reverse. A node that never
// receives a gradient contribution is skipped entirely; ops that scale by an
// exact zero do not propagate, so zero-weighted subgraphs cost nothing and
// leave every other accumulation bit-identical.
template <typename T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, const Tensor<T>& out_grad)>;

  Var input(Tensor<T> value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  Var param(ParameterStore<T>& store, const std::string& name) {
    Var v = push(store.value(name), true, nullptr);
    nodes_[static_cast<std::size_t>(v.id)].store = &store;
    nodes_[static_cast<std::size_t>(v.id)].param = name;
    return v;
  }

  Var make(Tensor<T> value, bool requires_grad, Backward bw) {
    return push(std::move(value), requires_grad, requires_grad ? std::move(bw) : nullptr);
  }

  const Tensor<T>& value(Var v) const { return node(v).value; }
  T item(Var v) const { return node(v).value.item(); }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  bool has_grad(Var v) const { return node(v).has_grad; }
  const Tensor<T>& grad(Var v) const { return node(v).grad; }

  // Accumulation target for v's gradient, zero-initialised on first use.
  // Returns nullptr when v does not require a gradient.
  T* grad_buffer(Var v) {
    Node& n = node(v);
    if (!n.requires_grad) return nullptr;
    if (!n.has_grad) {
      n.grad = Tensor<T>(n.value.shape());
      n.has_grad = true;
    }
    return n.grad.data();
  }

  void backward(Var root, T seed = T(1)) {
    T* g = grad_buffer(root);
    if (!g) return;
    for (std::size_t i = 0; i < node(root).grad.size(); ++i) g[i] += seed;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.has_grad || !n.backward) continue;
      // The closure may allocate gradients of earlier nodes but never
      // appends nodes, so this reference stays valid.
      n.backward(*this, n.grad);
    }
  }

  // Adds leaf gradients into their ParameterStore slots in tape order.
  void accumulate_param_grads() {
    for (auto& n : nodes_) {
      if (!n.store || !n.has_grad) continue;
      Tensor<T>& dst = n.store->grad(n.param);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
    ParameterStore<T>* store = nullptr;
    std::string param;
  };

  Var push(Tensor<T> value, bool requires_grad, Backward bw) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }
  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }

  std::vector<Node> nodes_;
};

}  // namespace hurmacl
