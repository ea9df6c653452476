// Copyright 2026 The rpk Authors. All Rights Reserved.
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

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rpk/errors.hpp"
#include "rpk/numerics/tensor.hpp"

namespace rpk::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using ValuePtr = std::shared_ptr<const Tensor>;

// Accumulates the contribution of `grad` (the gradient w.r.t. the op's output)
// into each parent's gradient slot. Slots are nullptr for parents that do not
// require gradients.
using BackwardFn = std::function<void(const Tensor& grad, std::span<Tensor* const> parent_grads)>;

using Gradients = std::map<std::string, Tensor>;

// Ordered record of primitive operations. Nodes are appended in evaluation
// order, so the record is already a topological order of the graph.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Trainable leaf; its gradient is reported under `id` by backward().
  Var parameter(std::string id, Tensor value) {
    if (!param_ids_.insert(id).second) throw ConfigError("duplicate parameter id '" + id + "'");
    Node n;
    n.value = std::make_shared<const Tensor>(std::move(value));
    n.requires_grad = true;
    n.param_id = std::move(id);
    return push(std::move(n));
  }

  Var constant(Tensor value) { return constant(std::make_shared<const Tensor>(std::move(value))); }

  // Shares the tensor without copying; used for frozen weights.
  Var constant(ValuePtr value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
    Node n;
    n.value = std::make_shared<const Tensor>(std::move(value));
    for (const Var& p : parents) {
      if (p.tape_ != this) throw ConfigError("operand recorded on a different tape");
      n.parents.push_back(p.id_);
      n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
  }

  const Tensor& value(std::size_t id) const { return *nodes_.at(id).value; }
  ValuePtr value_ptr(const Var& v) const { return nodes_.at(v.id_).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse-mode sweep from a scalar output. Every parameter on the tape gets an
  // entry (zeros if the output does not depend on it); constants get none. When
  // `visit_order` is given it receives the ids of the nodes whose backward rule
  // ran, in the order they ran.
  Gradients backward(const Var& output, std::vector<std::size_t>* visit_order = nullptr) const {
    if (output.tape_ != this) throw ConfigError("backward: output belongs to a different tape");
    const Tensor& out = value(output.id_);
    if (out.size() != 1) throw ShapeError("backward needs a scalar output, got shape " + to_string(out.shape()));

    std::vector<std::optional<Tensor>> grads(output.id_ + 1);
    grads[output.id_] = Tensor(out.shape(), 1.0);

    std::vector<Tensor*> slots;
    for (std::size_t id = output.id_ + 1; id-- > 0;) {
      const Node& node = nodes_[id];
      if (!grads[id] || !node.backward) continue;
      slots.clear();
      for (std::size_t p : node.parents) {
        if (!nodes_[p].requires_grad) {
          slots.push_back(nullptr);
          continue;
        }
        if (!grads[p]) grads[p] = Tensor(nodes_[p].value->shape(), 0.0);
        slots.push_back(&*grads[p]);
      }
      node.backward(*grads[id], slots);
      if (visit_order) visit_order->push_back(id);
    }

    Gradients result;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      const Node& node = nodes_[id];
      if (node.param_id.empty()) continue;
      if (id < grads.size() && grads[id]) {
        result.emplace(node.param_id, std::move(*grads[id]));
      } else {
        result.emplace(node.param_id, Tensor(node.value->shape(), 0.0));
      }
    }
    return result;
  }

 private:
  struct Node {
    ValuePtr value;
    bool requires_grad = false;
    std::string param_id;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::unordered_set<std::string> param_ids_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

inline Gradients backward(const Var& output, std::vector<std::size_t>* visit_order = nullptr) {
  return output.tape().backward(output, visit_order);
}

}  // namespace rpk::ad
