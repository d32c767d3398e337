/*
 * Copyright 2026 The varl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "varl/tensor.hpp"

#include <sstream>

namespace varl {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Eigen::Index element_count(const Shape& shape) {
  Eigen::Index n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + to_string(shape));
    n *= d;
  }
  return n;
}

ShapeError::ShapeError(const std::string& op, const Shape& a, const Shape& b)
    : std::invalid_argument(op + ": incompatible shapes " + to_string(a) +
                            " and " + to_string(b)) {}

Tensor::Tensor(Shape shape, Vector data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + to_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape),
             Eigen::Map<const Vector>(values.begin(),
                                      static_cast<Eigen::Index>(values.size()))) {
}

Tensor Tensor::zeros(Shape shape) { return constant(std::move(shape), 0.0); }
Tensor Tensor::ones(Shape shape) { return constant(std::move(shape), 1.0); }

Tensor Tensor::constant(Shape shape, double value) {
  const auto n = element_count(shape);
  return Tensor(std::move(shape), Vector::Constant(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

ConstMatrixMap Tensor::matrix() const {
  if (rank() == 1) return ConstMatrixMap(data_.data(), 1, shape_[0]);
  if (rank() != 2) throw ShapeError("matrix() needs rank 1 or 2, got " + to_string(shape_));
  return ConstMatrixMap(data_.data(), shape_[0], shape_[1]);
}

MatrixMap Tensor::matrix() {
  if (rank() == 1) return MatrixMap(data_.data(), 1, shape_[0]);
  if (rank() != 2) throw ShapeError("matrix() needs rank 1 or 2, got " + to_string(shape_));
  return MatrixMap(data_.data(), shape_[0], shape_[1]);
}

Tensor detach(const Tensor& t) { return Tensor(t.shape(), t.data()); }

Tensor Tape::variable(const Tensor& value) {
  Tensor out(value.shape(), value.data());
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{value.size(), {}, nullptr});
  return out;
}

Tensor Tape::record(Shape shape, Vector value,
                    std::initializer_list<const Tensor*> inputs,
                    BackwardFn backward) {
  return record(std::move(shape), std::move(value),
                std::vector<const Tensor*>(inputs), std::move(backward));
}

Tensor Tape::record(Shape shape, Vector value,
                    const std::vector<const Tensor*>& inputs,
                    BackwardFn backward) {
  Tape* tape = nullptr;
  for (const Tensor* in : inputs) {
    if (!in->tracked()) continue;
    if (tape && tape != in->tape()) {
      throw std::logic_error("operation mixes tensors from different tapes");
    }
    tape = in->tape();
  }
  Tensor out(std::move(shape), std::move(value));
  if (!tape) return out;

  Node node;
  node.size = out.size();
  node.parents.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    node.parents.push_back(in->tracked() ? in->node() : -1);
  }
  node.backward = std::move(backward);
  out.tape_ = tape;
  out.node_ = static_cast<int>(tape->nodes_.size());
  tape->nodes_.push_back(std::move(node));
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " +
                     to_string(loss.shape()));
  }
  grads_.assign(nodes_.size(), Vector());
  if (!loss.tracked()) return;
  if (loss.tape() != this) {
    throw std::logic_error("loss was recorded on a different tape");
  }
  grads_[static_cast<std::size_t>(loss.node())] = Vector::Ones(1);

  std::vector<Vector*> slots;
  for (int i = loss.node(); i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    const Vector& g = grads_[static_cast<std::size_t>(i)];
    if (g.size() == 0 || !node.backward) continue;
    slots.assign(node.parents.size(), nullptr);
    for (std::size_t p = 0; p < node.parents.size(); ++p) {
      const int parent = node.parents[p];
      if (parent < 0) continue;
      auto& slot = grads_[static_cast<std::size_t>(parent)];
      if (slot.size() == 0) {
        slot = Vector::Zero(nodes_[static_cast<std::size_t>(parent)].size);
      }
      slots[p] = &slot;
    }
    node.backward(g, slots);
  }
}

Vector Tape::grad(const Tensor& t) const {
  if (!t.tracked() || t.tape() != this) return Vector::Zero(t.size());
  const auto idx = static_cast<std::size_t>(t.node());
  if (idx >= grads_.size() || grads_[idx].size() == 0) {
    return Vector::Zero(t.size());
  }
  return grads_[idx];
}

}  // namespace varl
