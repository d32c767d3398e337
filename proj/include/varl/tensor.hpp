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

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varl {

using Shape = std::vector<int>;
using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::string to_string(const Shape& shape);
Eigen::Index element_count(const Shape& shape);

/// Raised when operand shapes are incompatible. The message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const Shape& a, const Shape& b);
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

class Tape;

/// Dense row-major n-dimensional array of doubles.
///
/// A Tensor is a plain value. When it was produced on a Tape it also carries
/// the index of its tape node; copies share that linkage, and `detach` drops
/// it. Mutating the data of a tracked tensor does not affect the recorded
/// graph.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Vector data);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor constant(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Eigen::Index size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }
  double operator[](Eigen::Index i) const { return data_[i]; }
  double& operator[](Eigen::Index i) { return data_[i]; }

  /// Value of a single-element tensor.
  double item() const;

  /// Rank-2 view; rank-1 tensors are viewed as a single row.
  ConstMatrixMap matrix() const;
  MatrixMap matrix();

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  friend class Tape;

  Shape shape_;
  Vector data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

/// Untracked copy of `t`.
Tensor detach(const Tensor& t);

/// Single-writer record of differentiable operations.
///
/// Nodes are appended in execution order, so every node's parents precede it.
/// Each node keeps a closure mapping its output gradient onto its parents'
/// gradient slots; `backward` replays those closures in reverse.
class Tape {
 public:
  /// grad_in[i] is null when the i-th input is not tracked.
  using BackwardFn =
      std::function<void(const Vector& grad_out, std::span<Vector*> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a leaf and returns the tracked copy.
  Tensor variable(const Tensor& value);

  /// Records an operation. If no input is tracked the result is returned
  /// untracked and nothing is recorded.
  static Tensor record(Shape shape, Vector value,
                       std::initializer_list<const Tensor*> inputs,
                       BackwardFn backward);
  static Tensor record(Shape shape, Vector value,
                       const std::vector<const Tensor*>& inputs,
                       BackwardFn backward);

  /// Reverse pass from a scalar loss. Gradients persist until the next call.
  void backward(const Tensor& loss);

  /// Gradient of `t` from the last backward pass; zeros when `t` was not
  /// reached from the loss.
  Vector grad(const Tensor& t) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::Index size = 0;
    std::vector<int> parents;  // -1 for untracked inputs
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<Vector> grads_;
};

}  // namespace varl
