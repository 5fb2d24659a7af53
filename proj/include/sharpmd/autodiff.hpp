// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Dense reverse-mode automatic differentiation over double-precision tensors.
//
// A Graph is a tape: every primitive appends one node, and backward() walks the
// tape once in reverse construction order. Parameters live outside the graph as
// Tensor values; Graph::parameter() links a node to such a tensor so that
// backward() adds the node's gradient into Tensor::grad. Gradients accumulate
// across backward passes until Tensor::zero_grad() is called.
//
// Broadcasting is limited to a single-element operand combined with a tensor.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sharpmd::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tensor {
 public:
  Tensor() : Tensor(Shape{}, {0.0}) {}
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double item() const;

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) noexcept { requires_grad_ = on; }

  bool has_grad() const noexcept { return grad_.has_value(); }
  // Zero-filled view when no gradient has been accumulated yet.
  std::vector<double> grad() const;
  void accumulate_grad(std::span<const double> delta);
  void zero_grad();

 private:
  Shape shape_;
  std::vector<double> values_;
  bool requires_grad_ = false;
  std::optional<std::vector<double>> grad_;
};

class Graph;

// Lightweight handle to a node of a Graph. Valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Shape& shape() const;
  std::span<const double> values() const;
  std::size_t size() const { return values().size(); }
  double item() const;
  bool requires_grad() const;

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  struct Node;
  // Reads the node's output gradient and pushes contributions to its inputs.
  using BackwardFn = std::function<void(Graph&, const Node&)>;

  struct Node {
    std::string op;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until something flows into it
    bool requires_grad = false;
    Tensor* leaf = nullptr;
    BackwardFn backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(const Tensor& t);
  Var constant(Shape shape, std::vector<double> values);
  Var scalar(double value);
  // Links the node to `t`; backward() accumulates into t.grad if t requires grad.
  Var parameter(Tensor& t);

  // Runs reverse-mode accumulation from a single-element loss. May be called
  // more than once; every call adds into linked parameter gradients again.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  // Used by primitives. Rejects non-finite outputs with NumericError.
  Var emit(std::string op, Shape shape, std::vector<double> value, bool requires_grad,
           BackwardFn backward);
  std::span<double> grad_buffer(std::size_t id);

 private:
  std::vector<Node> nodes_;
};

// Primitives. Binary elementwise ops require equal shapes unless one operand
// has a single element.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var relu(Var a);  // derivative at 0 is 0
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var sum(Var a);
Var mean(Var a);
Var reshape(Var a, Shape shape);

// Mean binary cross-entropy on raw logits, in the log-sum-exp stable form.
Var bce_with_logits(Var logits, std::span<const double> labels);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace sharpmd::autodiff
