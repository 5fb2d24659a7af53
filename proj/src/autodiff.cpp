// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sharpmd/errors.hpp"

namespace sharpmd::autodiff {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
  if (numel(shape_) != values_.size()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " needs " +
                         std::to_string(numel(shape_)) + " values, got " +
                         std::to_string(values_.size()));
  }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ArgumentError("item() on tensor of shape " + to_string(shape_));
  }
  return values_[0];
}

std::vector<double> Tensor::grad() const {
  if (grad_) return *grad_;
  return std::vector<double>(values_.size(), 0.0);
}

void Tensor::accumulate_grad(std::span<const double> delta) {
  if (delta.size() != values_.size()) {
    throw DimensionError("gradient size " + std::to_string(delta.size()) +
                         " does not match tensor " + to_string(shape_));
  }
  if (!grad_) grad_.emplace(values_.size(), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) (*grad_)[i] += delta[i];
  if (!all_finite(*grad_)) throw NumericError("non-finite gradient accumulated");
}

void Tensor::zero_grad() { grad_.emplace(values_.size(), 0.0); }

// ---------------------------------------------------------------------------
// Var

const Shape& Var::shape() const { return graph_->node(id_).shape; }
std::span<const double> Var::values() const { return graph_->node(id_).value; }
bool Var::requires_grad() const { return graph_->node(id_).requires_grad; }

double Var::item() const {
  const auto& n = graph_->node(id_);
  if (n.value.size() != 1) throw ArgumentError("item() on node of shape " + to_string(n.shape));
  return n.value[0];
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::emit(std::string op, Shape shape, std::vector<double> value, bool requires_grad,
                BackwardFn backward) {
  if (!all_finite(value)) throw NumericError("non-finite value produced by " + op);
  Node n;
  n.op = std::move(op);
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(const Tensor& t) {
  return emit("constant", t.shape(), {t.values().begin(), t.values().end()}, false, {});
}

Var Graph::constant(Shape shape, std::vector<double> values) {
  return constant(Tensor(std::move(shape), std::move(values)));
}

Var Graph::scalar(double value) { return emit("constant", Shape{}, {value}, false, {}); }

Var Graph::parameter(Tensor& t) {
  Var v = emit("parameter", t.shape(), {t.values().begin(), t.values().end()},
               t.requires_grad(), {});
  nodes_.back().leaf = t.requires_grad() ? &t : nullptr;
  return v;
}

std::span<double> Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw ArgumentError("backward() on a node from another graph");
  const std::size_t root = loss.id();
  if (nodes_.at(root).value.size() != 1) {
    throw ArgumentError("backward() needs a single-element loss, got shape " +
                        to_string(nodes_[root].shape));
  }
  for (auto& n : nodes_) n.grad.clear();
  if (!nodes_[root].requires_grad) return;
  grad_buffer(root)[0] = 1.0;

  for (std::size_t id = root + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (!all_finite(n.grad)) throw NumericError("non-finite gradient at " + n.op);
    if (n.backward) n.backward(*this, n);
    if (n.leaf != nullptr) n.leaf->accumulate_grad(n.grad);
  }
}

// ---------------------------------------------------------------------------
// Primitives

namespace {

Graph& same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw ArgumentError("operands belong to different graphs");
  return a.graph();
}

enum class Bcast { kNone, kLeftScalar, kRightScalar };

Bcast check_binary(const char* op, Var a, Var b) {
  if (a.shape() == b.shape()) return Bcast::kNone;
  if (a.size() == 1) return Bcast::kLeftScalar;
  if (b.size() == 1) return Bcast::kRightScalar;
  throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                       to_string(b.shape()));
}

// Shared driver for add/sub/mul. `fwd(x, y)` gives the value, `dx`/`dy` give the
// local partials at (x, y).
template <typename Fwd, typename Dx, typename Dy>
Var binary(const char* op, Var a, Var b, Fwd fwd, Dx dx, Dy dy) {
  Graph& g = same_graph(a, b);
  const Bcast mode = check_binary(op, a, b);
  const Shape out_shape = mode == Bcast::kLeftScalar ? b.shape() : a.shape();
  const std::size_t n = numel(out_shape);
  auto av = a.values();
  auto bv = b.values();
  auto at = [&](std::span<const double> v, std::size_t i) { return v.size() == 1 ? v[0] : v[i]; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(at(av, i), at(bv, i));

  const std::size_t ia = a.id(), ib = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return g.emit(op, out_shape, std::move(out), ra || rb,
                [=](Graph& gr, const Graph::Node& self) {
                  const auto& x = gr.node(ia).value;
                  const auto& y = gr.node(ib).value;
                  auto pick = [](const std::vector<double>& v, std::size_t i) {
                    return v.size() == 1 ? v[0] : v[i];
                  };
                  const std::size_t m = self.grad.size();
                  if (ra) {
                    auto ga = gr.grad_buffer(ia);
                    for (std::size_t i = 0; i < m; ++i) {
                      const double d = self.grad[i] * dx(pick(x, i), pick(y, i));
                      ga[ga.size() == 1 ? 0 : i] += d;
                    }
                  }
                  if (rb) {
                    auto gb = gr.grad_buffer(ib);
                    for (std::size_t i = 0; i < m; ++i) {
                      const double d = self.grad[i] * dy(pick(x, i), pick(y, i));
                      gb[gb.size() == 1 ? 0 : i] += d;
                    }
                  }
                });
}

// Shared driver for unary maps where the local derivative is a function of
// input x and output y.
template <typename Fwd, typename Deriv>
Var unary(const char* op, Var a, Fwd fwd, Deriv deriv) {
  Graph& g = a.graph();
  auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  const std::size_t ia = a.id();
  return g.emit(op, a.shape(), std::move(out), a.requires_grad(),
                [=](Graph& gr, const Graph::Node& self) {
                  const auto& x = gr.node(ia).value;
                  auto ga = gr.grad_buffer(ia);
                  for (std::size_t i = 0; i < ga.size(); ++i) {
                    ga[i] += self.grad[i] * deriv(x[i], self.value[i]);
                  }
                });
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw DimensionError("matmul: cannot multiply " + to_string(sa) + " by " + to_string(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return g.emit("matmul", Shape{m, n}, std::move(out), ra || rb,
                [=](Graph& gr, const Graph::Node& self) {
                  const auto& dc = self.grad;
                  if (ra) {
                    // dA = dC * B^T
                    const auto& bvals = gr.node(ib).value;
                    auto ga = gr.grad_buffer(ia);
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += dc[i * n + j] * bvals[p * n + j];
                        ga[i * k + p] += acc;
                      }
                    }
                  }
                  if (rb) {
                    // dB = A^T * dC
                    const auto& avals = gr.node(ia).value;
                    auto gb = gr.grad_buffer(ib);
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        const double aip = avals[i * k + p];
                        if (aip == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * dc[i * n + j];
                      }
                    }
                  }
                });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sum(Var a) {
  auto av = a.values();
  double total = 0.0;
  for (double x : av) total += x;
  const std::size_t ia = a.id();
  return a.graph().emit("sum", Shape{}, {total}, a.requires_grad(),
                        [ia](Graph& gr, const Graph::Node& self) {
                          auto ga = gr.grad_buffer(ia);
                          for (double& gi : ga) gi += self.grad[0];
                        });
}

Var mean(Var a) {
  if (a.size() == 0) throw ArgumentError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: " + to_string(a.shape()) + " to " + to_string(shape));
  }
  auto av = a.values();
  const std::size_t ia = a.id();
  return a.graph().emit("reshape", std::move(shape), {av.begin(), av.end()}, a.requires_grad(),
                        [ia](Graph& gr, const Graph::Node& self) {
                          auto ga = gr.grad_buffer(ia);
                          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
                        });
}

Var bce_with_logits(Var logits, std::span<const double> labels) {
  const std::size_t n = logits.size();
  if (n == 0 || labels.empty()) throw ArgumentError("bce_with_logits: empty batch");
  if (labels.size() != n) {
    throw DimensionError("bce_with_logits: " + std::to_string(n) + " logits vs " +
                         std::to_string(labels.size()) + " labels");
  }
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw ArgumentError("bce_with_logits: labels must be 0 or 1");
  }
  auto z = logits.values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // max(z, 0) - z*y + log(1 + exp(-|z|))
    total += std::max(z[i], 0.0) - z[i] * labels[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  std::vector<double> ys(labels.begin(), labels.end());
  const std::size_t iz = logits.id();
  return logits.graph().emit(
      "bce_with_logits", Shape{}, {total / static_cast<double>(n)}, logits.requires_grad(),
      [iz, ys = std::move(ys)](Graph& gr, const Graph::Node& self) {
        const auto& zv = gr.node(iz).value;
        auto gz = gr.grad_buffer(iz);
        const double inv_n = 1.0 / static_cast<double>(zv.size());
        for (std::size_t i = 0; i < zv.size(); ++i) {
          gz[i] += self.grad[0] * (stable_sigmoid(zv[i]) - ys[i]) * inv_n;
        }
      });
}

}  // namespace sharpmd::autodiff
