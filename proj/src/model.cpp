// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "sharpmd/errors.hpp"

namespace sharpmd::model {

using autodiff::Graph;
using autodiff::Shape;
using autodiff::Tensor;
using autodiff::Var;

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + name + "' (expected relu or tanh)");
}

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("model input_dim must be positive");
  if (hidden_dims.empty()) throw ConfigError("model needs at least one hidden layer");
  for (std::size_t w : hidden_dims) {
    if (w == 0) throw ConfigError("model hidden layer of width 0");
  }
}

std::vector<std::size_t> ModelConfig::layer_widths() const {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden_dims.begin(), hidden_dims.end());
  widths.push_back(1);
  return widths;
}

std::size_t ModelConfig::parameter_count() const {
  const auto w = layer_widths();
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) count += w[i] * w[i + 1] + w[i + 1];
  return count;
}

std::string ParamEntry::name() const {
  return "layer" + std::to_string(layer) + (kind == ParamKind::kWeight ? ".weight" : ".bias");
}

// ---------------------------------------------------------------------------
// ParameterSet

void ParameterSet::add(std::size_t layer, ParamKind kind, Tensor tensor) {
  for (const auto& e : entries_) {
    if (e.layer == layer && e.kind == kind) {
      throw ArgumentError("duplicate parameter " + e.name());
    }
  }
  entries_.push_back({layer, kind, std::move(tensor)});
}

ParamEntry& ParameterSet::at(std::size_t layer, ParamKind kind) {
  for (auto& e : entries_) {
    if (e.layer == layer && e.kind == kind) return e;
  }
  throw ArgumentError("no parameter layer" + std::to_string(layer) +
                      (kind == ParamKind::kWeight ? ".weight" : ".bias"));
}

const ParamEntry& ParameterSet::at(std::size_t layer, ParamKind kind) const {
  return const_cast<ParameterSet*>(this)->at(layer, kind);
}

std::size_t ParameterSet::num_values() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_values());
  for (const auto& e : entries_) {
    auto v = e.tensor.values();
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

void ParameterSet::unflatten(std::span<const double> flat) {
  if (flat.size() != num_values()) {
    throw DimensionError("unflatten: " + std::to_string(flat.size()) + " values for " +
                         std::to_string(num_values()) + " parameters");
  }
  std::size_t off = 0;
  for (auto& e : entries_) {
    auto v = e.tensor.values();
    std::copy(flat.begin() + off, flat.begin() + off + v.size(), v.begin());
    off += v.size();
  }
}

std::vector<double> ParameterSet::flatten_grads() const {
  std::vector<double> flat;
  flat.reserve(num_values());
  for (const auto& e : entries_) {
    auto g = e.tensor.grad();
    flat.insert(flat.end(), g.begin(), g.end());
  }
  return flat;
}

std::vector<bool> ParameterSet::weight_mask() const {
  std::vector<bool> mask;
  mask.reserve(num_values());
  for (const auto& e : entries_) mask.insert(mask.end(), e.tensor.size(), e.kind == ParamKind::kWeight);
  return mask;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

// ---------------------------------------------------------------------------
// Construction and evaluation

ParameterSet init_model(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const auto widths = cfg.layer_widths();
  ParameterSet params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(fan_in * fan_out);
    for (double& x : w) x = dist(rng);
    params.add(l, ParamKind::kWeight, Tensor(Shape{fan_in, fan_out}, std::move(w), true));
    params.add(l, ParamKind::kBias, Tensor::zeros(Shape{fan_out}, true));
  }
  return params;
}

namespace {

template <typename Bind>
Var build_forward(Graph& g, const ModelConfig& cfg, const Matrix& batch, Bind bind) {
  cfg.validate();
  if (batch.cols != cfg.input_dim) {
    throw DimensionError("batch width " + std::to_string(batch.cols) +
                         " does not match model input_dim " + std::to_string(cfg.input_dim));
  }
  const std::size_t n = batch.rows;
  const std::size_t layers = cfg.hidden_dims.size() + 1;
  Var h = g.constant(Shape{n, batch.cols}, batch.values);
  Var ones = g.constant(Shape{n, 1}, std::vector<double>(n, 1.0));
  for (std::size_t l = 0; l < layers; ++l) {
    Var w = bind(l, ParamKind::kWeight);
    Var b = bind(l, ParamKind::kBias);
    if (w.shape().size() != 2 || w.shape()[0] != h.shape()[1]) {
      throw DimensionError("layer " + std::to_string(l) + " weight " +
                           autodiff::to_string(w.shape()) + " does not fit input " +
                           autodiff::to_string(h.shape()));
    }
    Var z = matmul(h, w) + matmul(ones, reshape(b, Shape{1, b.size()}));
    if (l + 1 < layers) {
      h = cfg.activation == Activation::kRelu ? relu(z) : autodiff::tanh(z);
    } else {
      h = z;
    }
  }
  return reshape(h, Shape{n});
}

}  // namespace

Var forward(Graph& graph, const ModelConfig& cfg, ParameterSet& params, const Matrix& batch) {
  return build_forward(graph, cfg, batch, [&](std::size_t l, ParamKind k) {
    return graph.parameter(params.at(l, k).tensor);
  });
}

std::vector<double> predict(const ModelConfig& cfg, const ParameterSet& params,
                            const Matrix& batch) {
  Graph graph;
  Var out = build_forward(graph, cfg, batch, [&](std::size_t l, ParamKind k) {
    return graph.constant(params.at(l, k).tensor);
  });
  auto v = out.values();
  return {v.begin(), v.end()};
}

Var l2_penalty(Graph& graph, ParameterSet& params) {
  Var total = graph.scalar(0.0);
  for (auto& e : params.entries()) {
    if (e.kind != ParamKind::kWeight) continue;
    Var w = graph.parameter(e.tensor);
    total = total + sum(w * w);
  }
  return total;
}

double l2_penalty_value(const ParameterSet& params) {
  double total = 0.0;
  for (const auto& e : params.entries()) {
    if (e.kind != ParamKind::kWeight) continue;
    double s = 0.0;
    for (double w : e.tensor.values()) s += w * w;
    total += s;
  }
  return total;
}

void rescale_hidden_layer(ParameterSet& params, std::size_t layer, double c) {
  if (!(c > 0.0)) throw ArgumentError("rescale factor must be positive");
  auto& w = params.at(layer, ParamKind::kWeight).tensor;
  auto& b = params.at(layer, ParamKind::kBias).tensor;
  auto& next = params.at(layer + 1, ParamKind::kWeight).tensor;
  for (double& x : w.values()) x *= c;
  for (double& x : b.values()) x *= c;
  for (double& x : next.values()) x /= c;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'S', 'H', 'R', 'P', 'M', 'D', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto* c = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    auto s = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = bytes(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& cfg = ckpt.config;
  cfg.validate();
  if (ckpt.params.num_values() != cfg.parameter_count()) {
    throw DimensionError("checkpoint parameters do not match config");
  }
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(cfg.input_dim));
  w.u32(cfg.activation == Activation::kRelu ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(cfg.hidden_dims.size()));
  for (std::size_t h : cfg.hidden_dims) w.u32(static_cast<std::uint32_t>(h));
  w.u64(cfg.seed);
  w.u32(static_cast<std::uint32_t>(ckpt.tag.size()));
  w.bytes(ckpt.tag.data(), ckpt.tag.size());
  const auto flat = ckpt.params.flatten();
  w.u64(flat.size());
  for (double x : flat) w.f64(x);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.bytes(sizeof kMagic);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw ParseError("not a sharpmd checkpoint (bad magic)");
  }
  if (const auto v = r.u32(); v != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint ckpt;
  ckpt.config.input_dim = r.u32();
  const auto act = r.u32();
  if (act > 1) throw ParseError("bad activation code " + std::to_string(act));
  ckpt.config.activation = act == 0 ? Activation::kRelu : Activation::kTanh;
  const auto n_hidden = r.u32();
  r.need(4ull * n_hidden);
  for (std::uint32_t i = 0; i < n_hidden; ++i) ckpt.config.hidden_dims.push_back(r.u32());
  ckpt.config.seed = r.u64();
  const auto tag_len = r.u32();
  auto tag = r.bytes(tag_len);
  ckpt.tag.assign(tag.begin(), tag.end());
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint config invalid: ") + e.what());
  }
  const auto count = r.u64();
  if (count != ckpt.config.parameter_count()) {
    throw ParseError("checkpoint holds " + std::to_string(count) + " parameters, config needs " +
                     std::to_string(ckpt.config.parameter_count()));
  }
  ckpt.params = init_model(ckpt.config);
  std::vector<double> flat(count);
  for (auto& x : flat) x = r.f64();
  if (!r.done()) throw ParseError("trailing bytes after checkpoint parameters");
  ckpt.params.unflatten(flat);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace sharpmd::model
