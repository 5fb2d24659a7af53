// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Feed-forward binary countermeasure: feature vector -> one logit
// (higher = more bona fide).

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sharpmd/autodiff.hpp"
#include "sharpmd/matrix.hpp"

namespace sharpmd::model {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 0;

  // Throws ConfigError on zero widths or a missing hidden layer.
  void validate() const;
  // input_dim, hidden..., 1
  std::vector<std::size_t> layer_widths() const;
  std::size_t parameter_count() const;

  bool operator==(const ModelConfig&) const = default;
};

enum class ParamKind { kWeight, kBias };

struct ParamEntry {
  std::size_t layer = 0;
  ParamKind kind = ParamKind::kWeight;
  autodiff::Tensor tensor;

  std::string name() const;
};

// Ordered named parameters. Order is the insertion order and is the order
// used by flatten(), unflatten(), flatten_grads() and checkpoints.
class ParameterSet {
 public:
  void add(std::size_t layer, ParamKind kind, autodiff::Tensor tensor);

  std::span<ParamEntry> entries() noexcept { return entries_; }
  std::span<const ParamEntry> entries() const noexcept { return entries_; }
  ParamEntry& at(std::size_t layer, ParamKind kind);
  const ParamEntry& at(std::size_t layer, ParamKind kind) const;

  std::size_t num_values() const noexcept;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  std::vector<double> flatten_grads() const;
  // true for entries that belong to weight tensors (the L2 penalty set).
  std::vector<bool> weight_mask() const;
  void zero_grad();

 private:
  std::vector<ParamEntry> entries_;
};

// Glorot-uniform weights, zero biases, deterministic in cfg.seed.
ParameterSet init_model(const ModelConfig& cfg);

// Binds `params` into `graph` (gradients flow to them) and returns logits [n].
autodiff::Var forward(autodiff::Graph& graph, const ModelConfig& cfg, ParameterSet& params,
                      const Matrix& batch);

// Gradient-free scoring; one logit per row.
std::vector<double> predict(const ModelConfig& cfg, const ParameterSet& params,
                            const Matrix& batch);

// Sum of squares of weight entries; biases are excluded.
autodiff::Var l2_penalty(autodiff::Graph& graph, ParameterSet& params);
double l2_penalty_value(const ParameterSet& params);

// Multiplies layer `layer`'s weight and bias by c and divides layer+1's weight
// by c. For relu networks and c > 0 the network function is unchanged.
void rescale_hidden_layer(ParameterSet& params, std::size_t layer, double c);

// Checkpoint: config + parameters, little-endian, layout in docs/checkpoint.md.
struct Checkpoint {
  ModelConfig config;
  ParameterSet params;
  std::string tag;  // free-form; the harness stores the training mode here
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace sharpmd::model
