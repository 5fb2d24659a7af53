// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Base optimizers and the sharpness-aware (SAM / ASAM) two-pass update.
//
// All vectors here are flattened in ParameterSet order. The L2 term
// lambda * ||w||^2 contributes 2 * lambda * w to weight entries only.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sharpmd/autodiff.hpp"
#include "sharpmd/matrix.hpp"
#include "sharpmd/model.hpp"

namespace sharpmd::optim {

enum class SharpnessMode { kNone, kSam, kAsam };

std::string to_string(SharpnessMode mode);
SharpnessMode parse_sharpness_mode(const std::string& name);

// Gradient norms at or below this produce a zero perturbation.
inline constexpr double kNormGuard = 1e-12;

struct SharpnessConfig {
  SharpnessMode mode = SharpnessMode::kNone;
  double rho = 0.05;
  int norm_order = 2;
  double eta = 0.01;  // added to |w| inside the ASAM normalization operator

  // rho 0.05 for SAM, 0.5 for ASAM.
  static SharpnessConfig defaults(SharpnessMode mode);
  void validate() const;
};

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // lambda

  void validate() const;
};

struct BaseOptimizerState {
  OptimizerConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;

  BaseOptimizerState() = default;
  explicit BaseOptimizerState(OptimizerConfig cfg) : config(cfg) { config.validate(); }
};

// w <- w - lr * (g + 2 lambda w)
void sgd_step(model::ParameterSet& params, std::span<const double> grads,
              BaseOptimizerState& state);
// Bias-corrected Adam on g + 2 lambda w.
void adam_step(model::ParameterSet& params, std::span<const double> grads,
               BaseOptimizerState& state);
// Dispatches on state.config.kind. Non-finite or mis-sized grads throw before
// anything is modified.
void base_step(model::ParameterSet& params, std::span<const double> grads,
               BaseOptimizerState& state);

// rho * g / ||g||_2 over the whole flattened vector.
std::vector<double> sam_perturbation(std::span<const double> grads, const SharpnessConfig& cfg);

// rho * T^2 g / ||T g||_2 with T = diag(|w| + eta); satisfies ||T^-1 eps||_2 = rho.
std::vector<double> asam_perturbation(std::span<const double> params,
                                      std::span<const double> grads,
                                      const SharpnessConfig& cfg);

// Builds the scalar training loss L_S for the current parameter values.
using LossFn = std::function<autodiff::Var(autodiff::Graph&, model::ParameterSet&)>;

// Mean BCE of the model on one batch.
LossFn batch_loss(const model::ModelConfig& cfg, const Matrix& batch,
                  std::span<const double> labels);

struct StepResult {
  double clean_loss = 0.0;      // L_S(w)
  double perturbed_loss = 0.0;  // L_S(w + eps); equals clean_loss when mode is none
  bool applied = false;
  std::string diagnostic;  // why the step was refused, empty otherwise
};

// One training step. With mode none this is a plain base step; otherwise the
// gradient at w gives eps, the gradient at w + eps drives the base step, and w
// is restored bit-exactly in between. Refused steps leave params and state
// untouched.
StepResult sharpness_aware_step(model::ParameterSet& params, const LossFn& loss,
                                const SharpnessConfig& cfg, BaseOptimizerState& state);

StepResult sharpness_aware_step(const model::ModelConfig& model_cfg, model::ParameterSet& params,
                                const Matrix& batch, std::span<const double> labels,
                                const SharpnessConfig& cfg, BaseOptimizerState& state);

}  // namespace sharpmd::optim
