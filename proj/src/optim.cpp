// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/optim.hpp"

#include <cmath>

#include "sharpmd/errors.hpp"

namespace sharpmd::optim {

std::string to_string(SharpnessMode mode) {
  switch (mode) {
    case SharpnessMode::kNone: return "none";
    case SharpnessMode::kSam: return "sam";
    case SharpnessMode::kAsam: return "asam";
  }
  return "?";
}

SharpnessMode parse_sharpness_mode(const std::string& name) {
  if (name == "none") return SharpnessMode::kNone;
  if (name == "sam") return SharpnessMode::kSam;
  if (name == "asam") return SharpnessMode::kAsam;
  throw ConfigError("unknown sharpness mode '" + name + "' (expected none, sam or asam)");
}

SharpnessConfig SharpnessConfig::defaults(SharpnessMode mode) {
  SharpnessConfig cfg;
  cfg.mode = mode;
  cfg.rho = mode == SharpnessMode::kAsam ? 0.5 : 0.05;
  return cfg;
}

void SharpnessConfig::validate() const {
  if (norm_order != 2) throw ConfigError("only norm_order 2 is supported");
  if (mode != SharpnessMode::kNone && !(rho > 0.0)) {
    throw ConfigError("rho must be positive when sharpness mode is " + to_string(mode));
  }
  if (!(eta >= 0.0)) throw ConfigError("eta must be nonnegative");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
}

namespace {

void check_grads(const model::ParameterSet& params, std::span<const double> grads) {
  if (grads.size() != params.num_values()) {
    throw DimensionError("gradient has " + std::to_string(grads.size()) + " entries, parameters " +
                         std::to_string(params.num_values()));
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient at flat index " + std::to_string(i) +
                         "; step refused");
    }
  }
}

// g + 2 lambda w on weight entries.
std::vector<double> penalized(const model::ParameterSet& params, std::span<const double> grads,
                              double lambda) {
  std::vector<double> g(grads.begin(), grads.end());
  if (lambda == 0.0) return g;
  const auto w = params.flatten();
  const auto mask = params.weight_mask();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i]) g[i] += 2.0 * lambda * w[i];
  }
  return g;
}

double l2_norm(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void sgd_step(model::ParameterSet& params, std::span<const double> grads,
              BaseOptimizerState& state) {
  check_grads(params, grads);
  const auto& cfg = state.config;
  const auto g = penalized(params, grads, cfg.weight_decay);
  auto w = params.flatten();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * g[i];
  params.unflatten(w);
  ++state.step_count;
}

void adam_step(model::ParameterSet& params, std::span<const double> grads,
               BaseOptimizerState& state) {
  check_grads(params, grads);
  const auto& cfg = state.config;
  const std::size_t n = grads.size();
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n) {
    throw DimensionError("adam moments do not match parameter count");
  }
  const auto g = penalized(params, grads, cfg.weight_decay);
  const double t = static_cast<double>(state.step_count + 1);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  auto w = params.flatten();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    w[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
  params.unflatten(w);
  ++state.step_count;
}

void base_step(model::ParameterSet& params, std::span<const double> grads,
               BaseOptimizerState& state) {
  if (state.config.kind == OptimizerKind::kSgd) {
    sgd_step(params, grads, state);
  } else {
    adam_step(params, grads, state);
  }
}

std::vector<double> sam_perturbation(std::span<const double> grads, const SharpnessConfig& cfg) {
  std::vector<double> eps(grads.size(), 0.0);
  const double norm = l2_norm(grads);
  if (!(norm > kNormGuard)) return eps;
  const double k = cfg.rho / norm;
  for (std::size_t i = 0; i < grads.size(); ++i) eps[i] = k * grads[i];
  return eps;
}

std::vector<double> asam_perturbation(std::span<const double> params,
                                      std::span<const double> grads,
                                      const SharpnessConfig& cfg) {
  if (params.size() != grads.size()) {
    throw DimensionError("asam_perturbation: parameter and gradient sizes differ");
  }
  std::vector<double> eps(grads.size(), 0.0);
  std::vector<double> tg(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) tg[i] = (std::abs(params[i]) + cfg.eta) * grads[i];
  const double norm = l2_norm(tg);
  if (!(norm > kNormGuard)) return eps;
  const double k = cfg.rho / norm;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    eps[i] = k * (std::abs(params[i]) + cfg.eta) * tg[i];
  }
  return eps;
}

LossFn batch_loss(const model::ModelConfig& cfg, const Matrix& batch,
                  std::span<const double> labels) {
  return [&cfg, &batch, labels](autodiff::Graph& g, model::ParameterSet& p) {
    return autodiff::bce_with_logits(model::forward(g, cfg, p, batch), labels);
  };
}

namespace {

// Loss value and flattened gradient at the current parameters.
double loss_and_grad(model::ParameterSet& params, const LossFn& loss, std::vector<double>& grad) {
  params.zero_grad();
  autodiff::Graph graph;
  autodiff::Var l = loss(graph, params);
  const double value = l.item();
  graph.backward(l);
  grad = params.flatten_grads();
  return value;
}

}  // namespace

StepResult sharpness_aware_step(model::ParameterSet& params, const LossFn& loss,
                                const SharpnessConfig& cfg, BaseOptimizerState& state) {
  cfg.validate();
  StepResult result;
  std::vector<double> grad;
  try {
    result.clean_loss = loss_and_grad(params, loss, grad);
  } catch (const NumericError& e) {
    params.zero_grad();
    result.diagnostic = std::string("clean pass: ") + e.what();
    return result;
  }

  if (cfg.mode == SharpnessMode::kNone) {
    result.perturbed_loss = result.clean_loss;
  } else {
    const std::vector<double> w = params.flatten();
    const auto eps = cfg.mode == SharpnessMode::kSam ? sam_perturbation(grad, cfg)
                                                     : asam_perturbation(w, grad, cfg);
    std::vector<double> shifted(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] + eps[i];
    params.unflatten(shifted);
    try {
      result.perturbed_loss = loss_and_grad(params, loss, grad);
    } catch (const NumericError& e) {
      params.unflatten(w);
      params.zero_grad();
      result.diagnostic = std::string("perturbed pass: ") + e.what();
      return result;
    }
    params.unflatten(w);
  }

  try {
    base_step(params, grad, state);
  } catch (const NumericError& e) {
    result.diagnostic = e.what();
    return result;
  }
  result.applied = true;
  return result;
}

StepResult sharpness_aware_step(const model::ModelConfig& model_cfg, model::ParameterSet& params,
                                const Matrix& batch, std::span<const double> labels,
                                const SharpnessConfig& cfg, BaseOptimizerState& state) {
  return sharpness_aware_step(params, batch_loss(model_cfg, batch, labels), cfg, state);
}

}  // namespace sharpmd::optim
