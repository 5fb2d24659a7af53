// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Small networks and datasets shared by the unit and acceptance tests.

#pragma once

#include <random>
#include <vector>

#include "sharpmd/autodiff.hpp"
#include "sharpmd/matrix.hpp"
#include "sharpmd/model.hpp"
#include "sharpmd/optim.hpp"
#include "support/oracles.hpp"

namespace sharpmd::testing {

struct NetFixture {
  model::ModelConfig cfg;
  model::ParameterSet params;
  Matrix x;
  std::vector<double> y;

  optim::LossFn loss() const { return optim::batch_loss(cfg, x, y); }
  double oracle_loss(std::span<const double> w) const { return mlp_loss(cfg, w, x, y); }
};

// Random network with jittered parameters (so biases are nonzero) and a random
// labelled batch.
inline NetFixture make_net(model::ModelConfig cfg, std::size_t rows, std::uint64_t seed,
                           double jitter = 0.3) {
  NetFixture f;
  f.cfg = cfg;
  f.params = model::init_model(cfg);
  std::mt19937_64 rng(seed);
  auto flat = f.params.flatten();
  std::normal_distribution<double> n(0.0, jitter);
  for (double& v : flat) v += n(rng);
  f.params.unflatten(flat);
  f.x = random_matrix(rows, cfg.input_dim, rng);
  f.y = random_labels(rows, rng);
  return f;
}

// 10 parameters: 1 input, 3 hidden tanh units, 1 output.
inline NetFixture make_ten_parameter_net(std::uint64_t seed) {
  return make_net(model::ModelConfig{1, {3}, model::Activation::kTanh, seed}, 16, seed * 7919 + 1, 0.5);
}

// Relu network used for the rescaling tests. Hidden layer 0 is the one rescaled.
inline NetFixture make_rescaling_net(std::uint64_t seed) {
  return make_net(model::ModelConfig{3, {4, 3}, model::Activation::kRelu, seed}, 24, seed + 500, 0.4);
}

// Perturbed loss L(w + eps) where eps is the first-order maximizer for `mode`.
inline double perturbed_loss(NetFixture& f, const optim::SharpnessConfig& cfg) {
  f.params.zero_grad();
  autodiff::Graph g;
  auto l = f.loss()(g, f.params);
  g.backward(l);
  const auto grad = f.params.flatten_grads();
  f.params.zero_grad();
  const auto w = f.params.flatten();
  const auto eps = cfg.mode == optim::SharpnessMode::kAsam ? optim::asam_perturbation(w, grad, cfg)
                                                           : optim::sam_perturbation(grad, cfg);
  std::vector<double> shifted(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] + eps[i];
  return f.oracle_loss(shifted);
}

// One scalar parameter held as a bias (so the L2 penalty never touches it).
inline model::ParameterSet scalar_params(std::vector<double> w) {
  model::ParameterSet p;
  const std::size_t n = w.size();
  p.add(0, model::ParamKind::kBias, autodiff::Tensor({n}, std::move(w), true));
  return p;
}

// L(w) = 0.5 * sum(a_i * w_i^2)
inline optim::LossFn quadratic_loss(std::vector<double> a) {
  return [a](autodiff::Graph& g, model::ParameterSet& p) {
    auto v = g.parameter(p.entries()[0].tensor);
    auto av = g.constant({a.size()}, a);
    return 0.5 * autodiff::sum(av * v * v);
  };
}

}  // namespace sharpmd::testing
