// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Empirical sharpness: max over a rho-ball (plain L2, or the ASAM-normalized
// ball when adaptive) of L(w + eps) - L(w), estimated from the gradient-ascent
// direction plus random boundary points.

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "sharpmd/matrix.hpp"
#include "sharpmd/model.hpp"
#include "sharpmd/optim.hpp"

namespace sharpmd::sharpness {

struct ProbeOptions {
  double rho = 0.05;
  bool adaptive = false;
  double eta = 0.01;  // only used when adaptive
  std::size_t trials = 100;
  std::uint64_t seed = 0;
};

struct SharpnessReport {
  double rho = 0.0;
  double clean_loss = 0.0;
  double max_perturbed_loss = 0.0;
  double sharpness = 0.0;  // +inf when a probe point was non-finite
  bool adaptive = false;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string diagnostic;
};

// Random directions come in antithetic pairs (u, -u) drawn from `seed`; the
// unit directions depend only on the seed and parameter count, so sweeping rho
// with a fixed seed probes nested sets. Parameters are restored bit-exactly;
// parameter gradients are left zeroed.
SharpnessReport probe_sharpness(model::ParameterSet& params, const optim::LossFn& loss,
                                const ProbeOptions& opts);

SharpnessReport probe_sharpness(const model::ModelConfig& cfg, model::ParameterSet& params,
                                const Matrix& batch, std::span<const double> labels,
                                const ProbeOptions& opts);

// CSV columns: mode,rho,adaptive,clean_loss,sharpness,trials,seed
std::string csv_header();
std::string csv_row(const std::string& mode, const SharpnessReport& report);

}  // namespace sharpmd::sharpness
