// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/sharpness.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "sharpmd/errors.hpp"

namespace sharpmd::sharpness {

namespace {

double evaluate(model::ParameterSet& params, const optim::LossFn& loss) {
  autodiff::Graph graph;
  return loss(graph, params).item();
}

double evaluate_at(model::ParameterSet& params, const optim::LossFn& loss,
                   std::span<const double> w, std::span<const double> eps) {
  std::vector<double> shifted(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] + eps[i];
  params.unflatten(shifted);
  return evaluate(params, loss);
}

}  // namespace

SharpnessReport probe_sharpness(model::ParameterSet& params, const optim::LossFn& loss,
                                const ProbeOptions& opts) {
  if (opts.trials < 1) throw ArgumentError("probe_sharpness needs trials >= 1");
  if (!(opts.rho >= 0.0)) throw ArgumentError("probe_sharpness needs rho >= 0");
  if (!(opts.eta >= 0.0)) throw ArgumentError("probe_sharpness needs eta >= 0");

  SharpnessReport report;
  report.rho = opts.rho;
  report.adaptive = opts.adaptive;
  report.trials = opts.trials;
  report.seed = opts.seed;

  const std::vector<double> w = params.flatten();
  const std::size_t n = w.size();
  auto fail = [&](const std::string& where, const std::exception& e) {
    params.unflatten(w);
    params.zero_grad();
    report.sharpness = std::numeric_limits<double>::infinity();
    report.max_perturbed_loss = std::numeric_limits<double>::infinity();
    report.diagnostic = where + ": " + e.what();
    return report;
  };

  std::vector<double> grad;
  try {
    params.zero_grad();
    autodiff::Graph graph;
    autodiff::Var l = loss(graph, params);
    report.clean_loss = l.item();
    graph.backward(l);
    grad = params.flatten_grads();
    params.zero_grad();
  } catch (const NumericError& e) {
    return fail("clean loss", e);
  }
  report.max_perturbed_loss = report.clean_loss;
  if (opts.rho == 0.0) return report;

  optim::SharpnessConfig scfg;
  scfg.mode = opts.adaptive ? optim::SharpnessMode::kAsam : optim::SharpnessMode::kSam;
  scfg.rho = opts.rho;
  scfg.eta = opts.eta;

  std::vector<double> scale(n, 1.0);
  if (opts.adaptive) {
    for (std::size_t i = 0; i < n; ++i) scale[i] = std::abs(w[i]) + opts.eta;
  }

  try {
    const auto ascent = opts.adaptive ? optim::asam_perturbation(w, grad, scfg)
                                      : optim::sam_perturbation(grad, scfg);
    report.max_perturbed_loss = evaluate_at(params, loss, w, ascent);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> dir(n), eps(n);
    for (std::size_t t = 0; t < opts.trials; ++t) {
      if (t % 2 == 0) {
        double norm = 0.0;
        do {
          norm = 0.0;
          for (double& d : dir) {
            d = normal(rng);
            norm += d * d;
          }
          norm = std::sqrt(norm);
        } while (norm == 0.0);
        for (double& d : dir) d /= norm;
      } else {
        for (double& d : dir) d = -d;
      }
      for (std::size_t i = 0; i < n; ++i) eps[i] = opts.rho * scale[i] * dir[i];
      report.max_perturbed_loss = std::max(report.max_perturbed_loss,
                                           evaluate_at(params, loss, w, eps));
    }
  } catch (const NumericError& e) {
    return fail("perturbed loss", e);
  }
  params.unflatten(w);
  report.sharpness = report.max_perturbed_loss - report.clean_loss;
  return report;
}

SharpnessReport probe_sharpness(const model::ModelConfig& cfg, model::ParameterSet& params,
                                const Matrix& batch, std::span<const double> labels,
                                const ProbeOptions& opts) {
  return probe_sharpness(params, optim::batch_loss(cfg, batch, labels), opts);
}

std::string csv_header() { return "mode,rho,adaptive,clean_loss,sharpness,trials,seed"; }

std::string csv_row(const std::string& mode, const SharpnessReport& r) {
  return fmt::format("{},{:.17g},{},{:.17g},{:.17g},{},{}", mode, r.rho, r.adaptive ? 1 : 0,
                     r.clean_loss, r.sharpness, r.trials, r.seed);
}

}  // namespace sharpmd::sharpness
