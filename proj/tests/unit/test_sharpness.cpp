// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "sharpmd/errors.hpp"
#include "sharpmd/sharpness.hpp"
#include "support/fixtures.hpp"

using namespace sharpmd;
using namespace sharpmd::sharpness;
using doctest::Approx;

namespace {

ProbeOptions opts(double rho, bool adaptive, std::size_t trials, std::uint64_t seed, double eta = 0.01) {
  ProbeOptions o;
  o.rho = rho;
  o.adaptive = adaptive;
  o.trials = trials;
  o.seed = seed;
  o.eta = eta;
  return o;
}

// Convex loss: sum of softplus(a_i . w) plus a small quadratic.
optim::LossFn convex_loss() {
  return [](autodiff::Graph& g, model::ParameterSet& p) {
    auto w = g.parameter(p.entries()[0].tensor);
    auto a = g.constant({3, 4}, {1, -2, 0.5, 0.3, -1, 0.7, 2, -0.4, 0.2, 0.1, -1.5, 1});
    auto z = autodiff::matmul(a, autodiff::reshape(w, {4, 1}));
    // softplus(z) = bce(z, y = 0)
    const std::vector<double> zeros(3, 0.0);
    return autodiff::bce_with_logits(autodiff::reshape(z, {3}), zeros) + 0.1 * autodiff::sum(w * w);
  };
}

}  // namespace

TEST_SUITE("sharpness") {

TEST_CASE("vanishing radius gives vanishing sharpness") {
  auto f = testing::make_net(model::ModelConfig{3, {5}, model::Activation::kTanh, 2}, 20, 5);
  for (bool adaptive : {false, true}) {
    const auto r = probe_sharpness(f.params, f.loss(), opts(1e-9, adaptive, 50, 1));
    CHECK(r.sharpness <= 1e-6);
    CHECK(r.sharpness >= -1e-9);
  }
}

TEST_CASE("one-parameter quadratic at its minimum") {
  for (double a : {0.5, 2.0, 7.0}) {
    auto p = testing::scalar_params({0.0});
    const auto r = probe_sharpness(p, testing::quadratic_loss({a}), opts(1.0, false, 4, 3));
    // the gradient is zero, but every antithetic pair hits +-1
    CHECK(r.clean_loss == 0.0);
    CHECK(r.sharpness == Approx(a / 2.0).epsilon(1e-14));
  }
}

TEST_CASE("rho zero gives zero sharpness") {
  auto f = testing::make_net(model::ModelConfig{2, {3}, model::Activation::kRelu, 1}, 8, 1);
  const auto r = probe_sharpness(f.params, f.loss(), opts(0.0, false, 10, 0));
  CHECK(r.sharpness == 0.0);
  CHECK(r.max_perturbed_loss == r.clean_loss);
}

TEST_CASE("argument checks") {
  auto f = testing::make_net(model::ModelConfig{2, {3}, model::Activation::kRelu, 1}, 8, 1);
  CHECK_THROWS_AS(probe_sharpness(f.params, f.loss(), opts(0.1, false, 0, 0)), ArgumentError);
  CHECK_THROWS_AS(probe_sharpness(f.params, f.loss(), opts(-0.1, false, 1, 0)), ArgumentError);
}

TEST_CASE("report is reproducible and parameters are restored bit-exactly") {
  auto f = testing::make_net(model::ModelConfig{4, {6}, model::Activation::kTanh, 9}, 30, 2);
  const auto before = f.params.flatten();
  const auto a = probe_sharpness(f.params, f.loss(), opts(0.05, true, 64, 11));
  const auto after = f.params.flatten();
  CHECK(std::memcmp(before.data(), after.data(), before.size() * sizeof(double)) == 0);
  const auto b = probe_sharpness(f.params, f.loss(), opts(0.05, true, 64, 11));
  CHECK(a.sharpness == b.sharpness);
  CHECK(a.clean_loss == b.clean_loss);
  CHECK(a.sharpness == a.max_perturbed_loss - a.clean_loss);
  for (double g : f.params.flatten_grads()) CHECK(g == 0.0);
  const auto c = probe_sharpness(f.params, f.loss(), opts(0.05, true, 64, 12));
  CHECK(c.seed == 12);
}

TEST_CASE("sharpness is near-nonnegative") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto f = testing::make_net(model::ModelConfig{3, {4}, model::Activation::kRelu, seed}, 16, seed);
    for (bool adaptive : {false, true}) {
      CHECK(probe_sharpness(f.params, f.loss(), opts(0.05, adaptive, 20, seed)).sharpness >= -1e-9);
    }
  }
}

TEST_CASE("monotone in rho for convex losses with a fixed seed") {
  auto p = testing::scalar_params({0.3, -0.2, 0.9, 0.1});
  const auto loss = convex_loss();
  for (bool adaptive : {false, true}) {
    double prev = -1.0;
    for (double rho : {0.001, 0.01, 0.05, 0.1, 0.3, 1.0}) {
      const double s = probe_sharpness(p, loss, opts(rho, adaptive, 40, 5)).sharpness;
      CHECK(prev <= s + 1e-9);
      prev = s;
    }
  }
}

TEST_CASE("adaptive probe is invariant under relu rescaling") {
  auto f = testing::make_rescaling_net(4);
  const double base = probe_sharpness(f.params, f.loss(), opts(0.1, true, 200, 8, 0.0)).sharpness;
  for (double c : {0.1, 10.0}) {
    auto g = f;
    model::rescale_hidden_layer(g.params, 0, c);
    const double s = probe_sharpness(g.params, g.loss(), opts(0.1, true, 200, 8, 0.0)).sharpness;
    CHECK(std::abs(s - base) <= 1e-7);
  }
}

TEST_CASE("probe agrees with a dense random-search oracle") {
  auto f = testing::make_ten_parameter_net(3);
  const auto w = f.params.flatten();
  for (bool adaptive : {false, true}) {
    const double rho = adaptive ? 0.2 : 0.05;
    const auto r = probe_sharpness(f.params, f.loss(), opts(rho, adaptive, 10000, 21));
    const double clean = f.oracle_loss(w);
    std::mt19937_64 rng(77);
    double best = -1e300;
    std::vector<double> shifted(w.size());
    for (int s = 0; s < 1000000; ++s) {
      const auto u = testing::random_unit(w.size(), rng);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = adaptive ? std::abs(w[i]) + 0.01 : 1.0;
        shifted[i] = w[i] + rho * t * u[i];
      }
      best = std::max(best, f.oracle_loss(shifted));
    }
    const double oracle = best - clean;
    CHECK(oracle > 0.0);
    CHECK(std::abs(r.sharpness - oracle) <= 0.05 * oracle);
  }
}

TEST_CASE("non-finite probe point reports infinite sharpness") {
  auto p = testing::scalar_params({0.0});
  optim::LossFn loss = [](autodiff::Graph& g, model::ParameterSet& ps) {
    return autodiff::sum(autodiff::exp(2000.0 * g.parameter(ps.entries()[0].tensor)));
  };
  const auto r = probe_sharpness(p, loss, opts(0.5, false, 4, 0));
  CHECK(std::isinf(r.sharpness));
  CHECK(!r.diagnostic.empty());
  CHECK(p.flatten()[0] == 0.0);
}

TEST_CASE("csv row layout") {
  SharpnessReport r;
  r.rho = 0.05;
  r.adaptive = true;
  r.clean_loss = 0.25;
  r.sharpness = 0.125;
  r.trials = 100;
  r.seed = 7;
  CHECK(csv_header() == "mode,rho,adaptive,clean_loss,sharpness,trials,seed");
  CHECK(csv_row("asam", r) == "asam,0.050000000000000003,1,0.25,0.125,100,7");
}

}  // TEST_SUITE
