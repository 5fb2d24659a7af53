// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "sharpmd/errors.hpp"
#include "sharpmd/metrics.hpp"
#include "support/oracles.hpp"

using namespace sharpmd;
using namespace sharpmd::metrics;
using doctest::Approx;

namespace {

ScoredTrials make(std::vector<double> bona, std::vector<double> spoof, std::vector<int> spoof_modes = {}) {
  ScoredTrials t;
  for (double s : bona) {
    t.scores.push_back(s);
    t.labels.push_back(1);
    t.attack_mode.push_back(0);
  }
  for (std::size_t i = 0; i < spoof.size(); ++i) {
    t.scores.push_back(spoof[i]);
    t.labels.push_back(0);
    t.attack_mode.push_back(spoof_modes.empty() ? 1 : spoof_modes[i]);
  }
  return t;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("eer examples") {
  CHECK(eer(make({0.9, 0.8}, {0.2, 0.1})) == 0.0);
  CHECK(eer(make({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3})) == Approx(0.5).epsilon(1e-15));
  const auto t = make({0.6, 0.4}, {0.5});
  const double e = eer(t);
  CHECK(e == Approx(testing::sweep_eer_interpolated(t.scores, t.labels)).epsilon(1e-15));
  CHECK(e == Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(e - testing::sweep_eer(t.scores, t.labels)) <= 0.5);
}

TEST_CASE("eer of fully reversed scores is one") {
  CHECK(eer(make({0.1, 0.2}, {0.8, 0.9})) == 1.0);
}

TEST_CASE("eer needs both classes") {
  CHECK_THROWS_AS(eer(make({0.1, 0.2}, {})), ArgumentError);
  CHECK_THROWS_AS(eer(make({}, {0.1})), ArgumentError);
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> bad{1, 2};
  CHECK_THROWS_AS(eer(s, bad), ArgumentError);
}

TEST_CASE("eer is zero exactly when the classes separate") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> bona(1 + rng() % 10), spoof(1 + rng() % 10);
    for (auto& v : bona) v = n(rng) + 1.0;
    for (auto& v : spoof) v = n(rng) - 1.0;
    const double e = eer(make(bona, spoof));
    const bool separated = *std::min_element(bona.begin(), bona.end()) > *std::max_element(spoof.begin(), spoof.end());
    CHECK((e == 0.0) == separated);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("eer agrees with the brute-force sweep") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t nb = 1 + rng() % 25, ns = 1 + rng() % 25;
    std::vector<double> bona(nb), spoof(ns);
    // coarse rounding forces ties between and within classes
    const bool ties = trial % 3 == 0;
    for (auto& v : bona) v = ties ? std::round(2 * (n(rng) + 0.7)) / 2 : n(rng) + 0.7;
    for (auto& v : spoof) v = ties ? std::round(2 * n(rng)) / 2 : n(rng);
    const auto t = make(bona, spoof);
    const double e = eer(t);
    CHECK(e == Approx(testing::sweep_eer_interpolated(t.scores, t.labels)).epsilon(1e-12));
    // the half-step bound assumes every threshold moves only one of FAR / FRR
    if (!ties) {
      CHECK(std::abs(e - testing::sweep_eer(t.scores, t.labels)) <= 1.0 / (2.0 * double(std::min(nb, ns))) + 1e-12);
    }
  }
}

TEST_CASE("eer is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> bona(2 + rng() % 20), spoof(2 + rng() % 20);
    for (auto& v : bona) v = u(rng) + 0.5;
    for (auto& v : spoof) v = u(rng);
    auto t = make(bona, spoof);
    const double base = eer(t);
    auto lin = t;
    for (auto& s : lin.scores) s = 2 * s + 1;
    auto th = t;
    for (auto& s : th.scores) s = std::tanh(s);
    CHECK(eer(lin) == base);
    CHECK(eer(th) == base);
  }
}

TEST_CASE("per-group eer") {
  // one group: equals pooled
  const auto one = make({0.9, 0.4, 0.7}, {0.5, 0.1}, {3, 3});
  const auto g1 = eer_per_group(one);
  CHECK(g1.groups.size() == 1);
  CHECK(g1.groups.at(3) == g1.pooled);

  // two groups, six trials
  const auto two = make({0.9, 0.5, 0.3}, {0.2, 0.6, 0.95}, {1, 1, 2});
  const auto g2 = eer_per_group(two);
  const std::vector<double> s1{0.9, 0.5, 0.3, 0.2, 0.6};
  const std::vector<int> y1{1, 1, 1, 0, 0};
  const std::vector<double> s2{0.9, 0.5, 0.3, 0.95};
  const std::vector<int> y2{1, 1, 1, 0};
  CHECK(g2.groups.at(1) == Approx(testing::sweep_eer_interpolated(s1, y1)).epsilon(1e-15));
  CHECK(g2.groups.at(2) == Approx(testing::sweep_eer_interpolated(s2, y2)).epsilon(1e-15));
  // group 2's spoof outranks every bona fide score
  CHECK(g2.groups.at(2) >= 0.5);
  CHECK(g2.pooled == Approx(testing::sweep_eer_interpolated(two.scores, two.labels)).epsilon(1e-15));
  CHECK(g2.omitted.empty());
}

TEST_CASE("group keys without spoofed trials are omitted with a warning") {
  auto t = make({0.9, 0.4}, {0.1}, {1});
  t.attack_mode[0] = 5;  // a bona fide trial carrying a group key nobody spoofs
  const auto g = eer_per_group(t);
  CHECK(g.groups.size() == 1);
  CHECK(g.omitted == std::vector<int>{5});
  CHECK(g.warnings.size() == 1);
}

TEST_CASE("accuracy") {
  const auto sep = make({0.9, 0.8}, {0.2, 0.1});
  CHECK(accuracy(sep, 0.5) == 1.0);

  // all scores tied: 3 bona, 1 spoof
  const auto tied = make({0.5, 0.5, 0.5}, {0.5});
  CHECK(accuracy(tied, 0.4) == 0.75);  // everything accepted
  CHECK(accuracy(tied, 0.6) == 0.25);  // everything rejected
  CHECK(accuracy(tied, 0.5) == 0.75);  // ties accept
  CHECK(std::max(accuracy(tied, 0.4), accuracy(tied, 0.6)) == 0.75);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> bona(9), spoof(11);
  for (auto& v : bona) v = u(rng);
  for (auto& v : spoof) v = u(rng);
  const auto rnd = make(bona, spoof);
  for (double th : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    int correct = 0;
    for (double b : bona) correct += b >= th;
    for (double s : spoof) correct += s < th;
    CHECK(accuracy(rnd, th) == correct / 20.0);
  }
  CHECK_THROWS_AS(accuracy(ScoredTrials{}, 0.0), ArgumentError);
}

}  // TEST_SUITE
