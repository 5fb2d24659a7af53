// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "sharpmd/errors.hpp"

namespace sharpmd::metrics {

void ScoredTrials::validate() const {
  if (labels.size() != scores.size()) throw ArgumentError("scores and labels differ in length");
  if (!attack_mode.empty() && attack_mode.size() != scores.size()) {
    throw ArgumentError("scores and attack modes differ in length");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ArgumentError("labels must be 0 or 1");
  }
}

double eer(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("eer: scores and labels differ in length");
  std::size_t n_bona = 0, n_spoof = 0;
  for (int y : labels) {
    if (y == 1) ++n_bona;
    else if (y == 0) ++n_spoof;
    else throw ArgumentError("eer: labels must be 0 or 1");
  }
  if (n_bona == 0 || n_spoof == 0) throw ArgumentError("eer needs both bona fide and spoofed trials");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk thresholds upward. At threshold t: FAR = #spoof >= t / n_spoof,
  // FRR = #bona < t / n_bona.
  const double nb = static_cast<double>(n_bona);
  const double ns = static_cast<double>(n_spoof);
  std::size_t bona_below = 0, spoof_below = 0;
  double prev_far = 1.0, prev_frr = 0.0;
  std::size_t i = 0;
  while (true) {
    double far, frr;
    if (i < order.size()) {
      far = static_cast<double>(n_spoof - spoof_below) / ns;
      frr = static_cast<double>(bona_below) / nb;
    } else {
      far = 0.0;
      frr = 1.0;
    }
    const double diff = frr - far;
    if (diff >= 0.0) {
      if (diff == 0.0) return far;
      const double prev_diff = prev_frr - prev_far;  // < 0
      const double alpha = -prev_diff / (diff - prev_diff);
      return prev_far + alpha * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
    // Advance past every trial sharing this score.
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) ++bona_below;
      else ++spoof_below;
      ++i;
    }
  }
}

double eer(const ScoredTrials& trials) {
  trials.validate();
  return eer(trials.scores, trials.labels);
}

GroupEer eer_per_group(const ScoredTrials& trials) {
  trials.validate();
  if (trials.attack_mode.size() != trials.size()) {
    throw ArgumentError("eer_per_group needs an attack mode per trial");
  }
  GroupEer out;
  out.pooled = eer(trials.scores, trials.labels);

  std::vector<double> bona;
  std::map<int, std::vector<double>> spoof;
  std::set<int> keys;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials.labels[i] == 1) {
      bona.push_back(trials.scores[i]);
      if (trials.attack_mode[i] != 0) keys.insert(trials.attack_mode[i]);
    } else {
      spoof[trials.attack_mode[i]].push_back(trials.scores[i]);
      keys.insert(trials.attack_mode[i]);
    }
  }
  for (int key : keys) {
    auto it = spoof.find(key);
    if (it == spoof.end()) {
      out.omitted.push_back(key);
      out.warnings.push_back("group " + std::to_string(key) + " has no spoofed trials; omitted");
      continue;
    }
    std::vector<double> s = bona;
    std::vector<int> y(bona.size(), 1);
    s.insert(s.end(), it->second.begin(), it->second.end());
    y.insert(y.end(), it->second.size(), 0);
    out.groups[key] = eer(s, y);
  }
  return out;
}

double accuracy(const ScoredTrials& trials, double threshold) {
  trials.validate();
  if (trials.size() == 0) throw ArgumentError("accuracy of an empty trial set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const int predicted = trials.scores[i] >= threshold ? 1 : 0;
    if (predicted == trials.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(trials.size());
}

}  // namespace sharpmd::metrics
