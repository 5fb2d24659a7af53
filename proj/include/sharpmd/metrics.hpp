// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Countermeasure scoring metrics. Scores are "higher = more bona fide"; a trial
// is accepted as bona fide when score >= threshold (ties accept).

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace sharpmd::metrics {

struct ScoredTrials {
  std::vector<double> scores;
  std::vector<int> labels;       // 1 = bona fide, 0 = spoofed
  std::vector<int> attack_mode;  // grouping key for spoofed trials

  std::size_t size() const noexcept { return scores.size(); }
  void validate() const;
};

// Equal error rate as a fraction in [0, 1]. FAR/FRR are evaluated at every
// distinct score and at +inf; the EER is read off the straight segment
// between the two adjacent operating points that straddle FAR = FRR.
double eer(std::span<const double> scores, std::span<const int> labels);
double eer(const ScoredTrials& trials);

struct GroupEer {
  std::map<int, double> groups;       // attack_mode -> EER (fraction)
  double pooled = 0.0;                // all bona fide vs all spoofed
  std::vector<int> omitted;           // keys seen without any spoofed trial
  std::vector<std::string> warnings;
};

// Each group's EER uses every bona fide trial against that group's spoofed
// trials.
GroupEer eer_per_group(const ScoredTrials& trials);

// Fraction classified correctly; score >= threshold predicts bona fide.
double accuracy(const ScoredTrials& trials, double threshold);

}  // namespace sharpmd::metrics
