// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Test-only reference computations. Nothing here calls into the autodiff tape,
// so these can serve as independent oracles for it.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "sharpmd/matrix.hpp"
#include "sharpmd/model.hpp"

namespace sharpmd::testing {

// Plain-double MLP forward over a flattened parameter vector laid out as
// ParameterSet order: W0 (in x h0, row-major), b0, W1, b1, ...
inline std::vector<double> mlp_logits(const model::ModelConfig& cfg, std::span<const double> flat,
                                      const Matrix& x) {
  const auto widths = cfg.layer_widths();
  std::vector<double> out(x.rows);
  std::vector<double> h, z;
  for (std::size_t r = 0; r < x.rows; ++r) {
    h.assign(x.row(r).begin(), x.row(r).end());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const std::size_t in = widths[l], outw = widths[l + 1];
      z.assign(outw, 0.0);
      for (std::size_t j = 0; j < outw; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += h[i] * flat[off + i * outw + j];
        z[j] = acc + flat[off + in * outw + j];
      }
      off += in * outw + outw;
      if (l + 2 < widths.size()) {
        for (double& v : z) {
          v = cfg.activation == model::Activation::kRelu ? std::max(v, 0.0) : std::tanh(v);
        }
      }
      h = z;
    }
    out[r] = h[0];
  }
  return out;
}

// Pre-activations of every hidden unit for every row; used to keep
// finite-difference fixtures away from relu kinks.
inline double min_abs_preactivation(const model::ModelConfig& cfg, std::span<const double> flat,
                                    const Matrix& x) {
  const auto widths = cfg.layer_widths();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> h, z;
  for (std::size_t r = 0; r < x.rows; ++r) {
    h.assign(x.row(r).begin(), x.row(r).end());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 2 < widths.size(); ++l) {
      const std::size_t in = widths[l], outw = widths[l + 1];
      z.assign(outw, 0.0);
      for (std::size_t j = 0; j < outw; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += h[i] * flat[off + i * outw + j];
        z[j] = acc + flat[off + in * outw + j];
        best = std::min(best, std::abs(z[j]));
      }
      off += in * outw + outw;
      for (double& v : z) {
        v = cfg.activation == model::Activation::kRelu ? std::max(v, 0.0) : std::tanh(v);
      }
      h = z;
    }
  }
  return best;
}

// Mean BCE in the naive log(sigmoid) form (fine for moderate logits).
inline double mean_bce(std::span<const double> logits, std::span<const double> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits[i]));
    total += -(labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p));
  }
  return total / static_cast<double>(logits.size());
}

inline double mlp_loss(const model::ModelConfig& cfg, std::span<const double> flat, const Matrix& x,
                       std::span<const double> labels) {
  return mean_bce(mlp_logits(cfg, flat, x), labels);
}

// Central differences of f at w with step h.
inline std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                               std::vector<double> w, double h) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + h;
    const double up = f(w);
    w[i] = keep - h;
    const double down = f(w);
    w[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(rows, cols);
  for (double& v : m.values) v = n(rng);
  return m;
}

inline std::vector<double> random_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(rng() & 1u);
  y[0] = 1.0;
  if (n > 1) y[1] = 0.0;
  return y;
}

// Uniform point on the unit sphere in `dim` dimensions.
inline std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> u(dim);
  double s = 0.0;
  for (double& v : u) {
    v = n(rng);
    s += v * v;
  }
  s = std::sqrt(s);
  for (double& v : u) v /= s;
  return u;
}

inline double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Step-function EER by exhaustive threshold sweep: counts FAR/FRR directly at
// every score and at +inf (O(n^2)), picks the threshold minimizing |FAR - FRR|
// and reports the midpoint of FAR and FRR there.
inline double sweep_eer(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> thresholds(scores.begin(), scores.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double nb = 0, ns = 0;
  for (int y : labels) (y == 1 ? nb : ns) += 1;
  double best_gap = std::numeric_limits<double>::infinity(), best = 0.0;
  for (double t : thresholds) {
    double fa = 0, fr = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] == 0 && scores[i] >= t) fa += 1;
      if (labels[i] == 1 && scores[i] < t) fr += 1;
    }
    const double far = fa / ns, frr = fr / nb;
    if (std::abs(far - frr) < best_gap) {
      best_gap = std::abs(far - frr);
      best = 0.5 * (far + frr);
    }
  }
  return best;
}

// Interpolated EER recomputed from the brute-force operating points: sorts the
// (threshold, FAR, FRR) triples and intersects the first segment on which
// FRR - FAR changes sign.
inline double sweep_eer_interpolated(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double nb = 0, ns = 0;
  for (int y : labels) (y == 1 ? nb : ns) += 1;
  double pf = 0, pr = 0;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    double fa = 0, fr = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] == 0 && scores[i] >= thresholds[k]) fa += 1;
      if (labels[i] == 1 && scores[i] < thresholds[k]) fr += 1;
    }
    const double far = fa / ns, frr = fr / nb;
    if (frr - far >= 0) {
      if (frr == far) return far;
      // Solve for the point where the two straight lines meet.
      const double d0 = pr - pf, d1 = frr - far;
      const double a = d0 / (d0 - d1);
      return pf + a * (far - pf);
    }
    pf = far;
    pr = frr;
  }
  return 1.0;
}

}  // namespace sharpmd::testing
