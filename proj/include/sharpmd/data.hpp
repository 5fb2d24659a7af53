// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Labeled, domain-tagged feature datasets: synthetic generation, CSV I/O and
// the pooled / balanced multi-dataset mini-batch samplers.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sharpmd/matrix.hpp"

namespace sharpmd::data {

// label 1 = bona fide, 0 = spoofed. attack_mode is 0 exactly for bona fide rows.
struct DatasetHandle {
  std::string name;
  Matrix features;
  std::vector<int> labels;
  std::vector<int> attack_mode;
  int domain_id = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols; }
  std::size_t count_label(int label) const;

  // Structural invariants; throws ArgumentError.
  void validate() const;
  // validate() plus at least one row of each class.
  void require_both_classes() const;

  DatasetHandle subset(std::span<const std::size_t> rows, std::string new_name) const;

  bool operator==(const DatasetHandle&) const = default;
};

// Global geometry shared by every domain: a bona fide Gaussian mixture and one
// Gaussian component per spoof mode (ids 1..num_modes).
struct BaseTaskSpec {
  std::size_t dim = 8;
  int num_modes = 6;
  std::size_t bona_components = 2;
  double bona_spread = 0.5;    // std of bona fide component centres around 0
  double mode_distance = 3.0;  // distance of spoof mode centres from 0
  double cluster_std = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct BaseTask {
  BaseTaskSpec spec;
  std::vector<std::vector<double>> bona_centres;
  std::map<int, std::vector<double>> mode_centres;
};

BaseTask make_base_task(const BaseTaskSpec& spec);

struct DomainSpec {
  std::string name;
  int domain_id = 0;
  double theta = 0.0;          // rotation applied in planes (0,1), (2,3), ...
  std::vector<double> scale;   // per-dimension, > 0; empty means all ones
  std::vector<double> shift;   // empty means zero
  double noise = 0.0;
  std::set<int> modes;
  std::size_t n_bona = 100;
  std::size_t n_spoof = 100;
  std::uint64_t seed = 0;

  void validate(const BaseTask& base) const;
};

// Untransformed draws: bona fide rows first (components in rotation), then
// spoof rows grouped by mode in ascending id, n_spoof split equally across
// modes with the remainder going to the lowest ids.
DatasetHandle sample_base_rows(const DomainSpec& spec, const BaseTask& base);

// sample_base_rows() mapped through x -> R(theta) diag(scale) x + shift, plus
// N(0, noise^2) per coordinate.
DatasetHandle generate_domain(const DomainSpec& spec, const BaseTask& base);

// CSV: header `label,domain_id,attack_mode,f0,...,f{d-1}`, 17 significant digits.
void write_csv(const DatasetHandle& ds, std::ostream& out);
DatasetHandle read_csv(std::istream& in, std::string name);
void save_csv(const DatasetHandle& ds, const std::filesystem::path& path);
// Dataset name is the file stem.
DatasetHandle load_csv(const std::filesystem::path& path);

// Generator spec document (JSON):
//   {"base": {...BaseTaskSpec fields...},
//    "domains": [{"name", "domain_id", "theta", "scale", "shift", "noise",
//                 "modes", "n_bona", "n_spoof", "seed"}, ...]}
struct GeneratorSpec {
  BaseTaskSpec base;
  std::vector<DomainSpec> domains;
};

GeneratorSpec parse_generator_spec(const std::string& json_text);
GeneratorSpec load_generator_spec(const std::filesystem::path& path);

// Replaces every seed in the spec: the base task takes `seed`, each domain a
// value derived from `seed` and its name.
void reseed(GeneratorSpec& spec, std::uint64_t seed);

// Writes <out_dir>/<name>.csv per domain and <out_dir>/manifest.csv.
void generate_to_directory(const GeneratorSpec& spec, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Mini-batch composition

struct RowRef {
  std::uint32_t dataset = 0;
  std::uint32_t row = 0;
  bool operator==(const RowRef&) const = default;
  auto operator<=>(const RowRef&) const = default;
};

using Batch = std::vector<RowRef>;

// One epoch over the shuffled union, in chunks of batch_size (last may be short).
std::vector<Batch> pooled_batches(std::span<const std::size_t> sizes, std::size_t batch_size,
                                  std::uint64_t seed);
std::vector<Batch> pooled_batches(std::span<const DatasetHandle> datasets,
                                  std::size_t batch_size, std::uint64_t seed);

// Every batch takes floor(B/K) or ceil(B/K) rows from each dataset; the extra
// slots rotate across datasets from batch to batch. Each dataset is read as a
// stream of independent shuffles, so small datasets recycle. The epoch ends
// once the largest dataset has been fully consumed.
std::vector<Batch> balanced_batches(std::span<const std::size_t> sizes, std::size_t batch_size,
                                    std::uint64_t seed);
std::vector<Batch> balanced_batches(std::span<const DatasetHandle> datasets,
                                    std::size_t batch_size, std::uint64_t seed);

Matrix gather_features(std::span<const DatasetHandle> datasets, const Batch& batch);
std::vector<double> gather_labels(std::span<const DatasetHandle> datasets, const Batch& batch);

}  // namespace sharpmd::data
