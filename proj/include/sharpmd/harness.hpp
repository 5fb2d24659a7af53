// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment orchestration: single training runs with dev-EER model selection,
// the train-combo x mode x sampler cross-evaluation matrix, pooled-vs-balanced
// sampler comparison, checkpoint probing, and the CSV writers for all of them.
//
// EERs are fractions in the API and percentages in every CSV.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sharpmd/data.hpp"
#include "sharpmd/metrics.hpp"
#include "sharpmd/model.hpp"
#include "sharpmd/optim.hpp"
#include "sharpmd/sharpness.hpp"

namespace sharpmd::harness {

enum class SamplerKind { kPooled, kBalanced };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler(const std::string& name);

class DatasetRegistry {
 public:
  void add(data::DatasetHandle ds);
  bool contains(const std::string& name) const { return sets_.contains(name); }
  const data::DatasetHandle& get(const std::string& name) const;
  std::vector<std::string> names() const;

  // Every *.csv in `dir` except manifest.csv, named by file stem.
  static DatasetRegistry from_directory(const std::filesystem::path& dir);

 private:
  std::map<std::string, data::DatasetHandle> sets_;
};

struct ExperimentConfig {
  model::ModelConfig model;  // input_dim 0 means "take it from the data"
  std::vector<std::string> train;
  std::string dev;  // empty: held-in split of the training datasets
  std::vector<std::string> eval;
  optim::OptimizerConfig optimizer;
  optim::SharpnessConfig sharpness;
  SamplerKind sampler = SamplerKind::kPooled;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  double dev_fraction = 0.2;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double clean_loss = 0.0;      // mean over the epoch's steps
  double perturbed_loss = 0.0;  // mean over the epoch's steps
  double dev_eer = 0.0;         // fraction
};

struct TrainResult {
  model::Checkpoint best;   // lowest dev EER, earliest on ties
  model::Checkpoint final;  // parameters after the last completed epoch
  std::size_t best_epoch = 0;
  double best_dev_eer = 1.0;
  std::vector<EpochLog> log;
  bool aborted = false;
  std::string diagnostic;
};

// Training data after the dev split; each part keeps its source name.
struct TrainingData {
  std::vector<data::DatasetHandle> parts;
  data::DatasetHandle dev;
};

// Resolves names and carves the dev split. Throws ConfigError before any
// training if a name is unknown or dimensions disagree.
TrainingData prepare_training_data(const ExperimentConfig& cfg, const DatasetRegistry& registry);

TrainResult train(const ExperimentConfig& cfg, const DatasetRegistry& registry);

// train_log.csv, best.ckpt, final.ckpt
void write_training_outputs(const TrainResult& result, const std::filesystem::path& dir);
std::string training_log_csv(const TrainResult& result);

struct EvalResult {
  double eer = 0.0;
  double accuracy = 0.0;  // threshold 0 on the logit
  metrics::GroupEer groups;
};

EvalResult evaluate(const model::Checkpoint& ckpt, const data::DatasetHandle& ds);

// Visibility of each attack mode in `eval` with respect to the training sets:
// 1 known (in every training set), 2 partially known (in some), 3 unknown.
std::map<int, int> visibility_groups(const data::DatasetHandle& eval,
                                     const std::vector<data::DatasetHandle>& train);
std::string visibility_name(int group);

// ---------------------------------------------------------------------------
// Cross-evaluation matrix

struct ProbeSettings {
  std::vector<double> rhos;  // empty disables probing
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double eta = 0.01;
};

struct MatrixConfig {
  ExperimentConfig base;  // base.train and base.sharpness.mode are ignored
  std::vector<std::vector<std::string>> combos;
  std::vector<optim::SharpnessMode> modes;
  std::vector<SamplerKind> samplers;
  std::map<optim::SharpnessMode, optim::SharpnessConfig> sharpness;  // per-mode rho / eta
  ProbeSettings probe;
  std::size_t threads = 1;

  void validate() const;
};

struct CellResult {
  std::vector<std::string> combo;
  optim::SharpnessMode mode = optim::SharpnessMode::kNone;
  SamplerKind sampler = SamplerKind::kPooled;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string diagnostic;
  std::size_t best_epoch = 0;
  double best_dev_eer = 0.0;
  std::vector<EvalResult> evals;  // one per eval set
  // Probes of the final checkpoint on the dev split, plain then adaptive, per rho.
  std::vector<sharpness::SharpnessReport> probes;
  std::optional<TrainResult> training;  // kept only when requested
};

struct EvalReport {
  std::vector<std::string> eval_names;
  std::vector<optim::SharpnessMode> modes;
  std::vector<CellResult> cells;
};

std::string combo_label(const std::vector<std::string>& combo);
std::uint64_t cell_seed(std::uint64_t global_seed, const std::vector<std::string>& combo,
                        optim::SharpnessMode mode, SamplerKind sampler);

// Single-dataset combos run once, with the pooled sampler: batch composition
// across datasets is vacuous for them.
EvalReport cross_evaluate(const MatrixConfig& cfg, const DatasetRegistry& registry,
                          bool keep_training = false);

// matrix.csv (train combos x eval/mode with averages), cells.csv, groups.csv,
// sharpness.csv
void write_report(const EvalReport& report, const std::filesystem::path& dir);
std::string matrix_csv(const EvalReport& report);
std::string cells_csv(const EvalReport& report);
std::string groups_csv(const EvalReport& report);
std::string sharpness_csv(const EvalReport& report);

// ---------------------------------------------------------------------------
// Sampler comparison

struct SamplerRun {
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::kPooled;
  bool failed = false;
  std::string diagnostic;
  std::vector<double> eval_eer;  // fraction, one per eval set
};

struct SamplerComparison {
  std::vector<std::string> eval_names;
  std::vector<SamplerRun> runs;  // seed-major, pooled before balanced
};

SamplerComparison compare_samplers(const ExperimentConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds,
                                   const DatasetRegistry& registry);
std::string comparison_csv(const SamplerComparison& cmp);

// ---------------------------------------------------------------------------
// Probing

std::vector<sharpness::SharpnessReport> probe_checkpoint(const model::Checkpoint& ckpt,
                                                         const data::DatasetHandle& ds,
                                                         const std::vector<double>& rhos,
                                                         bool adaptive, std::size_t trials,
                                                         std::uint64_t seed, double eta = 0.01);

// ---------------------------------------------------------------------------
// Config documents (JSON). Relative paths resolve against `base_dir`.

struct LoadedExperiment {
  ExperimentConfig config;
  DatasetRegistry registry;
  std::filesystem::path output_dir;
  std::vector<std::uint64_t> seeds;  // compare-samplers seed set
};

struct LoadedMatrix {
  MatrixConfig config;
  DatasetRegistry registry;
  std::filesystem::path output_dir;
};

LoadedExperiment parse_experiment(const std::string& json_text,
                                  const std::filesystem::path& base_dir,
                                  std::optional<std::uint64_t> seed_override = std::nullopt);
LoadedMatrix parse_matrix(const std::string& json_text, const std::filesystem::path& base_dir,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sharpmd::harness
