// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "sharpmd/errors.hpp"
#include "sharpmd/seed.hpp"

namespace sharpmd::harness {

using data::DatasetHandle;
using optim::SharpnessMode;

std::string to_string(SamplerKind kind) { return kind == SamplerKind::kPooled ? "pooled" : "balanced"; }

SamplerKind parse_sampler(const std::string& name) {
  if (name == "pooled") return SamplerKind::kPooled;
  if (name == "balanced") return SamplerKind::kBalanced;
  throw ConfigError("unknown sampler '" + name + "' (expected pooled or balanced)");
}

// ---------------------------------------------------------------------------
// Registry

void DatasetRegistry::add(DatasetHandle ds) {
  ds.validate();
  const std::string name = ds.name;
  if (!sets_.emplace(name, std::move(ds)).second) {
    throw ConfigError("dataset '" + name + "' registered twice");
  }
}

const DatasetHandle& DatasetRegistry::get(const std::string& name) const {
  auto it = sets_.find(name);
  if (it == sets_.end()) throw ConfigError("unknown dataset '" + name + "'");
  return it->second;
}

std::vector<std::string> DatasetRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, ds] : sets_) out.push_back(name);
  return out;
}

DatasetRegistry DatasetRegistry::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("data directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv" && entry.path().filename() != "manifest.csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  DatasetRegistry reg;
  for (const auto& f : files) reg.add(data::load_csv(f));
  return reg;
}

// ---------------------------------------------------------------------------
// Training

void ExperimentConfig::validate() const {
  if (train.empty()) throw ConfigError("experiment needs at least one training dataset");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw ConfigError("dev_fraction must lie in (0, 1)");
  std::set<std::string> seen;
  for (const auto& t : train) {
    if (!seen.insert(t).second) throw ConfigError("training dataset '" + t + "' listed twice");
  }
  if (sampler == SamplerKind::kBalanced && batch_size < train.size()) {
    throw ConfigError("balanced sampler needs batch_size >= number of training datasets");
  }
  optimizer.validate();
  sharpness.validate();
  if (!model.hidden_dims.empty()) {
    for (std::size_t w : model.hidden_dims) {
      if (w == 0) throw ConfigError("model hidden layer of width 0");
    }
  } else {
    throw ConfigError("model needs at least one hidden layer");
  }
}

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;   // "init"
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;  // "split"
constexpr std::uint64_t kEpochStream = 0x65706f6368ULL;  // "epoch"

model::ModelConfig resolve_model(const ExperimentConfig& cfg, std::size_t dim) {
  model::ModelConfig m = cfg.model;
  if (m.input_dim == 0) m.input_dim = dim;
  if (m.input_dim != dim) {
    throw ConfigError(fmt::format("model input_dim {} does not match data dimension {}", m.input_dim, dim));
  }
  m.seed = mix_seed(cfg.seed, kInitStream);
  m.validate();
  return m;
}

std::vector<double> to_double(const std::vector<int>& xs) { return {xs.begin(), xs.end()}; }

DatasetHandle concat(const std::vector<DatasetHandle>& parts, std::string name) {
  DatasetHandle out;
  out.name = std::move(name);
  out.domain_id = parts.empty() ? 0 : parts.front().domain_id;
  out.features.cols = parts.empty() ? 0 : parts.front().dim();
  for (const auto& p : parts) {
    out.features.values.insert(out.features.values.end(), p.features.values.begin(),
                               p.features.values.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.attack_mode.insert(out.attack_mode.end(), p.attack_mode.begin(), p.attack_mode.end());
  }
  out.features.rows = out.labels.size();
  return out;
}

// Stratified split: round(fraction * class count) rows of each class to dev,
// at least one and leaving at least one for training.
std::pair<DatasetHandle, DatasetHandle> split_dev(const DatasetHandle& ds, double fraction,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, hash_string(ds.name)));
  std::vector<std::size_t> train_rows, dev_rows;
  for (int label : {1, 0}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == label) rows.push_back(i);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t n_dev = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    if (rows.size() >= 2) n_dev = std::clamp<std::size_t>(n_dev, 1, rows.size() - 1);
    else n_dev = 0;
    dev_rows.insert(dev_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_dev));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_dev), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(dev_rows.begin(), dev_rows.end());
  return {ds.subset(train_rows, ds.name), ds.subset(dev_rows, ds.name + ".dev")};
}

double dev_eer(const model::ModelConfig& cfg, const model::ParameterSet& params, const DatasetHandle& dev) {
  return metrics::eer(model::predict(cfg, params, dev.features), dev.labels);
}

}  // namespace

TrainingData prepare_training_data(const ExperimentConfig& cfg, const DatasetRegistry& registry) {
  cfg.validate();
  std::vector<DatasetHandle> sources;
  for (const auto& name : cfg.train) sources.push_back(registry.get(name));
  for (const auto& name : cfg.eval) registry.get(name);
  const std::size_t dim = sources.front().dim();
  for (const auto& s : sources) {
    if (s.dim() != dim) throw ConfigError("training datasets disagree in feature dimension");
    s.require_both_classes();
  }
  for (const auto& name : cfg.eval) {
    if (registry.get(name).dim() != dim) {
      throw ConfigError("evaluation dataset '" + name + "' has a different feature dimension");
    }
  }

  TrainingData td;
  if (!cfg.dev.empty()) {
    td.parts = std::move(sources);
    td.dev = registry.get(cfg.dev);
    if (td.dev.dim() != dim) throw ConfigError("dev dataset has a different feature dimension");
  } else {
    std::vector<DatasetHandle> devs;
    for (const auto& s : sources) {
      auto [tr, dv] = split_dev(s, cfg.dev_fraction, mix_seed(cfg.seed, kSplitStream));
      td.parts.push_back(std::move(tr));
      devs.push_back(std::move(dv));
    }
    td.dev = concat(devs, "dev");
  }
  td.dev.require_both_classes();
  for (const auto& p : td.parts) p.require_both_classes();
  return td;
}

TrainResult train(const ExperimentConfig& cfg, const DatasetRegistry& registry) {
  const TrainingData td = prepare_training_data(cfg, registry);
  const model::ModelConfig mcfg = resolve_model(cfg, td.parts.front().dim());
  const std::string tag = optim::to_string(cfg.sharpness.mode);

  model::ParameterSet params = model::init_model(mcfg);
  optim::BaseOptimizerState state(cfg.optimizer);

  TrainResult result;
  result.best = {mcfg, params, tag};
  result.final = {mcfg, params, tag};

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(mix_seed(cfg.seed, kEpochStream), epoch);
    const auto batches = cfg.sampler == SamplerKind::kPooled
                             ? data::pooled_batches(td.parts, cfg.batch_size, epoch_seed)
                             : data::balanced_batches(td.parts, cfg.batch_size, epoch_seed);
    double clean_sum = 0.0, perturbed_sum = 0.0;
    for (const auto& batch : batches) {
      const Matrix x = data::gather_features(td.parts, batch);
      const std::vector<double> y = data::gather_labels(td.parts, batch);
      const auto step = optim::sharpness_aware_step(mcfg, params, x, y, cfg.sharpness, state);
      if (!step.applied) {
        result.aborted = true;
        result.diagnostic = fmt::format("epoch {}: {}", epoch, step.diagnostic);
        return result;
      }
      clean_sum += step.clean_loss;
      perturbed_sum += step.perturbed_loss;
    }
    EpochLog row;
    row.epoch = epoch;
    row.clean_loss = clean_sum / static_cast<double>(batches.size());
    row.perturbed_loss = perturbed_sum / static_cast<double>(batches.size());
    row.dev_eer = dev_eer(mcfg, params, td.dev);
    result.log.push_back(row);
    result.final.params = params;
    if (result.best_epoch == 0 || row.dev_eer < result.best_dev_eer) {
      result.best_epoch = epoch;
      result.best_dev_eer = row.dev_eer;
      result.best.params = params;
    }
  }
  return result;
}

std::string training_log_csv(const TrainResult& result) {
  std::string out = "epoch,clean_loss,perturbed_loss,dev_eer\n";
  for (const auto& r : result.log) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.clean_loss, r.perturbed_loss,
                       100.0 * r.dev_eer);
  }
  return out;
}

void write_training_outputs(const TrainResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "train_log.csv", training_log_csv(result));
  model::save_checkpoint(result.best, dir / "best.ckpt");
  model::save_checkpoint(result.final, dir / "final.ckpt");
}

EvalResult evaluate(const model::Checkpoint& ckpt, const DatasetHandle& ds) {
  ds.require_both_classes();
  metrics::ScoredTrials trials;
  trials.scores = model::predict(ckpt.config, ckpt.params, ds.features);
  trials.labels = ds.labels;
  trials.attack_mode = ds.attack_mode;
  EvalResult r;
  r.eer = metrics::eer(trials);
  r.accuracy = metrics::accuracy(trials, 0.0);
  r.groups = metrics::eer_per_group(trials);
  return r;
}

std::map<int, int> visibility_groups(const DatasetHandle& eval, const std::vector<DatasetHandle>& train) {
  std::map<int, int> out;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const int mode = eval.attack_mode[i];
    if (mode == 0 || out.contains(mode)) continue;
    std::size_t present = 0;
    for (const auto& t : train) {
      if (std::find(t.attack_mode.begin(), t.attack_mode.end(), mode) != t.attack_mode.end()) ++present;
    }
    out[mode] = present == train.size() ? 1 : present > 0 ? 2 : 3;
  }
  return out;
}

std::string visibility_name(int group) {
  switch (group) {
    case 1: return "known";
    case 2: return "partially_known";
    case 3: return "unknown";
  }
  return "group" + std::to_string(group);
}

// ---------------------------------------------------------------------------
// Cross-evaluation

void MatrixConfig::validate() const {
  if (combos.empty()) throw ConfigError("matrix needs at least one training combo");
  if (modes.empty()) throw ConfigError("matrix needs at least one mode");
  if (samplers.empty()) throw ConfigError("matrix needs at least one sampler");
  if (base.eval.empty()) throw ConfigError("matrix needs at least one evaluation dataset");
  for (const auto& c : combos) {
    if (c.empty()) throw ConfigError("empty training combo");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::string combo_label(const std::vector<std::string>& combo) {
  std::string out;
  for (const auto& c : combo) out += (out.empty() ? "" : "+") + c;
  return out;
}

std::uint64_t cell_seed(std::uint64_t global_seed, const std::vector<std::string>& combo,
                        SharpnessMode mode, SamplerKind sampler) {
  const std::string key = combo_label(combo) + "|" + optim::to_string(mode) + "|" + to_string(sampler);
  return mix_seed(global_seed, hash_string(key));
}

namespace {

struct CellPlan {
  std::vector<std::string> combo;
  SharpnessMode mode;
  SamplerKind sampler;
};

std::vector<CellPlan> plan_cells(const MatrixConfig& cfg) {
  std::vector<CellPlan> plan;
  for (const auto& combo : cfg.combos) {
    std::vector<SamplerKind> samplers = cfg.samplers;
    if (combo.size() == 1) samplers = {SamplerKind::kPooled};
    for (SamplerKind s : samplers) {
      for (SharpnessMode m : cfg.modes) plan.push_back({combo, m, s});
    }
  }
  return plan;
}

CellResult run_cell(const MatrixConfig& cfg, const CellPlan& plan, const DatasetRegistry& registry,
                    bool keep_training) {
  CellResult cell;
  cell.combo = plan.combo;
  cell.mode = plan.mode;
  cell.sampler = plan.sampler;
  cell.seed = cell_seed(cfg.base.seed, plan.combo, plan.mode, plan.sampler);
  try {
    ExperimentConfig ec = cfg.base;
    ec.train = plan.combo;
    ec.sampler = plan.sampler;
    ec.seed = cell.seed;
    auto it = cfg.sharpness.find(plan.mode);
    ec.sharpness = it != cfg.sharpness.end() ? it->second : optim::SharpnessConfig::defaults(plan.mode);
    ec.sharpness.mode = plan.mode;

    TrainResult tr = train(ec, registry);
    if (tr.aborted) {
      cell.failed = true;
      cell.diagnostic = tr.diagnostic;
      return cell;
    }
    cell.best_epoch = tr.best_epoch;
    cell.best_dev_eer = tr.best_dev_eer;

    std::vector<DatasetHandle> train_sets;
    for (const auto& n : plan.combo) train_sets.push_back(registry.get(n));
    for (const auto& name : ec.eval) {
      const DatasetHandle& ds = registry.get(name);
      EvalResult r = evaluate(tr.best, ds);
      // Regroup spoofed modes by visibility relative to this combo's training sets.
      const auto vis = visibility_groups(ds, train_sets);
      metrics::ScoredTrials grouped;
      grouped.scores = model::predict(tr.best.config, tr.best.params, ds.features);
      grouped.labels = ds.labels;
      for (int m : ds.attack_mode) grouped.attack_mode.push_back(m == 0 ? 0 : vis.at(m));
      r.groups = metrics::eer_per_group(grouped);
      cell.evals.push_back(std::move(r));
    }

    if (!cfg.probe.rhos.empty()) {
      const TrainingData td = prepare_training_data(ec, registry);
      for (bool adaptive : {false, true}) {
        auto reports = probe_checkpoint(tr.final, td.dev, cfg.probe.rhos, adaptive, cfg.probe.trials,
                                        cfg.probe.seed, cfg.probe.eta);
        cell.probes.insert(cell.probes.end(), reports.begin(), reports.end());
      }
    }
    if (keep_training) cell.training = std::move(tr);
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.diagnostic = e.what();
  }
  return cell;
}

}  // namespace

EvalReport cross_evaluate(const MatrixConfig& cfg, const DatasetRegistry& registry, bool keep_training) {
  cfg.validate();
  for (const auto& combo : cfg.combos) {
    for (const auto& n : combo) registry.get(n);
  }
  for (const auto& n : cfg.base.eval) registry.get(n);

  const auto plan = plan_cells(cfg);
  EvalReport report;
  report.eval_names = cfg.base.eval;
  report.modes = cfg.modes;
  report.cells.resize(plan.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      report.cells[i] = run_cell(cfg, plan[i], registry, keep_training);
    }
  };
  const std::size_t n_threads = std::min(cfg.threads, plan.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

namespace {

std::string pct(double fraction) { return fmt::format("{:.17g}", 100.0 * fraction); }

std::string mean_or_empty(const std::vector<double>& xs) {
  if (xs.empty()) return "";
  double s = 0.0;
  for (double x : xs) s += x;
  return fmt::format("{:.17g}", s / static_cast<double>(xs.size()));
}

}  // namespace

std::string matrix_csv(const EvalReport& report) {
  // Rows: (combo, sampler) in first-seen order. Columns: eval set x mode.
  std::vector<std::pair<std::string, SamplerKind>> rows;
  for (const auto& c : report.cells) {
    std::pair<std::string, SamplerKind> key{combo_label(c.combo), c.sampler};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  const std::size_t n_cols = report.eval_names.size() * report.modes.size();
  auto find_cell = [&](const std::pair<std::string, SamplerKind>& row, SharpnessMode m) -> const CellResult* {
    for (const auto& c : report.cells) {
      if (combo_label(c.combo) == row.first && c.sampler == row.second && c.mode == m) return &c;
    }
    return nullptr;
  };

  std::string out = "train,sampler";
  for (const auto& e : report.eval_names) {
    for (SharpnessMode m : report.modes) out += fmt::format(",{}:{}", e, optim::to_string(m));
  }
  out += ",average\n";

  std::vector<std::vector<double>> col_values(n_cols);
  std::vector<double> all_values;
  for (const auto& row : rows) {
    out += row.first + "," + to_string(row.second);
    std::vector<double> row_values;
    std::size_t col = 0;
    for (std::size_t e = 0; e < report.eval_names.size(); ++e) {
      for (SharpnessMode m : report.modes) {
        const CellResult* c = find_cell(row, m);
        if (c == nullptr) {
          out += ",";
        } else if (c->failed) {
          out += ",failed";
        } else {
          const double v = 100.0 * c->evals[e].eer;
          out += fmt::format(",{:.17g}", v);
          row_values.push_back(v);
          col_values[col].push_back(v);
          all_values.push_back(v);
        }
        ++col;
      }
    }
    out += "," + mean_or_empty(row_values) + "\n";
  }
  out += "average,";
  for (const auto& cv : col_values) out += "," + mean_or_empty(cv);
  out += "," + mean_or_empty(all_values) + "\n";
  return out;
}

std::string cells_csv(const EvalReport& report) {
  std::string out = "train,sampler,mode,seed,status,best_epoch,dev_eer,eval,eer,accuracy\n";
  for (const auto& c : report.cells) {
    const std::string prefix = fmt::format("{},{},{},{}", combo_label(c.combo), to_string(c.sampler),
                                           optim::to_string(c.mode), c.seed);
    if (c.failed) {
      std::string diag = c.diagnostic;
      std::replace(diag.begin(), diag.end(), ',', ';');
      std::replace(diag.begin(), diag.end(), '\n', ' ');
      out += fmt::format("{},failed,,,{},,\n", prefix, diag);
      continue;
    }
    for (std::size_t e = 0; e < report.eval_names.size(); ++e) {
      out += fmt::format("{},ok,{},{},{},{},{:.17g}\n", prefix, c.best_epoch, pct(c.best_dev_eer),
                         report.eval_names[e], pct(c.evals[e].eer), c.evals[e].accuracy);
    }
  }
  return out;
}

std::string groups_csv(const EvalReport& report) {
  std::string out = "train,sampler,mode,eval,group,eer\n";
  for (const auto& c : report.cells) {
    if (c.failed) continue;
    const std::string prefix =
        fmt::format("{},{},{}", combo_label(c.combo), to_string(c.sampler), optim::to_string(c.mode));
    for (std::size_t e = 0; e < report.eval_names.size(); ++e) {
      const auto& g = c.evals[e].groups;
      for (const auto& [group, value] : g.groups) {
        out += fmt::format("{},{},{},{}\n", prefix, report.eval_names[e], visibility_name(group), pct(value));
      }
      out += fmt::format("{},{},pooled,{}\n", prefix, report.eval_names[e], pct(g.pooled));
    }
  }
  return out;
}

std::string sharpness_csv(const EvalReport& report) {
  std::string out = "train,sampler," + sharpness::csv_header() + "\n";
  for (const auto& c : report.cells) {
    for (const auto& p : c.probes) {
      out += fmt::format("{},{},{}\n", combo_label(c.combo), to_string(c.sampler),
                         sharpness::csv_row(optim::to_string(c.mode), p));
    }
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "matrix.csv", matrix_csv(report));
  write_text_file(dir / "cells.csv", cells_csv(report));
  write_text_file(dir / "groups.csv", groups_csv(report));
  write_text_file(dir / "sharpness.csv", sharpness_csv(report));
}

// ---------------------------------------------------------------------------
// Sampler comparison

SamplerComparison compare_samplers(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   const DatasetRegistry& registry) {
  if (cfg.train.size() < 2) {
    throw ConfigError("sampler comparison needs at least two training datasets");
  }
  if (seeds.empty()) throw ConfigError("sampler comparison needs at least one seed");
  if (cfg.eval.empty()) throw ConfigError("sampler comparison needs an evaluation dataset");
  for (SamplerKind s : {SamplerKind::kPooled, SamplerKind::kBalanced}) {
    ExperimentConfig probe_cfg = cfg;
    probe_cfg.sampler = s;
    prepare_training_data(probe_cfg, registry);
  }

  SamplerComparison cmp;
  cmp.eval_names = cfg.eval;
  for (std::uint64_t seed : seeds) {
    for (SamplerKind s : {SamplerKind::kPooled, SamplerKind::kBalanced}) {
      SamplerRun run;
      run.seed = seed;
      run.sampler = s;
      try {
        ExperimentConfig ec = cfg;
        ec.sampler = s;
        ec.seed = seed;
        const TrainResult tr = train(ec, registry);
        if (tr.aborted) throw NumericError(tr.diagnostic);
        for (const auto& name : cfg.eval) run.eval_eer.push_back(evaluate(tr.best, registry.get(name)).eer);
      } catch (const std::exception& e) {
        run.failed = true;
        run.diagnostic = e.what();
      }
      cmp.runs.push_back(std::move(run));
    }
  }
  return cmp;
}

std::string comparison_csv(const SamplerComparison& cmp) {
  std::string out = "seed,sampler";
  for (const auto& e : cmp.eval_names) out += "," + e;
  out += ",mean\n";
  std::map<SamplerKind, std::vector<std::vector<double>>> per_sampler_cols;
  for (SamplerKind s : {SamplerKind::kPooled, SamplerKind::kBalanced}) {
    per_sampler_cols[s].resize(cmp.eval_names.size());
  }
  for (const auto& r : cmp.runs) {
    out += fmt::format("{},{}", r.seed, to_string(r.sampler));
    if (r.failed) {
      for (std::size_t e = 0; e < cmp.eval_names.size(); ++e) out += ",failed";
      out += ",\n";
      continue;
    }
    std::vector<double> row;
    for (std::size_t e = 0; e < r.eval_eer.size(); ++e) {
      const double v = 100.0 * r.eval_eer[e];
      out += fmt::format(",{:.17g}", v);
      row.push_back(v);
      per_sampler_cols[r.sampler][e].push_back(v);
    }
    out += "," + mean_or_empty(row) + "\n";
  }
  for (SamplerKind s : {SamplerKind::kPooled, SamplerKind::kBalanced}) {
    out += "mean," + to_string(s);
    std::vector<double> all;
    for (const auto& col : per_sampler_cols[s]) {
      out += "," + mean_or_empty(col);
      all.insert(all.end(), col.begin(), col.end());
    }
    out += "," + mean_or_empty(all) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probing

std::vector<sharpness::SharpnessReport> probe_checkpoint(const model::Checkpoint& ckpt,
                                                         const DatasetHandle& ds,
                                                         const std::vector<double>& rhos, bool adaptive,
                                                         std::size_t trials, std::uint64_t seed,
                                                         double eta) {
  if (ds.dim() != ckpt.config.input_dim) {
    throw DimensionError(fmt::format("checkpoint expects {} features, dataset '{}' has {}",
                                     ckpt.config.input_dim, ds.name, ds.dim()));
  }
  ds.validate();
  model::ParameterSet params = ckpt.params;
  const std::vector<double> labels = to_double(ds.labels);
  std::vector<sharpness::SharpnessReport> out;
  for (double rho : rhos) {
    sharpness::ProbeOptions opts;
    opts.rho = rho;
    opts.adaptive = adaptive;
    opts.eta = eta;
    opts.trials = trials;
    opts.seed = seed;
    out.push_back(sharpness::probe_sharpness(ckpt.config, params, ds.features, labels, opts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace sharpmd::harness
