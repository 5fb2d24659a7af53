// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// sharpmd command-line driver.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sharpmd/data.hpp"
#include "sharpmd/errors.hpp"
#include "sharpmd/harness.hpp"
#include "sharpmd/model.hpp"
#include "sharpmd/sharpness.hpp"

namespace fs = std::filesystem;
using namespace sharpmd;

namespace {

struct Options {
  std::optional<std::uint64_t> seed;

  std::string spec_path;
  std::string out_path;
  std::string config_path;
  std::string checkpoint_path;
  std::string dataset_path;
  std::size_t threads = 0;

  std::vector<double> rhos;
  bool adaptive = false;
  std::size_t trials = 100;
  double eta = 0.01;
};

fs::path config_dir(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

// Writes to `path` when given, stdout otherwise.
void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
  } else {
    harness::write_text_file(path, text);
  }
}

int run_gen_data(const Options& o) {
  auto spec = data::load_generator_spec(o.spec_path);
  if (o.seed) data::reseed(spec, *o.seed);
  data::generate_to_directory(spec, o.out_path);
  std::cout << harness::read_text_file(fs::path(o.out_path) / "manifest.csv");
  return 0;
}

int run_train(const Options& o) {
  const auto loaded = harness::parse_experiment(harness::read_text_file(o.config_path),
                                                config_dir(o.config_path), o.seed);
  const auto result = harness::train(loaded.config, loaded.registry);
  harness::write_training_outputs(result, loaded.output_dir);
  std::cout << harness::training_log_csv(result);
  if (result.aborted) {
    std::cerr << "sharpmd: training aborted: " << result.diagnostic << '\n';
    return 3;
  }
  return 0;
}

std::string eval_csv(const std::string& name, const harness::EvalResult& r) {
  std::string out = "dataset,group,eer,accuracy\n";
  out += fmt::format("{},all,{:.17g},{:.17g}\n", name, 100.0 * r.eer, r.accuracy);
  for (const auto& [mode, e] : r.groups.groups) {
    out += fmt::format("{},{},{:.17g},\n", name, mode, 100.0 * e);
  }
  return out;
}

int run_eval(const Options& o) {
  const auto ckpt = model::load_checkpoint(o.checkpoint_path);
  const auto ds = data::load_csv(o.dataset_path);
  const auto result = harness::evaluate(ckpt, ds);
  for (const auto& w : result.groups.warnings) std::cerr << "sharpmd: warning: " << w << '\n';
  emit(eval_csv(ds.name, result), o.out_path);
  return 0;
}

int run_xeval(const Options& o) {
  auto loaded = harness::parse_matrix(harness::read_text_file(o.config_path),
                                      config_dir(o.config_path), o.seed);
  if (o.threads > 0) loaded.config.threads = o.threads;
  const auto report = harness::cross_evaluate(loaded.config, loaded.registry);
  harness::write_report(report, loaded.output_dir);
  std::cout << harness::matrix_csv(report);
  int failed = 0;
  for (const auto& cell : report.cells) {
    if (!cell.failed) continue;
    ++failed;
    std::cerr << "sharpmd: cell " << harness::combo_label(cell.combo) << '/'
              << optim::to_string(cell.mode) << '/' << harness::to_string(cell.sampler)
              << " failed: " << cell.diagnostic << '\n';
  }
  return failed == 0 ? 0 : 3;
}

int run_compare(const Options& o) {
  const auto loaded = harness::parse_experiment(harness::read_text_file(o.config_path),
                                                config_dir(o.config_path), o.seed);
  const auto cmp = harness::compare_samplers(loaded.config, loaded.seeds, loaded.registry);
  const auto csv = harness::comparison_csv(cmp);
  harness::write_text_file(loaded.output_dir / "samplers.csv", csv);
  std::cout << csv;
  for (const auto& run : cmp.runs) {
    if (run.failed) {
      std::cerr << "sharpmd: seed " << run.seed << ' ' << harness::to_string(run.sampler)
                << " failed: " << run.diagnostic << '\n';
    }
  }
  return 0;
}

int run_probe(const Options& o) {
  const auto ckpt = model::load_checkpoint(o.checkpoint_path);
  const auto ds = data::load_csv(o.dataset_path);
  const std::uint64_t seed = o.seed.value_or(0);
  const auto reports =
      harness::probe_checkpoint(ckpt, ds, o.rhos, o.adaptive, o.trials, seed, o.eta);
  const std::string mode = ckpt.tag.empty() ? "unknown" : ckpt.tag;
  std::string out = sharpness::csv_header() + "\n";
  for (const auto& r : reports) {
    out += sharpness::csv_row(mode, r) + "\n";
    if (!r.diagnostic.empty()) std::cerr << "sharpmd: rho " << r.rho << ": " << r.diagnostic << '\n';
  }
  emit(out, o.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sharpmd: sharpness-aware multi-dataset training and evaluation"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "Override every seed in the config");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate synthetic domains from a spec");
  gen->add_option("spec", o.spec_path, "Generator spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("out", o.out_path, "Output directory")->required();
  add_seed(gen);

  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("config", o.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  add_seed(train);

  auto* eval = app.add_subcommand("eval", "Score a dataset with a checkpoint");
  eval->add_option("checkpoint", o.checkpoint_path)->required()->check(CLI::ExistingFile);
  eval->add_option("dataset", o.dataset_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--out", o.out_path, "Write CSV here instead of stdout");
  add_seed(eval);

  auto* xeval = app.add_subcommand("xeval", "Run the cross-evaluation matrix");
  xeval->add_option("config", o.config_path, "Matrix config (JSON)")->required()->check(CLI::ExistingFile);
  xeval->add_option("--threads", o.threads, "Worker threads (overrides config)");
  add_seed(xeval);

  auto* cmp = app.add_subcommand("compare-samplers", "Pooled vs balanced over a seed set");
  cmp->add_option("config", o.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  add_seed(cmp);

  auto* probe = app.add_subcommand("probe", "Probe the sharpness of a checkpoint");
  probe->add_option("checkpoint", o.checkpoint_path)->required()->check(CLI::ExistingFile);
  probe->add_option("--data", o.dataset_path, "Dataset CSV the loss is measured on")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--rho", o.rhos, "Radii")->required()->expected(1, -1);
  probe->add_flag("--adaptive", o.adaptive, "Use the weight-normalized ball");
  probe->add_option("--trials", o.trials, "Random boundary points per radius");
  probe->add_option("--eta", o.eta, "Normalization offset for adaptive probes");
  probe->add_option("-o,--out", o.out_path, "Write CSV here instead of stdout");
  add_seed(probe);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_gen_data(o);
    if (*train) return run_train(o);
    if (*eval) return run_eval(o);
    if (*xeval) return run_xeval(o);
    if (*cmp) return run_compare(o);
    if (*probe) return run_probe(o);
  } catch (const ParseError& e) {
    std::cerr << "sharpmd: parse error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "sharpmd: config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sharpmd: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
