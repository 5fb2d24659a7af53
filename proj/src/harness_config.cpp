// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

// JSON experiment / matrix documents. Schema is documented in docs/configs.md.

#include <nlohmann/json.hpp>

#include "sharpmd/errors.hpp"
#include "sharpmd/harness.hpp"

namespace sharpmd::harness {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

DatasetRegistry load_registry(const json& doc, const std::filesystem::path& base_dir) {
  DatasetRegistry reg;
  if (doc.contains("data_dir")) reg = DatasetRegistry::from_directory(resolve(base_dir, doc["data_dir"].get<std::string>()));
  if (doc.contains("datasets")) {
    for (const auto& [name, path] : doc["datasets"].items()) {
      auto ds = data::load_csv(resolve(base_dir, path.get<std::string>()));
      ds.name = name;
      reg.add(std::move(ds));
    }
  }
  return reg;
}

optim::SharpnessConfig sharpness_from(const json& j, optim::SharpnessMode mode) {
  auto cfg = optim::SharpnessConfig::defaults(mode);
  cfg.rho = j.value("rho", cfg.rho);
  cfg.eta = j.value("eta", cfg.eta);
  return cfg;
}

ExperimentConfig experiment_from(const json& doc) {
  ExperimentConfig cfg;
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    cfg.model.input_dim = m.value("input_dim", std::size_t{0});
    cfg.model.hidden_dims = m.value("hidden_dims", std::vector<std::size_t>{32});
    cfg.model.activation = model::parse_activation(m.value("activation", std::string("relu")));
  } else {
    cfg.model.hidden_dims = {32};
  }
  cfg.train = doc.value("train", std::vector<std::string>{});
  cfg.dev = doc.value("dev", std::string());
  cfg.eval = doc.value("eval", std::vector<std::string>{});
  if (doc.contains("optimizer")) {
    const auto& o = doc["optimizer"];
    cfg.optimizer.kind = optim::parse_optimizer_kind(o.value("kind", std::string("adam")));
    cfg.optimizer.learning_rate = o.value("lr", cfg.optimizer.learning_rate);
    cfg.optimizer.weight_decay = o.value("weight_decay", cfg.optimizer.weight_decay);
    cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
    cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
    cfg.optimizer.eps = o.value("eps", cfg.optimizer.eps);
  }
  if (doc.contains("sharpness")) {
    const auto& s = doc["sharpness"];
    cfg.sharpness = sharpness_from(s, optim::parse_sharpness_mode(s.value("mode", std::string("none"))));
  }
  cfg.sampler = parse_sampler(doc.value("sampler", std::string("pooled")));
  cfg.batch_size = doc.value("batch_size", cfg.batch_size);
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.dev_fraction = doc.value("dev_fraction", cfg.dev_fraction);
  return cfg;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

LoadedExperiment parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir,
                                  std::optional<std::uint64_t> seed_override) {
  const json doc = parse_json(json_text);
  LoadedExperiment out;
  try {
    out.config = experiment_from(doc);
    out.registry = load_registry(doc, base_dir);
    out.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
    if (doc.contains("seeds")) {
      out.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const std::size_t n = doc.value("num_seeds", std::size_t{10});
      for (std::size_t i = 0; i < n; ++i) out.seeds.push_back(out.config.seed + i);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (seed_override) {
    out.config.seed = *seed_override;
    for (std::size_t i = 0; i < out.seeds.size(); ++i) out.seeds[i] = *seed_override + i;
  }
  out.config.validate();
  return out;
}

LoadedMatrix parse_matrix(const std::string& json_text, const std::filesystem::path& base_dir,
                          std::optional<std::uint64_t> seed_override) {
  const json doc = parse_json(json_text);
  LoadedMatrix out;
  try {
    out.config.base = experiment_from(doc);
    out.registry = load_registry(doc, base_dir);
    out.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
    out.config.combos = doc.at("combos").get<std::vector<std::vector<std::string>>>();
    for (const auto& m : doc.value("modes", std::vector<std::string>{"none", "sam", "asam"})) {
      out.config.modes.push_back(optim::parse_sharpness_mode(m));
    }
    for (const auto& s : doc.value("samplers", std::vector<std::string>{"pooled"})) {
      out.config.samplers.push_back(parse_sampler(s));
    }
    if (doc.contains("sharpness_modes")) {
      for (const auto& [name, sj] : doc["sharpness_modes"].items()) {
        const auto mode = optim::parse_sharpness_mode(name);
        out.config.sharpness[mode] = sharpness_from(sj, mode);
      }
    }
    if (doc.contains("probe")) {
      const auto& p = doc["probe"];
      out.config.probe.rhos = p.value("rho", std::vector<double>{});
      out.config.probe.trials = p.value("trials", out.config.probe.trials);
      out.config.probe.seed = p.value("seed", out.config.probe.seed);
      out.config.probe.eta = p.value("eta", out.config.probe.eta);
    }
    out.config.threads = doc.value("threads", std::size_t{1});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("matrix config: ") + e.what());
  }
  if (seed_override) {
    out.config.base.seed = *seed_override;
    out.config.probe.seed = *seed_override;
  }
  // The base entry is a template: combos replace its training list.
  if (out.config.base.train.empty()) out.config.base.train = out.config.combos.empty()
                                                                 ? std::vector<std::string>{}
                                                                 : out.config.combos.front();
  out.config.validate();
  return out;
}

}  // namespace sharpmd::harness
