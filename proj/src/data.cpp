// Copyright 2026 The sharpmd Authors
// SPDX-License-Identifier: Apache-2.0

#include "sharpmd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sharpmd/errors.hpp"
#include "sharpmd/seed.hpp"

namespace sharpmd::data {

// ---------------------------------------------------------------------------
// DatasetHandle

std::size_t DatasetHandle::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void DatasetHandle::validate() const {
  if (features.rows != labels.size() || attack_mode.size() != labels.size()) {
    throw ArgumentError("dataset '" + name + "': features, labels and attack modes disagree in length");
  }
  if (features.values.size() != features.rows * features.cols) {
    throw ArgumentError("dataset '" + name + "': ragged feature matrix");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ArgumentError(fmt::format("dataset '{}': row {} has non-binary label {}", name, i, labels[i]));
    }
    if ((attack_mode[i] == 0) != (labels[i] == 1) || attack_mode[i] < 0) {
      throw ArgumentError(fmt::format("dataset '{}': row {} has label {} with attack_mode {}", name,
                                      i, labels[i], attack_mode[i]));
    }
  }
}

void DatasetHandle::require_both_classes() const {
  validate();
  if (count_label(1) == 0 || count_label(0) == 0) {
    throw ArgumentError("dataset '" + name + "' needs both bona fide and spoofed rows");
  }
}

DatasetHandle DatasetHandle::subset(std::span<const std::size_t> rows, std::string new_name) const {
  DatasetHandle out;
  out.name = std::move(new_name);
  out.domain_id = domain_id;
  out.features = Matrix(rows.size(), features.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw ArgumentError("subset row out of range");
    auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
    out.attack_mode.push_back(attack_mode[rows[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

void BaseTaskSpec::validate() const {
  if (dim == 0) throw ConfigError("base task dim must be positive");
  if (num_modes < 1) throw ConfigError("base task needs at least one spoof mode");
  if (bona_components == 0) throw ConfigError("base task needs at least one bona fide component");
  if (!(cluster_std >= 0.0) || !(bona_spread >= 0.0) || !(mode_distance >= 0.0)) {
    throw ConfigError("base task spreads must be nonnegative");
  }
}

BaseTask make_base_task(const BaseTaskSpec& spec) {
  spec.validate();
  BaseTask task;
  task.spec = spec;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < spec.bona_components; ++c) {
    std::vector<double> centre(spec.dim);
    for (double& x : centre) x = spec.bona_spread * normal(rng);
    task.bona_centres.push_back(std::move(centre));
  }
  for (int m = 1; m <= spec.num_modes; ++m) {
    std::vector<double> dir(spec.dim);
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (double& x : dir) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
    }
    for (double& x : dir) x *= spec.mode_distance / norm;
    task.mode_centres.emplace(m, std::move(dir));
  }
  return task;
}

void DomainSpec::validate(const BaseTask& base) const {
  const std::size_t d = base.spec.dim;
  if (name.empty()) throw ConfigError("domain needs a name");
  if (!scale.empty() && scale.size() != d) {
    throw ConfigError(fmt::format("domain '{}': scale has {} entries, dim is {}", name, scale.size(), d));
  }
  for (double s : scale) {
    if (!(s > 0.0)) throw ConfigError("domain '" + name + "': scale entries must be positive");
  }
  if (!shift.empty() && shift.size() != d) {
    throw ConfigError(fmt::format("domain '{}': shift has {} entries, dim is {}", name, shift.size(), d));
  }
  if (!(noise >= 0.0)) throw ConfigError("domain '" + name + "': noise must be nonnegative");
  if (n_bona < 1 || n_spoof < 1) throw ConfigError("domain '" + name + "': counts must be >= 1");
  if (modes.empty()) throw ConfigError("domain '" + name + "': needs at least one attack mode");
  for (int m : modes) {
    if (!base.mode_centres.contains(m)) {
      throw ConfigError(fmt::format("domain '{}': unknown attack mode {}", name, m));
    }
  }
}

DatasetHandle sample_base_rows(const DomainSpec& spec, const BaseTask& base) {
  spec.validate(base);
  const std::size_t d = base.spec.dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  DatasetHandle ds;
  ds.name = spec.name;
  ds.domain_id = spec.domain_id;
  ds.features = Matrix(spec.n_bona + spec.n_spoof, d);
  std::size_t row = 0;
  auto draw = [&](const std::vector<double>& centre, int label, int mode) {
    auto r = ds.features.row(row++);
    for (std::size_t j = 0; j < d; ++j) r[j] = centre[j] + base.spec.cluster_std * normal(rng);
    ds.labels.push_back(label);
    ds.attack_mode.push_back(mode);
  };
  for (std::size_t i = 0; i < spec.n_bona; ++i) {
    draw(base.bona_centres[i % base.bona_centres.size()], 1, 0);
  }
  const std::size_t k = spec.modes.size();
  std::size_t idx = 0;
  for (int m : spec.modes) {
    const std::size_t count = spec.n_spoof / k + (idx < spec.n_spoof % k ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) draw(base.mode_centres.at(m), 0, m);
    ++idx;
  }
  return ds;
}

DatasetHandle generate_domain(const DomainSpec& spec, const BaseTask& base) {
  DatasetHandle ds = sample_base_rows(spec, base);
  const std::size_t d = base.spec.dim;
  const double c = std::cos(spec.theta);
  const double s = std::sin(spec.theta);
  std::mt19937_64 noise_rng(mix_seed(spec.seed, 0x6e6f697365ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto x = ds.features.row(i);
    if (!spec.scale.empty()) {
      for (std::size_t j = 0; j < d; ++j) x[j] *= spec.scale[j];
    }
    if (spec.theta != 0.0) {
      for (std::size_t j = 0; j + 1 < d; j += 2) {
        const double a = x[j], b = x[j + 1];
        x[j] = c * a - s * b;
        x[j + 1] = s * a + c * b;
      }
    }
    if (!spec.shift.empty()) {
      for (std::size_t j = 0; j < d; ++j) x[j] += spec.shift[j];
    }
    if (spec.noise > 0.0) {
      for (std::size_t j = 0; j < d; ++j) x[j] += spec.noise * normal(noise_rng);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(const DatasetHandle& ds, std::ostream& out) {
  ds.validate();
  std::string line = "label,domain_id,attack_mode";
  for (std::size_t j = 0; j < ds.dim(); ++j) line += fmt::format(",f{}", j);
  out << line << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    line = fmt::format("{},{},{}", ds.labels[i], ds.domain_id, ds.attack_mode[i]);
    for (double x : ds.features.row(i)) line += fmt::format(",{:.17g}", x);
    out << line << '\n';
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    fields.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view column) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(fmt::format("column '{}': cannot parse '{}'", column, field), line);
  }
  return value;
}

}  // namespace

DatasetHandle read_csv(std::istream& in, std::string name) {
  std::string text;
  std::size_t line_no = 0;
  if (!std::getline(in, text)) throw ParseError("missing header row", 1);
  ++line_no;
  const auto header = split_fields(text);
  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(std::string(header[i]), i).second) {
      throw ParseError(fmt::format("duplicate column '{}'", header[i]), 1);
    }
  }
  for (const char* required : {"label", "domain_id", "attack_mode", "f0"}) {
    if (!column.contains(required)) throw ParseError(fmt::format("missing column '{}'", required), 1);
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0;; ++j) {
    auto it = column.find(fmt::format("f{}", j));
    if (it == column.end()) break;
    feature_cols.push_back(it->second);
  }
  if (feature_cols.size() + 3 != header.size()) {
    throw ParseError("unexpected columns: expected label, domain_id, attack_mode, f0..f{d-1}", 1);
  }
  const std::size_t label_col = column.at("label");
  const std::size_t domain_col = column.at("domain_id");
  const std::size_t mode_col = column.at("attack_mode");

  DatasetHandle ds;
  ds.name = std::move(name);
  ds.features.cols = feature_cols.size();
  bool have_domain = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty() || text == "\r") continue;
    const auto fields = split_fields(text);
    if (fields.size() != header.size()) {
      throw ParseError(fmt::format("row has {} fields, header has {}", fields.size(), header.size()),
                       line_no);
    }
    const int label = parse_number<int>(fields[label_col], line_no, "label");
    if (label != 0 && label != 1) {
      throw ParseError(fmt::format("label must be 0 or 1, got {}", label), line_no);
    }
    const int mode = parse_number<int>(fields[mode_col], line_no, "attack_mode");
    if (mode < 0 || (mode == 0) != (label == 1)) {
      throw ParseError(fmt::format("attack_mode {} inconsistent with label {}", mode, label), line_no);
    }
    const int domain = parse_number<int>(fields[domain_col], line_no, "domain_id");
    if (have_domain && domain != ds.domain_id) {
      throw ParseError(fmt::format("mixed domain_id {} and {}", ds.domain_id, domain), line_no);
    }
    ds.domain_id = domain;
    have_domain = true;
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      ds.features.values.push_back(
          parse_number<double>(fields[feature_cols[j]], line_no, header[feature_cols[j]]));
    }
    ds.labels.push_back(label);
    ds.attack_mode.push_back(mode);
  }
  if (ds.labels.empty()) throw ParseError("no rows", line_no);
  ds.features.rows = ds.labels.size();
  return ds;
}

void save_csv(const DatasetHandle& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(ds, out);
}

DatasetHandle load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_csv(in, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Generator spec

namespace {

std::vector<double> vector_or_scalar(const nlohmann::json& j, std::size_t dim) {
  if (j.is_number()) return std::vector<double>(dim, j.get<double>());
  return j.get<std::vector<double>>();
}

}  // namespace

GeneratorSpec parse_generator_spec(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("generator spec: ") + e.what());
  }
  GeneratorSpec spec;
  try {
    const auto base = doc.value("base", nlohmann::json::object());
    spec.base.dim = base.value("dim", spec.base.dim);
    spec.base.num_modes = base.value("modes", spec.base.num_modes);
    spec.base.bona_components = base.value("bona_components", spec.base.bona_components);
    spec.base.bona_spread = base.value("bona_spread", spec.base.bona_spread);
    spec.base.mode_distance = base.value("mode_distance", spec.base.mode_distance);
    spec.base.cluster_std = base.value("cluster_std", spec.base.cluster_std);
    spec.base.seed = base.value("seed", spec.base.seed);
    spec.base.validate();

    if (!doc.contains("domains") || !doc["domains"].is_array() || doc["domains"].empty()) {
      throw ConfigError("generator spec needs a non-empty 'domains' array");
    }
    std::set<std::string> names;
    for (const auto& d : doc["domains"]) {
      DomainSpec ds;
      ds.name = d.at("name").get<std::string>();
      if (!names.insert(ds.name).second) throw ConfigError("duplicate domain name '" + ds.name + "'");
      ds.domain_id = d.value("domain_id", static_cast<int>(spec.domains.size()));
      ds.theta = d.value("theta", 0.0);
      if (d.contains("scale")) ds.scale = vector_or_scalar(d["scale"], spec.base.dim);
      if (d.contains("shift")) ds.shift = vector_or_scalar(d["shift"], spec.base.dim);
      ds.noise = d.value("noise", 0.0);
      for (int m : d.at("modes").get<std::vector<int>>()) ds.modes.insert(m);
      ds.n_bona = d.value("n_bona", ds.n_bona);
      ds.n_spoof = d.value("n_spoof", ds.n_spoof);
      ds.seed = d.value("seed", std::uint64_t{0});
      spec.domains.push_back(std::move(ds));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("generator spec: ") + e.what());
  }
  const BaseTask task = make_base_task(spec.base);
  for (const auto& d : spec.domains) d.validate(task);
  return spec;
}

GeneratorSpec load_generator_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_generator_spec(ss.str());
}

void reseed(GeneratorSpec& spec, std::uint64_t seed) {
  spec.base.seed = seed;
  for (auto& d : spec.domains) d.seed = mix_seed(seed, hash_string(d.name));
}

void generate_to_directory(const GeneratorSpec& spec, const std::filesystem::path& out_dir) {
  std::set<std::string> names;
  for (const auto& d : spec.domains) {
    if (!names.insert(d.name).second) throw ConfigError("duplicate domain name '" + d.name + "'");
  }
  std::filesystem::create_directories(out_dir);
  const BaseTask task = make_base_task(spec.base);
  std::ofstream manifest(out_dir / "manifest.csv", std::ios::binary | std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + out_dir.string());
  manifest << "name,domain_id,rows,n_bona,n_spoof,modes\n";
  for (const auto& d : spec.domains) {
    const DatasetHandle ds = generate_domain(d, task);
    save_csv(ds, out_dir / (d.name + ".csv"));
    std::string modes;
    for (int m : d.modes) modes += (modes.empty() ? "" : ";") + std::to_string(m);
    manifest << fmt::format("{},{},{},{},{},{}\n", d.name, d.domain_id, ds.size(), ds.count_label(1),
                            ds.count_label(0), modes);
  }
}

// ---------------------------------------------------------------------------
// Samplers

namespace {

class ShuffledStream {
 public:
  ShuffledStream(std::size_t size, std::uint64_t seed) : order_(size), rng_(seed) { refill(); }

  std::uint32_t next() {
    if (pos_ == order_.size()) refill();
    return static_cast<std::uint32_t>(order_[pos_++]);
  }

 private:
  void refill() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t pos_ = 0;
};

std::vector<std::size_t> sizes_of(std::span<const DatasetHandle> datasets) {
  std::vector<std::size_t> sizes;
  for (const auto& d : datasets) sizes.push_back(d.size());
  return sizes;
}

}  // namespace

std::vector<Batch> pooled_batches(std::span<const std::size_t> sizes, std::size_t batch_size,
                                  std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<RowRef> all;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (std::size_t r = 0; r < sizes[k]; ++r) {
      all.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(r)});
    }
  }
  if (all.empty()) throw ArgumentError("pooled_batches: no rows in the union of datasets");
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < all.size(); start += batch_size) {
    const std::size_t end = std::min(all.size(), start + batch_size);
    batches.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(start),
                         all.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<Batch> pooled_batches(std::span<const DatasetHandle> datasets,
                                  std::size_t batch_size, std::uint64_t seed) {
  const auto sizes = sizes_of(datasets);
  return pooled_batches(sizes, batch_size, seed);
}

std::vector<Batch> balanced_batches(std::span<const std::size_t> sizes, std::size_t batch_size,
                                    std::uint64_t seed) {
  const std::size_t k = sizes.size();
  if (k == 0) throw ArgumentError("balanced_batches: no datasets");
  if (batch_size < k) {
    throw ConfigError(fmt::format("balanced batches need batch size >= number of datasets ({} < {})",
                                  batch_size, k));
  }
  for (std::size_t s : sizes) {
    if (s == 0) throw ArgumentError("balanced_batches: empty dataset");
  }
  std::vector<ShuffledStream> streams;
  for (std::size_t i = 0; i < k; ++i) streams.emplace_back(sizes[i], mix_seed(seed, i));

  const std::size_t largest =
      static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  const std::size_t base = batch_size / k;
  const std::size_t extra = batch_size % k;

  std::vector<Batch> batches;
  std::size_t consumed_largest = 0;
  for (std::size_t t = 0; consumed_largest < sizes[largest]; ++t) {
    Batch batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < k; ++i) {
      // Dataset i gets an extra row when it falls in this batch's rotating window.
      const std::size_t offset = (i + k - (t * extra) % k) % k;
      const std::size_t quota = base + (offset < extra ? 1 : 0);
      for (std::size_t q = 0; q < quota; ++q) {
        batch.push_back({static_cast<std::uint32_t>(i), streams[i].next()});
      }
      if (i == largest) consumed_largest += quota;
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<Batch> balanced_batches(std::span<const DatasetHandle> datasets,
                                    std::size_t batch_size, std::uint64_t seed) {
  const auto sizes = sizes_of(datasets);
  return balanced_batches(sizes, batch_size, seed);
}

Matrix gather_features(std::span<const DatasetHandle> datasets, const Batch& batch) {
  if (datasets.empty()) throw ArgumentError("gather_features: no datasets");
  const std::size_t d = datasets[0].dim();
  Matrix out(batch.size(), d);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ds = datasets[batch[i].dataset];
    if (ds.dim() != d) throw DimensionError("datasets disagree in feature dimension");
    auto src = ds.features.row(batch[i].row);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> gather_labels(std::span<const DatasetHandle> datasets, const Batch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& ref : batch) out.push_back(datasets[ref.dataset].labels[ref.row]);
  return out;
}

}  // namespace sharpmd::data
