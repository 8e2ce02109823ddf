#pragma once

#include "tfb/dataset_io.hpp"
#include "tfb/evaluation.hpp"
#include "tfb/fixture.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tfb {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Per-model hyperparameter overrides from the config file.
struct ModelOverride {
  ModelKind kind;
  std::optional<int> rnn_layers, hidden_size, batch_size, epochs;
  std::optional<double> learning_rate, connectivity_p;
  std::optional<std::vector<int>> conv_channels;
};

struct ExperimentConfig {
  std::filesystem::path dataset_root;
  std::vector<AggregationLevel> parts = {AggregationLevel::institutions,
                                         AggregationLevel::institution_subnets,
                                         AggregationLevel::ip_addresses};
  Interval interval = Interval::one_hour;
  std::vector<std::string> metrics;  // empty = all catalog metrics
  std::vector<WindowConfig> window_configs;
  std::vector<ModelKind> models;
  std::vector<ModelOverride> model_overrides;
  std::vector<std::uint64_t> seeds = {0};
  std::optional<std::size_t> series_sample;
  std::uint64_t sampling_seed = 0;
  std::filesystem::path output_dir;
  unsigned parallelism = 1;
  double epsilon = 1e-12;
  bool fixture_mode = false;
  bool resume = false;
  bool isolated_workers = false;
  DatasetLayout layout;

  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Table defaults for (kind, window) with config overrides applied.
ModelSpec resolve_spec(const ExperimentConfig& config, ModelKind kind, const WindowConfig& cfg,
                       std::uint64_t seed);

struct RunManifest {
  std::string config_json;
  std::string code_version;
  std::string started_at, finished_at;
  std::size_t jobs_total = 0;
  std::size_t jobs_ok = 0;
  std::size_t jobs_failed = 0;
  std::size_t jobs_skipped = 0;  // resumed
  unsigned cpu_count = 0;
  bool isolated_workers = false;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

struct ValidationReport {
  std::map<AggregationLevel, std::size_t> series_counts;
  std::vector<std::string> problems;  // one line per malformed series
  std::map<AggregationLevel, std::array<std::size_t, 10>> missing_histograms;
  bool ok() const { return problems.empty(); }
};

ValidationReport validate_data(const ExperimentConfig& config);
void print_validation_report(std::ostream& os, const ValidationReport& report);

/// Executes the full job matrix (parts x metrics x configs x models x series
/// x seeds) over a bounded worker pool. Per-worker part files are merged into
/// a sorted records.csv; completed jobs are skipped on resume.
RunManifest run_experiment(const ExperimentConfig& config);

/// Writes a fixture dataset tree in the canonical layout.
struct FixtureSeriesSpec {
  std::string series_id;
  AggregationLevel level = AggregationLevel::institutions;
  Interval interval = Interval::one_hour;
  std::vector<std::string> metrics;
  FixtureSpec shape;
};

std::vector<FixtureSeriesSpec> load_fixture_specs(const std::filesystem::path& path);
void write_fixture_tree(const std::filesystem::path& out_dir,
                        const std::vector<FixtureSeriesSpec>& specs,
                        const DatasetLayout& layout = {});

}  // namespace tfb
