#include "tfb/runner.hpp"

#include "tfb/catalog.hpp"
#include "tfb/preprocess.hpp"
#include "tfb/report.hpp"
#include "tfb/training.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace tfb {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCodeVersion = "0.1.0";

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (window_configs.empty()) throw ConfigError("window_configs must be non-empty");
  if (models.empty()) throw ConfigError("models must be non-empty");
  if (parts.empty()) throw ConfigError("parts must be non-empty");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (epsilon <= 0) throw ConfigError("epsilon must be positive");
  for (const auto& cfg : window_configs) {
    if (cfg.train_window <= 0 || cfg.pred_window <= 0)
      throw ConfigError("window sizes must be positive");
  }
  for (const auto& m : metrics) {
    if (!is_known_metric(interval, m)) throw ConfigError("unknown metric: " + m);
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }

  ExperimentConfig c;
  try {
    if (j.contains("dataset_root")) c.dataset_root = j["dataset_root"].get<std::string>();
    if (j.contains("parts")) {
      c.parts.clear();
      for (const auto& p : j["parts"]) c.parts.push_back(aggregation_level_from_string(p));
    }
    if (j.contains("interval")) c.interval = interval_from_string(j["interval"]);
    if (j.contains("metrics"))
      for (const auto& m : j["metrics"]) c.metrics.push_back(m.get<std::string>());
    if (j.contains("windows")) {
      for (const auto& w : j["windows"])
        c.window_configs.push_back({w.at(0).get<Eigen::Index>(), w.at(1).get<Eigen::Index>()});
    } else {
      c.window_configs = benchmark_window_configs();
    }
    if (j.contains("models")) {
      for (const auto& m : j["models"]) c.models.push_back(model_kind_from_string(m));
    } else {
      c.models = all_model_kinds();
    }
    if (j.contains("model_overrides")) {
      for (const auto& [name, o] : j["model_overrides"].items()) {
        ModelOverride ov;
        ov.kind = model_kind_from_string(name);
        if (o.contains("rnn_layers")) ov.rnn_layers = o["rnn_layers"].get<int>();
        if (o.contains("hidden_size")) ov.hidden_size = o["hidden_size"].get<int>();
        if (o.contains("batch_size")) ov.batch_size = o["batch_size"].get<int>();
        if (o.contains("epochs")) ov.epochs = o["epochs"].get<int>();
        if (o.contains("learning_rate")) ov.learning_rate = o["learning_rate"].get<double>();
        if (o.contains("connectivity_p")) ov.connectivity_p = o["connectivity_p"].get<double>();
        if (o.contains("conv_channels"))
          ov.conv_channels = o["conv_channels"].get<std::vector<int>>();
        c.model_overrides.push_back(std::move(ov));
      }
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("series_sample")) c.series_sample = j["series_sample"].get<std::size_t>();
    if (j.contains("sampling_seed")) c.sampling_seed = j["sampling_seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("parallelism")) c.parallelism = j["parallelism"].get<unsigned>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("fixture_mode")) c.fixture_mode = j["fixture_mode"].get<bool>();
    if (j.contains("resume")) c.resume = j["resume"].get<bool>();
    if (j.contains("isolated_workers")) c.isolated_workers = j["isolated_workers"].get<bool>();
    if (j.contains("layout")) {
      const auto& l = j["layout"];
      if (l.contains("extension")) c.layout.extension = l["extension"].get<std::string>();
      if (l.contains("timestamp_column"))
        c.layout.timestamp_column = l["timestamp_column"].get<std::string>();
      if (l.contains("column_mapping"))
        c.layout.column_mapping =
            l["column_mapping"].get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError("config field error: " + std::string(e.what()));
  }
  return c;
}

ModelSpec resolve_spec(const ExperimentConfig& config, ModelKind kind, const WindowConfig& cfg,
                       std::uint64_t seed) {
  ModelSpec spec = default_spec(kind, static_cast<int>(cfg.train_window),
                                static_cast<int>(cfg.pred_window), seed);
  for (const auto& ov : config.model_overrides) {
    if (ov.kind != kind) continue;
    if (ov.rnn_layers) spec.rnn_layers = *ov.rnn_layers;
    if (ov.hidden_size) spec.hidden_size = *ov.hidden_size;
    if (ov.batch_size) spec.batch_size = *ov.batch_size;
    if (ov.epochs) spec.epochs = *ov.epochs;
    if (ov.learning_rate) spec.learning_rate = *ov.learning_rate;
    if (ov.connectivity_p) spec.connectivity_p = *ov.connectivity_p;
    if (ov.conv_channels) spec.conv_channels = *ov.conv_channels;
  }
  return spec;
}

// ---- validation ----

ValidationReport validate_data(const ExperimentConfig& config) {
  ValidationReport report;
  const auto catalog = catalog_metrics(config.interval);
  for (const AggregationLevel level : config.parts) {
    report.missing_histograms[level] = {};
    std::vector<std::string> ids;
    try {
      ids = list_series_ids(config.dataset_root, level, config.interval, config.layout);
    } catch (const PathNotFoundError& e) {
      report.problems.emplace_back(e.what());
      report.series_counts[level] = 0;
      continue;
    }
    report.series_counts[level] = ids.size();
    for (const auto& id : ids) {
      const SeriesKey key{level, id, config.interval};
      const fs::path file =
          config.layout.series_path(config.dataset_root, level, config.interval, id);
      try {
        // Grid and parse checks on the first catalog metric, column coverage
        // on the header for the rest.
        const MetricSeries series =
            load_series_file(file, key, catalog.front().name, config.layout);
        std::ifstream is(file);
        std::string header_line;
        std::getline(is, header_line);
        for (const auto& entry : catalog) {
          const std::string& col = config.layout.column_for(entry.name);
          std::istringstream hs(header_line);
          std::string field;
          bool found = false;
          while (std::getline(hs, field, ',')) {
            if (field == col) { found = true; break; }
          }
          if (!found)
            report.problems.push_back(file.string() + ": missing metric column " + col);
        }
        const double ratio = missing_ratio(series);
        const auto bucket = std::min<std::size_t>(9, static_cast<std::size_t>(ratio * 10.0));
        ++report.missing_histograms[level][bucket];
      } catch (const std::exception& e) {
        report.problems.emplace_back(e.what());
      }
    }
  }
  return report;
}

void print_validation_report(std::ostream& os, const ValidationReport& report) {
  for (const auto& [level, count] : report.series_counts) {
    os << to_string(level) << ": " << count << " series\n";
    const auto it = report.missing_histograms.find(level);
    if (it != report.missing_histograms.end()) {
      os << "  missing-ratio histogram (deciles):";
      for (const auto n : it->second) os << ' ' << n;
      os << '\n';
    }
  }
  for (const auto& p : report.problems) os << "PROBLEM: " << p << '\n';
  os << (report.ok() ? "OK" : "FAILED") << '\n';
}

// ---- experiment execution ----

namespace {

struct Job {
  const MetricSeries* series;
  WindowConfig config;
  ModelKind model;
  std::uint64_t seed;
};

std::string job_id(const Job& job) {
  EvaluationRecord r;
  r.key = job.series->key();
  r.metric_name = job.series->metric_name();
  r.config = job.config;
  r.model_kind = job.model;
  r.seed = job.seed;
  return record_job_id(r);
}

EvaluationRecord run_job(const Job& job, const ExperimentConfig& config) {
  EvaluationRecord rec;
  rec.key = job.series->key();
  rec.metric_name = job.series->metric_name();
  rec.config = job.config;
  rec.model_kind = job.model;
  rec.seed = job.seed;
  rec.missing_ratio = missing_ratio(*job.series);
  rec.timing.comparable = config.isolated_workers;

  try {
    const MetricSeries filled = fill_missing_zero(*job.series);
    const SplitIndices split = split_series(filled.size());
    const auto& values = filled.values();
    const ScalerParams scaler = fit_scaler(values.head(split.train_end));

    const Eigen::VectorXd train_scaled = transform(scaler, values.head(split.train_end));
    const Eigen::VectorXd val_scaled =
        transform(scaler, values.segment(split.train_end, split.val_end - split.train_end));
    const Eigen::VectorXd test_scaled =
        transform(scaler, values.tail(split.total - split.val_end));

    const auto train_windows = make_windows(train_scaled, job.config);
    const auto val_windows = make_windows(val_scaled, job.config);
    const auto test_windows = make_windows(test_scaled, job.config);
    if (test_windows.empty()) throw NoTestWindowsError();

    const ModelSpec spec = resolve_spec(config, job.model, job.config, job.seed);
    auto model = build(spec);
    const TrainReport train_report = train(*model, train_windows, val_windows);

    const auto pred_started = std::chrono::steady_clock::now();
    EvaluationRecord scored =
        evaluate_series(filled, job.config, *model, test_windows, config.epsilon);
    const double pred_elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - pred_started).count();

    rec.rmse = scored.rmse;
    rec.r2 = scored.r2;
    rec.harmonic = scored.harmonic;
    rec.n_test_windows = scored.n_test_windows;
    const std::size_t n_pred_points =
        static_cast<std::size_t>(scored.n_test_windows * job.config.pred_window);
    const auto timing = measure_times(train_report, static_cast<std::size_t>(split.train_end),
                                      std::max(pred_elapsed, 1e-9), n_pred_points);
    rec.timing.train_time_per_100 = timing.train_time_per_100;
    rec.timing.pred_time_per_100 = timing.pred_time_per_100;
    rec.status = JobStatus::ok;
  } catch (const std::exception& e) {
    rec.status = JobStatus::failed;
    std::string reason = e.what();
    for (auto& ch : reason) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    rec.failure_reason = reason;
  }
  return rec;
}

std::vector<EvaluationRecord> read_existing_records(const fs::path& out_dir) {
  std::vector<EvaluationRecord> existing;
  const fs::path merged = out_dir / "records.csv";
  if (fs::exists(merged)) {
    auto recs = read_records(merged);
    existing.insert(existing.end(), recs.begin(), recs.end());
  }
  if (fs::exists(out_dir)) {
    for (const auto& entry : fs::directory_iterator(out_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("records.part") && name.ends_with(".csv")) {
        auto recs = read_records(entry.path());
        existing.insert(existing.end(), recs.begin(), recs.end());
      }
    }
  }
  return existing;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.output_dir.empty()) throw ConfigError("output_dir is required for run");
  fs::create_directories(config.output_dir);

  RunManifest manifest;
  manifest.started_at = now_iso8601();
  manifest.code_version = kCodeVersion;
  manifest.cpu_count = std::thread::hardware_concurrency();
  manifest.isolated_workers = config.isolated_workers;

  const std::vector<std::string> metric_names = [&] {
    if (!config.metrics.empty()) return config.metrics;
    std::vector<std::string> names;
    for (const auto& e : catalog_metrics(config.interval)) names.push_back(e.name);
    return names;
  }();

  // Load every needed series once; jobs reference them read-only.
  std::vector<MetricSeries> series_pool;
  for (const AggregationLevel level : config.parts) {
    std::vector<std::string> ids = list_series_ids(config.dataset_root, level, config.interval,
                                                   config.layout);
    if (config.series_sample && *config.series_sample < ids.size()) {
      std::mt19937_64 rng(config.sampling_seed);
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(*config.series_sample);
      std::sort(ids.begin(), ids.end());
    }
    for (const auto& id : ids) {
      const SeriesKey key{level, id, config.interval};
      const fs::path file =
          config.layout.series_path(config.dataset_root, level, config.interval, id);
      for (const auto& metric : metric_names)
        series_pool.push_back(load_series_file(file, key, metric, config.layout));
    }
  }

  std::vector<Job> jobs;
  for (const auto& series : series_pool)
    for (const auto& cfg : config.window_configs)
      for (const ModelKind model : config.models)
        for (const std::uint64_t seed : config.seeds)
          jobs.push_back({&series, cfg, model, seed});
  manifest.jobs_total = jobs.size();

  std::map<std::string, EvaluationRecord> results;
  if (config.resume) {
    for (auto& r : read_existing_records(config.output_dir)) {
      results.emplace(record_job_id(r), std::move(r));
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!results.contains(job_id(jobs[i]))) pending.push_back(i);
  }
  manifest.jobs_skipped = jobs.size() - pending.size();

  const unsigned workers = std::min<unsigned>(
      config.parallelism, std::max<std::size_t>(1, pending.size()));
  std::atomic<std::size_t> next{0};
  std::mutex results_mutex;
  auto worker_fn = [&](unsigned worker_idx) {
    const fs::path part_path =
        config.output_dir / ("records.part" + std::to_string(worker_idx) + ".csv");
    std::ofstream part(part_path);
    part << kRecordsHeader << '\n';
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= pending.size()) break;
      EvaluationRecord rec = run_job(jobs[pending[slot]], config);
      append_record(part, rec);
      part.flush();
      std::lock_guard<std::mutex> lock(results_mutex);
      results.emplace(record_job_id(rec), std::move(rec));
    }
  };

  if (workers == 1) {
    worker_fn(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker_fn, w);
    for (auto& t : pool) t.join();
  }

  // Merge into a deterministically ordered records file, then drop part files.
  std::vector<EvaluationRecord> merged;
  merged.reserve(results.size());
  for (auto& [id, rec] : results) merged.push_back(rec);  // map is id-sorted
  write_records(config.output_dir / "records.csv", merged);
  for (unsigned w = 0; w < workers; ++w) {
    std::error_code ec;
    fs::remove(config.output_dir / ("records.part" + std::to_string(w) + ".csv"), ec);
  }

  for (const auto& r : merged) {
    if (r.status == JobStatus::ok) ++manifest.jobs_ok;
    else ++manifest.jobs_failed;
  }
  manifest.finished_at = now_iso8601();

  json cfg_json;
  cfg_json["dataset_root"] = config.dataset_root.string();
  cfg_json["interval"] = to_string(config.interval);
  cfg_json["fixture_mode"] = config.fixture_mode;
  cfg_json["parallelism"] = config.parallelism;
  cfg_json["seeds"] = config.seeds;
  manifest.config_json = cfg_json.dump();
  write_manifest(config.output_dir / "manifest.json", manifest);
  return manifest;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  json j;
  j["config"] = json::parse(manifest.config_json.empty() ? "{}" : manifest.config_json);
  j["code_version"] = manifest.code_version;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["jobs_total"] = manifest.jobs_total;
  j["jobs_ok"] = manifest.jobs_ok;
  j["jobs_failed"] = manifest.jobs_failed;
  j["jobs_skipped"] = manifest.jobs_skipped;
  j["cpu_count"] = manifest.cpu_count;
  j["isolated_workers"] = manifest.isolated_workers;
  j["timings_comparable"] = manifest.isolated_workers;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

// ---- fixtures ----

std::vector<FixtureSeriesSpec> load_fixture_specs(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read fixture specs " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("fixture spec parse error: " + std::string(e.what()));
  }
  std::vector<FixtureSeriesSpec> specs;
  for (const auto& s : j) {
    FixtureSeriesSpec spec;
    spec.series_id = s.at("series_id").get<std::string>();
    if (s.contains("level")) spec.level = aggregation_level_from_string(s["level"]);
    if (s.contains("interval")) spec.interval = interval_from_string(s["interval"]);
    if (s.contains("metrics")) spec.metrics = s["metrics"].get<std::vector<std::string>>();
    spec.shape.length = s.at("length").get<Eigen::Index>();
    if (s.contains("seasonal_period"))
      spec.shape.seasonal_period = s["seasonal_period"].get<Eigen::Index>();
    if (s.contains("amplitude")) spec.shape.amplitude = s["amplitude"].get<double>();
    if (s.contains("noise_std")) spec.shape.noise_std = s["noise_std"].get<double>();
    if (s.contains("missing_ratio")) spec.shape.missing_ratio = s["missing_ratio"].get<double>();
    if (s.contains("trend_slope")) spec.shape.trend_slope = s["trend_slope"].get<double>();
    if (s.contains("seed")) spec.shape.seed = s["seed"].get<std::uint64_t>();
    specs.push_back(std::move(spec));
  }
  return specs;
}

void write_fixture_tree(const fs::path& out_dir, const std::vector<FixtureSeriesSpec>& specs,
                        const DatasetLayout& layout) {
  for (const auto& spec : specs) {
    const SeriesKey key{spec.level, spec.series_id, spec.interval};
    std::vector<std::string> metrics = spec.metrics;
    if (metrics.empty()) {
      for (const auto& e : catalog_metrics(spec.interval)) metrics.push_back(e.name);
    }
    std::vector<MetricSeries> columns;
    std::uint64_t offset = 0;
    for (const auto& metric : metrics) {
      FixtureSpec shape = spec.shape;
      shape.seed = spec.shape.seed + offset++;
      columns.push_back(generate_fixture(shape, key, metric));
    }
    write_series(out_dir, columns, layout);
  }
}

}  // namespace tfb
