// tfb: dataset validation, experiment runs, aggregation and reporting for the
// univariate traffic-forecasting benchmark.

#include "tfb/report.hpp"
#include "tfb/runner.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config_path;
  std::string output_dir;
  std::string dataset_root;
  unsigned parallelism = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> parts;
  std::vector<std::string> metrics;
  std::vector<std::string> models;
  std::vector<std::string> windows;
  std::optional<std::size_t> sample;
  bool resume = false;
};

void add_common_flags(CLI::App& app, CommonFlags& f, bool config_required) {
  auto* cfg = app.add_option("--config", f.config_path, "experiment config JSON");
  if (config_required) cfg->required();
  app.add_option("--output", f.output_dir, "output directory");
  app.add_option("--parallelism", f.parallelism, "worker count");
  app.add_option("--seed", f.seeds, "training seeds");
  app.add_option("--parts", f.parts, "aggregation levels");
  app.add_option("--metrics", f.metrics, "metric names");
  app.add_option("--models", f.models, "model kinds");
  app.add_option("--windows", f.windows, "window configs as W:H");
  app.add_option("--sample", f.sample, "sample N series per part");
  app.add_flag("--resume", f.resume, "skip jobs already recorded");
}

tfb::WindowConfig parse_window(const std::string& s) {
  const auto sep = s.find_first_of(":x");
  if (sep == std::string::npos)
    throw tfb::ConfigError("window must be W:H, got " + s);
  tfb::WindowConfig cfg;
  cfg.train_window = std::stol(s.substr(0, sep));
  cfg.pred_window = std::stol(s.substr(sep + 1));
  return cfg;
}

tfb::ExperimentConfig build_config(const CommonFlags& f) {
  tfb::ExperimentConfig config;
  if (!f.config_path.empty()) config = tfb::load_config(f.config_path);
  if (config.window_configs.empty()) config.window_configs = tfb::benchmark_window_configs();
  if (config.models.empty()) config.models = tfb::all_model_kinds();

  if (const char* root = std::getenv("TFB_DATASET_ROOT")) config.dataset_root = root;
  if (!f.dataset_root.empty()) config.dataset_root = f.dataset_root;
  if (!f.output_dir.empty()) config.output_dir = f.output_dir;
  if (f.parallelism > 0) config.parallelism = f.parallelism;
  if (!f.seeds.empty()) config.seeds = f.seeds;
  if (!f.parts.empty()) {
    config.parts.clear();
    for (const auto& p : f.parts) config.parts.push_back(tfb::aggregation_level_from_string(p));
  }
  if (!f.metrics.empty()) config.metrics = f.metrics;
  if (!f.models.empty()) {
    config.models.clear();
    for (const auto& m : f.models) config.models.push_back(tfb::model_kind_from_string(m));
  }
  if (!f.windows.empty()) {
    config.window_configs.clear();
    for (const auto& w : f.windows) config.window_configs.push_back(parse_window(w));
  }
  if (f.sample) config.series_sample = f.sample;
  if (f.resume) config.resume = true;
  return config;
}

int cmd_validate_data(const CommonFlags& f) {
  const tfb::ExperimentConfig config = build_config(f);
  const tfb::ValidationReport report = tfb::validate_data(config);
  tfb::print_validation_report(std::cout, report);
  return report.ok() ? kExitOk : kExitValidation;
}

int cmd_run(const CommonFlags& f) {
  const tfb::ExperimentConfig config = build_config(f);
  const tfb::RunManifest manifest = tfb::run_experiment(config);
  std::cout << "jobs: " << manifest.jobs_total << " total, " << manifest.jobs_ok << " ok, "
            << manifest.jobs_failed << " failed, " << manifest.jobs_skipped << " resumed\n"
            << "records: " << (config.output_dir / "records.csv").string() << "\n";
  return kExitOk;
}

std::vector<tfb::EvaluationRecord> load_run_records(const CommonFlags& f) {
  if (f.output_dir.empty()) throw tfb::ConfigError("--output is required");
  return tfb::read_records(std::filesystem::path(f.output_dir) / "records.csv");
}

int cmd_aggregate(const CommonFlags& f, const std::vector<std::string>& measures) {
  const auto records = load_run_records(f);
  for (const auto& name : measures) {
    tfb::Measure measure;
    if (name == "rmse") measure = tfb::Measure::rmse;
    else if (name == "r2") measure = tfb::Measure::r2;
    else if (name == "harmonic") measure = tfb::Measure::harmonic;
    else if (name == "train_time") measure = tfb::Measure::train_time;
    else if (name == "pred_time") measure = tfb::Measure::pred_time;
    else throw tfb::ConfigError("unknown measure: " + name);
    std::cout << tfb::render_table(tfb::build_table(records, measure)) << "\n";
  }
  return kExitOk;
}

int cmd_report(const CommonFlags& f) {
  const auto records = load_run_records(f);
  const std::filesystem::path out(f.output_dir);
  for (const tfb::Measure m :
       {tfb::Measure::rmse, tfb::Measure::r2, tfb::Measure::harmonic}) {
    const std::string text = tfb::render_table(tfb::build_table(records, m));
    std::ofstream os(out / ("table_" + std::string(tfb::to_string(m)) + ".txt"));
    os << text;
    std::cout << text << "\n";
  }
  const auto bars = tfb::metric_harmonic_summary(records);
  tfb::write_metric_chart(out / "metric_harmonic.svg", out / "metric_harmonic.csv", bars);
  std::cout << "chart: " << (out / "metric_harmonic.svg").string() << "\n";

  std::vector<const tfb::EvaluationRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  try {
    std::cout << "missing-ratio vs r2 correlation: " << tfb::correlate_missing(ptrs) << "\n";
  } catch (const std::exception&) {
    // Too few usable records for a correlation; not an error.
  }
  return kExitOk;
}

int cmd_fixtures(const CommonFlags& f, const std::string& spec_path) {
  if (f.output_dir.empty()) throw tfb::ConfigError("--output is required");
  const auto specs = tfb::load_fixture_specs(spec_path);
  tfb::write_fixture_tree(f.output_dir, specs);
  std::cout << "wrote " << specs.size() << " fixture series under " << f.output_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"univariate network-traffic forecasting benchmark"};
  app.require_subcommand(1);

  CommonFlags validate_flags, run_flags, agg_flags, report_flags, fixture_flags;
  std::vector<std::string> measures = {"rmse", "r2", "harmonic"};
  std::string fixture_spec_path;

  auto* validate = app.add_subcommand("validate-data", "check a dataset tree");
  add_common_flags(*validate, validate_flags, true);

  auto* run = app.add_subcommand("run", "execute the experiment matrix");
  add_common_flags(*run, run_flags, true);

  auto* aggregate = app.add_subcommand("aggregate", "print aggregate tables");
  add_common_flags(*aggregate, agg_flags, false);
  aggregate->add_option("--measure", measures, "measures to tabulate");

  auto* report = app.add_subcommand("report", "write tables and charts");
  add_common_flags(*report, report_flags, false);

  auto* fixtures = app.add_subcommand("fixtures", "generate a fixture dataset tree");
  add_common_flags(*fixtures, fixture_flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (validate->parsed()) return cmd_validate_data(validate_flags);
    if (run->parsed()) return cmd_run(run_flags);
    if (aggregate->parsed()) return cmd_aggregate(agg_flags, measures);
    if (report->parsed()) return cmd_report(report_flags);
    if (fixtures->parsed()) return cmd_fixtures(fixture_flags, fixture_flags.config_path);
  } catch (const tfb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
