#include "doctest.h"

#include "tfb/report.hpp"
#include "tfb/runner.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace tfb;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tfb_runner_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<FixtureSeriesSpec> small_fixture_specs(int n_series, Eigen::Index length) {
  std::vector<FixtureSeriesSpec> specs;
  for (int i = 0; i < n_series; ++i) {
    FixtureSeriesSpec s;
    s.series_id = "inst_" + std::to_string(i);
    s.level = AggregationLevel::institutions;
    s.interval = Interval::one_hour;
    s.shape.length = length;
    s.shape.seasonal_period = 24;
    s.shape.amplitude = 2.0;
    s.shape.noise_std = 0.05;
    s.shape.missing_ratio = i == 0 ? 0.0 : 0.02;
    s.shape.seed = 100 + static_cast<std::uint64_t>(i);
    specs.push_back(std::move(s));
  }
  return specs;
}

// Tiny hyperparameters so the full matrix runs in seconds.
void shrink_models(ExperimentConfig& config) {
  for (const ModelKind kind : all_model_kinds()) {
    if (kind == ModelKind::mean) continue;
    ModelOverride ov;
    ov.kind = kind;
    ov.epochs = 1;
    switch (kind) {
      case ModelKind::gru:
      case ModelKind::lstm:
      case ModelKind::rclstm:
        ov.hidden_size = 8;
        break;
      case ModelKind::gru_fcn:
      case ModelKind::lstm_fcn:
        ov.hidden_size = 4;
        ov.rnn_layers = 1;
        ov.conv_channels = std::vector<int>{4, 6, 4};
        break;
      case ModelKind::resnet:
        ov.conv_channels = std::vector<int>{4, 6, 6};
        break;
      default:
        break;
    }
    if (kind == ModelKind::rclstm) ov.connectivity_p = 0.5;
    config.model_overrides.push_back(std::move(ov));
  }
}

ExperimentConfig fixture_config(const fs::path& root, const fs::path& out) {
  ExperimentConfig config;
  config.dataset_root = root;
  config.parts = {AggregationLevel::institutions};
  config.metrics = {"n_flows"};
  config.window_configs = benchmark_window_configs();
  config.models = all_model_kinds();
  config.output_dir = out;
  config.fixture_mode = true;
  shrink_models(config);
  return config;
}

}  // namespace

TEST_CASE("config loading and validation") {
  const fs::path dir = fresh_dir("config");
  {
    std::ofstream os(dir / "config.json");
    os << R"({
      "dataset_root": "/data",
      "parts": ["institutions", "ip_addresses"],
      "interval": "1h",
      "metrics": ["n_flows", "n_bytes"],
      "windows": [[24, 1], [168, 24]],
      "models": ["mean", "gru"],
      "model_overrides": {"gru": {"epochs": 3, "hidden_size": 10}},
      "seeds": [0, 1],
      "parallelism": 2,
      "series_sample": 5
    })";
  }
  const ExperimentConfig c = load_config(dir / "config.json");
  CHECK(c.dataset_root == "/data");
  CHECK(c.parts.size() == 2);
  CHECK(c.metrics.size() == 2);
  CHECK(c.window_configs == std::vector<WindowConfig>{{24, 1}, {168, 24}});
  CHECK(c.models == std::vector<ModelKind>{ModelKind::mean, ModelKind::gru});
  CHECK(c.seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(c.parallelism == 2);
  CHECK(c.series_sample == 5);
  CHECK_NOTHROW(c.validate());

  const ModelSpec spec = resolve_spec(c, ModelKind::gru, {24, 1}, 0);
  CHECK(spec.epochs == 3);
  CHECK(spec.hidden_size == 10);
  CHECK(spec.batch_size == 16);  // untouched default

  {
    std::ofstream os(dir / "bad.json");
    os << "{ not json";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);

  ExperimentConfig invalid = c;
  invalid.metrics = {"no_such_metric"};
  CHECK_THROWS_AS(invalid.validate(), ConfigError);
  invalid = c;
  invalid.parallelism = 0;
  CHECK_THROWS_AS(invalid.validate(), ConfigError);
}

TEST_CASE("fixture tree passes validation and a corrupt file fails it") {
  const fs::path root = fresh_dir("validate");
  write_fixture_tree(root, small_fixture_specs(3, 120));

  ExperimentConfig config;
  config.dataset_root = root;
  config.parts = {AggregationLevel::institutions};
  const ValidationReport ok_report = validate_data(config);
  CHECK(ok_report.ok());
  CHECK(ok_report.series_counts.at(AggregationLevel::institutions) == 3);
  std::size_t binned = 0;
  for (const auto n : ok_report.missing_histograms.at(AggregationLevel::institutions))
    binned += n;
  CHECK(binned == 3);

  {
    std::ofstream os(root / "institutions" / "1h" / "inst_0.csv", std::ios::app);
    os << "1696204800,1,1,1\n";  // duplicate timestamp, short row
  }
  const ValidationReport bad_report = validate_data(config);
  CHECK(!bad_report.ok());
  bool names_file = false;
  for (const auto& p : bad_report.problems)
    if (p.find("inst_0") != std::string::npos) names_file = true;
  CHECK(names_file);

  std::ostringstream out;
  print_validation_report(out, bad_report);
  CHECK(out.str().find("FAILED") != std::string::npos);
}

TEST_CASE("run_experiment covers the full matrix and resumes cleanly") {
  const fs::path root = fresh_dir("run_root");
  const fs::path out = fresh_dir("run_out");
  write_fixture_tree(root, small_fixture_specs(3, 400));
  const ExperimentConfig config = fixture_config(root, out);

  const RunManifest manifest = run_experiment(config);
  // 3 series x 1 metric x 5 configs x 8 models x 1 seed
  CHECK(manifest.jobs_total == 120);
  CHECK(manifest.jobs_ok + manifest.jobs_failed == 120);
  CHECK(manifest.jobs_ok >= 24);  // every (24,1) job fits the short fixture
  CHECK(manifest.jobs_skipped == 0);

  const auto records = read_records(out / "records.csv");
  CHECK(records.size() == 120);
  for (const auto& r : records) {
    if (r.status == JobStatus::failed) CHECK(!r.failure_reason.empty());
  }
  // deterministic ordering by job id
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(record_job_id(r));
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(fs::exists(out / "manifest.json"));

  // resume: everything is already recorded
  ExperimentConfig again = config;
  again.resume = true;
  const RunManifest second = run_experiment(again);
  CHECK(second.jobs_skipped == 120);
  const auto records2 = read_records(out / "records.csv");
  REQUIRE(records2.size() == 120);
  for (std::size_t i = 0; i < records2.size(); ++i) {
    CHECK(record_job_id(records2[i]) == ids[i]);
    CHECK(records2[i].rmse == records[i].rmse);
  }
}

TEST_CASE("parallel run yields the same records as a serial run") {
  const fs::path root = fresh_dir("par_root");
  write_fixture_tree(root, small_fixture_specs(2, 300));

  ExperimentConfig serial = fixture_config(root, fresh_dir("par_out1"));
  serial.window_configs = {{24, 1}};
  ExperimentConfig parallel = serial;
  parallel.output_dir = fresh_dir("par_out2");
  parallel.parallelism = 4;

  run_experiment(serial);
  run_experiment(parallel);
  const auto a = read_records(serial.output_dir / "records.csv");
  const auto b = read_records(parallel.output_dir / "records.csv");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(record_job_id(a[i]) == record_job_id(b[i]));
    CHECK(a[i].rmse == b[i].rmse);
    CHECK(a[i].r2 == b[i].r2);
  }
}

TEST_CASE("aggregate table replicates the reference layout") {
  // synthetic records: 1 part x 5 configs x 8 models x 3 series
  std::vector<EvaluationRecord> records;
  int salt = 0;
  for (const auto& cfg : benchmark_window_configs()) {
    for (const ModelKind kind : all_model_kinds()) {
      for (int s = 0; s < 3; ++s) {
        EvaluationRecord r;
        r.key = {AggregationLevel::institutions, "s" + std::to_string(s), Interval::one_hour};
        r.metric_name = "n_flows";
        r.config = cfg;
        r.model_kind = kind;
        r.rmse = 0.1 + 0.001 * (salt % 17);
        r.r2 = 0.8 - 0.001 * (salt % 13);
        r.harmonic = harmonic_score({r.rmse, r.r2});
        r.n_test_windows = 5;
        ++salt;
        records.push_back(std::move(r));
      }
    }
  }

  const AggregateTable table = build_table(records, Measure::rmse);
  CHECK(table.rows.size() == 5);
  CHECK(table.models.size() == 8);
  for (const auto& row : table.rows) CHECK(row.cells.size() == 8);
  CHECK(table.part_means.size() == 1);
  CHECK(table.overall.size() == 8);

  // overall is the macro average of the five per-config means
  for (std::size_t m = 0; m < 8; ++m) {
    std::vector<double> means;
    for (const auto& row : table.rows) means.push_back(row.cells[m].mean);
    CHECK(table.overall[m] == doctest::Approx(overall_mean(means)).epsilon(1e-12));
  }

  const std::string text = render_table(table);
  CHECK(text.find("institutions") != std::string::npos);
  CHECK(text.find("744/168") != std::string::npos);
  CHECK(text.find(" *") != std::string::npos);
  CHECK(text.find(" !") != std::string::npos);
}

TEST_CASE("cell format is the bit-exact contract") {
  CHECK(format_cell({0.104, 0.53, 10}) == "0.104 (0.53)");
  CHECK(format_cell({0.1044999, 0.534, 2}) == "0.104 (0.53)");
  CHECK(format_cell({1.0, 0.0, 1}) == "1.000 (0.00)");
  CHECK(format_cell({12.3456, 9.876, 3}) == "12.346 (9.88)");
}

TEST_CASE("metric chart data averages models per metric") {
  std::vector<EvaluationRecord> records;
  for (const auto* metric : {"n_flows", "n_bytes"}) {
    for (const ModelKind kind : {ModelKind::mean, ModelKind::gru}) {
      EvaluationRecord r;
      r.key = {AggregationLevel::institutions, "s0", Interval::one_hour};
      r.metric_name = metric;
      r.config = {24, 1};
      r.model_kind = kind;
      r.rmse = std::string(metric) == "n_flows" ? 0.2 : 0.4;
      r.r2 = 0.5;
      r.harmonic = harmonic_score({r.rmse, r.r2});
      r.n_test_windows = 5;
      records.push_back(std::move(r));
    }
  }
  const auto bars = metric_harmonic_summary(records);
  REQUIRE(bars.size() == 2);
  CHECK(bars[0].first == "n_bytes");
  CHECK(bars[0].second == doctest::Approx(harmonic_score({0.4, 0.5})));
  CHECK(bars[1].second == doctest::Approx(harmonic_score({0.2, 0.5})));

  const fs::path dir = fresh_dir("chart");
  write_metric_chart(dir / "c.svg", dir / "c.csv", bars);
  std::ifstream svg(dir / "c.svg");
  const std::string content((std::istreambuf_iterator<char>(svg)),
                            std::istreambuf_iterator<char>());
  CHECK(content.find("<svg") != std::string::npos);
  CHECK(std::count(content.begin(), content.end(), '\n') > 2);
  CHECK(content.find("n_flows") != std::string::npos);
}

TEST_CASE("fixture spec file round trip") {
  const fs::path dir = fresh_dir("fixspecs");
  {
    std::ofstream os(dir / "fixtures.json");
    os << R"([
      {"series_id": "inst_0", "level": "institutions", "interval": "1h",
       "metrics": ["n_flows"], "length": 64, "seasonal_period": 24,
       "amplitude": 2.0, "noise_std": 0.1, "missing_ratio": 0.05, "seed": 3},
      {"series_id": "ip_0", "level": "ip_addresses", "length": 48}
    ])";
  }
  const auto specs = load_fixture_specs(dir / "fixtures.json");
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].shape.length == 64);
  CHECK(specs[0].metrics == std::vector<std::string>{"n_flows"});
  CHECK(specs[1].level == AggregationLevel::ip_addresses);

  const fs::path tree = fresh_dir("fixtree");
  write_fixture_tree(tree, specs);
  CHECK(fs::exists(tree / "institutions" / "1h" / "inst_0.csv"));
  CHECK(fs::exists(tree / "ip_addresses" / "1h" / "ip_0.csv"));
}

#ifdef TFB_CLI_PATH
TEST_CASE("cli exit codes") {
  const fs::path dir = fresh_dir("cli");
  const std::string cli = TFB_CLI_PATH;
  {
    std::ofstream os(dir / "fixtures.json");
    os << R"([{"series_id": "inst_0", "level": "institutions", "length": 80, "seed": 1}])";
  }
  const fs::path tree = dir / "tree";

  auto run = [](const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };

  CHECK(run(cli + " fixtures --config " + (dir / "fixtures.json").string() + " --output " +
            tree.string()) == 0);

  {
    std::ofstream os(dir / "config.json");
    os << R"({"dataset_root": ")" << tree.string()
       << R"(", "parts": ["institutions"], "interval": "1h"})";
  }
  CHECK(run(cli + " validate-data --config " + (dir / "config.json").string()) == 0);

  {
    std::ofstream os(tree / "institutions" / "1h" / "inst_0.csv", std::ios::app);
    os << "garbage,row\n";
  }
  CHECK(run(cli + " validate-data --config " + (dir / "config.json").string()) == 1);

  {
    std::ofstream os(dir / "broken.json");
    os << "{";
  }
  CHECK(run(cli + " validate-data --config " + (dir / "broken.json").string()) == 2);
  CHECK(run(cli + " validate-data") == 2);  // missing required flag

  // env var override for the dataset root
  {
    std::ofstream os(dir / "noroot.json");
    os << R"({"parts": ["institutions"], "interval": "1h"})";
  }
  CHECK(run("env TFB_DATASET_ROOT=/nonexistent " + cli + " validate-data --config " +
            (dir / "noroot.json").string()) == 1);
}
#endif
