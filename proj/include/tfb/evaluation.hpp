#pragma once

#include "tfb/metrics.hpp"
#include "tfb/model_zoo.hpp"
#include "tfb/preprocess.hpp"
#include "tfb/series.hpp"
#include "tfb/training.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tfb {

enum class JobStatus { ok, failed };

/// One (series x metric x config x model) result row.
struct EvaluationRecord {
  SeriesKey key;
  std::string metric_name;
  WindowConfig config;
  ModelKind model_kind = ModelKind::mean;
  double rmse = 0.0;
  double r2 = 0.0;
  double harmonic = 0.0;
  TimingRecord timing;
  double missing_ratio = 0.0;
  Eigen::Index n_test_windows = 0;
  std::uint64_t seed = 0;
  JobStatus status = JobStatus::ok;
  std::string failure_reason;
};

struct NoTestWindowsError : std::runtime_error {
  NoTestWindowsError() : std::runtime_error("series too short for this window config") {}
};

/// Scores a trained model on the test windows: predictions for every window
/// are pooled in time order and RMSE / R^2 are computed once over the pooled
/// scaled sequences.
EvaluationRecord evaluate_series(const MetricSeries& series, const WindowConfig& cfg,
                                 Forecaster& model,
                                 const std::vector<SupervisedWindow>& test_windows,
                                 double epsilon = 1e-12,
                                 const ClipThresholds& clips = {});

enum class Measure { rmse, r2, harmonic, train_time, pred_time };
const char* to_string(Measure m);

struct AggregateCell {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) convention
  std::size_t n = 0;
};

struct EmptyGroupError : std::runtime_error {
  EmptyGroupError() : std::runtime_error("empty aggregation group") {}
};

/// Mean and sample standard deviation of one measure across records.
/// Harmonic is averaged per-record, never recomputed from aggregated scores.
AggregateCell aggregate(const std::vector<const EvaluationRecord*>& records, Measure measure);

/// Unweighted mean of per-setting means (macro average).
double overall_mean(const std::vector<double>& setting_means);

struct RowRanks {
  std::vector<std::size_t> best;   // indices sharing the best value
  std::vector<std::size_t> worst;  // indices sharing the worst value
};

/// Lower-better for rmse/harmonic/timings, higher-better for r2.
RowRanks rank_row(const std::vector<double>& values, Measure measure);

/// Pearson correlation between missing ratio and R^2 over ok records.
double correlate_missing(const std::vector<const EvaluationRecord*>& records);

/// Records file schema: CSV, fixed documented column order.
extern const char* const kRecordsHeader;
void write_records(const std::filesystem::path& path, const std::vector<EvaluationRecord>& records);
void append_record(std::ostream& os, const EvaluationRecord& record);
std::vector<EvaluationRecord> read_records(const std::filesystem::path& path);

/// Stable identity of one job, used for resume and deterministic ordering.
std::string record_job_id(const EvaluationRecord& r);

}  // namespace tfb
