#include "tfb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tfb {

const char* to_string(Measure m) {
  switch (m) {
    case Measure::rmse: return "rmse";
    case Measure::r2: return "r2";
    case Measure::harmonic: return "harmonic";
    case Measure::train_time: return "train_time";
    case Measure::pred_time: return "pred_time";
  }
  throw std::invalid_argument("bad Measure");
}

EvaluationRecord evaluate_series(const MetricSeries& series, const WindowConfig& cfg,
                                 Forecaster& model,
                                 const std::vector<SupervisedWindow>& test_windows,
                                 double epsilon, const ClipThresholds& clips) {
  if (test_windows.empty()) throw NoTestWindowsError();

  EvaluationRecord rec;
  rec.key = series.key();
  rec.metric_name = series.metric_name();
  rec.config = cfg;
  rec.model_kind = model.spec().kind;
  rec.seed = model.spec().seed;
  rec.missing_ratio = tfb::missing_ratio(series);
  rec.n_test_windows = static_cast<Eigen::Index>(test_windows.size());

  const Eigen::Index h = cfg.pred_window;
  const Eigen::Index total = rec.n_test_windows * h;
  Eigen::VectorXd actual(total), predicted(total);
  const std::size_t chunk = 256;
  for (std::size_t begin = 0; begin < test_windows.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, test_windows.size());
    const Eigen::MatrixXd pred = model.predict_batch(stack_inputs(test_windows, begin, end));
    for (std::size_t i = begin; i < end; ++i) {
      const auto off = static_cast<Eigen::Index>(i) * h;
      actual.segment(off, h) = test_windows[i].target;
      predicted.segment(off, h) = pred.row(static_cast<Eigen::Index>(i - begin)).transpose();
    }
  }

  rec.rmse = rmse(actual, predicted);
  rec.r2 = r2_score(actual, predicted, epsilon);
  rec.harmonic = harmonic_score({rec.rmse, rec.r2}, clips);
  rec.status = JobStatus::ok;
  return rec;
}

namespace {

double measure_value(const EvaluationRecord& r, Measure m) {
  switch (m) {
    case Measure::rmse: return r.rmse;
    case Measure::r2: return r.r2;
    case Measure::harmonic: return r.harmonic;
    case Measure::train_time: return r.timing.train_time_per_100;
    case Measure::pred_time: return r.timing.pred_time_per_100;
  }
  throw std::invalid_argument("bad Measure");
}

}  // namespace

AggregateCell aggregate(const std::vector<const EvaluationRecord*>& records, Measure measure) {
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto* r : records) {
    if (r->status == JobStatus::ok) values.push_back(measure_value(*r, measure));
  }
  if (values.empty()) throw EmptyGroupError();

  AggregateCell cell;
  cell.n = values.size();
  double sum = 0.0;
  for (const double v : values) sum += v;
  cell.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (const double v : values) sq += (v - cell.mean) * (v - cell.mean);
    cell.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return cell;
}

double overall_mean(const std::vector<double>& setting_means) {
  if (setting_means.empty()) throw EmptyGroupError();
  double sum = 0.0;
  for (const double v : setting_means) sum += v;
  return sum / static_cast<double>(setting_means.size());
}

RowRanks rank_row(const std::vector<double>& values, Measure measure) {
  if (values.size() < 2) throw std::invalid_argument("rank_row needs at least two models");
  const bool lower_better = measure != Measure::r2;
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double best = lower_better ? *min_it : *max_it;
  const double worst = lower_better ? *max_it : *min_it;
  RowRanks ranks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) ranks.best.push_back(i);
    if (values[i] == worst) ranks.worst.push_back(i);
  }
  return ranks;
}

double correlate_missing(const std::vector<const EvaluationRecord*>& records) {
  std::vector<double> ratio, r2;
  for (const auto* r : records) {
    if (r->status != JobStatus::ok) continue;
    ratio.push_back(r->missing_ratio);
    r2.push_back(r->r2);
  }
  if (ratio.size() < 3) throw std::invalid_argument("need at least three ok records");
  const Eigen::Map<const Eigen::VectorXd> x(ratio.data(), static_cast<Eigen::Index>(ratio.size()));
  const Eigen::Map<const Eigen::VectorXd> y(r2.data(), static_cast<Eigen::Index>(r2.size()));
  return pearson(x, y);
}

// ---- records file ----

const char* const kRecordsHeader =
    "level,series_id,interval,metric,train_window,pred_window,model,seed,status,"
    "rmse,r2,harmonic,missing_ratio,n_test_windows,train_time_per_100,pred_time_per_100,"
    "timing_comparable,failure_reason";

std::string record_job_id(const EvaluationRecord& r) {
  std::ostringstream ss;
  ss << to_string(r.key.level) << '/' << to_string(r.key.interval) << '/' << r.key.series_id
     << '/' << r.metric_name << '/' << r.config.train_window << '-' << r.config.pred_window
     << '/' << to_string(r.model_kind) << '/' << r.seed;
  return ss.str();
}

void append_record(std::ostream& os, const EvaluationRecord& r) {
  os << std::setprecision(17);
  os << to_string(r.key.level) << ',' << r.key.series_id << ',' << to_string(r.key.interval)
     << ',' << r.metric_name << ',' << r.config.train_window << ',' << r.config.pred_window
     << ',' << to_string(r.model_kind) << ',' << r.seed << ','
     << (r.status == JobStatus::ok ? "ok" : "failed") << ',';
  if (r.status == JobStatus::ok) {
    os << r.rmse << ',' << r.r2 << ',' << r.harmonic;
  } else {
    os << ",,";
  }
  os << ',' << r.missing_ratio << ',' << r.n_test_windows << ',' << r.timing.train_time_per_100
     << ',' << r.timing.pred_time_per_100 << ',' << (r.timing.comparable ? 1 : 0) << ','
     << r.failure_reason << '\n';
}

void write_records(const std::filesystem::path& path,
                   const std::vector<EvaluationRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << kRecordsHeader << '\n';
  for (const auto& r : records) append_record(os, r);
}

std::vector<EvaluationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty records file " + path.string());

  std::vector<EvaluationRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) f.push_back(field);
    while (f.size() < 18) f.emplace_back();

    EvaluationRecord r;
    r.key.level = aggregation_level_from_string(f[0]);
    r.key.series_id = f[1];
    r.key.interval = interval_from_string(f[2]);
    r.metric_name = f[3];
    r.config.train_window = std::stol(f[4]);
    r.config.pred_window = std::stol(f[5]);
    r.model_kind = model_kind_from_string(f[6]);
    r.seed = std::stoull(f[7]);
    r.status = f[8] == "ok" ? JobStatus::ok : JobStatus::failed;
    if (r.status == JobStatus::ok) {
      r.rmse = std::stod(f[9]);
      r.r2 = std::stod(f[10]);
      r.harmonic = std::stod(f[11]);
    }
    r.missing_ratio = std::stod(f[12]);
    r.n_test_windows = std::stol(f[13]);
    r.timing.train_time_per_100 = std::stod(f[14]);
    r.timing.pred_time_per_100 = std::stod(f[15]);
    r.timing.comparable = f[16] == "1";
    r.failure_reason = f[17];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tfb
