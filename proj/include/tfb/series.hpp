#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfb {

enum class AggregationLevel { institutions, institution_subnets, ip_addresses };
enum class Interval { ten_minutes, one_hour, one_day };

const char* to_string(AggregationLevel level);
const char* to_string(Interval interval);
AggregationLevel aggregation_level_from_string(const std::string& s);
Interval interval_from_string(const std::string& s);

/// Grid spacing of an interval in seconds.
std::int64_t interval_seconds(Interval interval);

struct SeriesKey {
  AggregationLevel level = AggregationLevel::institutions;
  std::string series_id;
  Interval interval = Interval::one_hour;

  bool operator==(const SeriesKey&) const = default;
};

/// One univariate time series on a uniform timestamp grid.
/// Missing observations are stored as NaN until fill_missing_zero runs.
class MetricSeries {
 public:
  MetricSeries(SeriesKey key, std::string metric_name, std::int64_t start_epoch,
               Eigen::VectorXd values)
      : key_(std::move(key)),
        metric_name_(std::move(metric_name)),
        start_epoch_(start_epoch),
        values_(std::move(values)) {
    if (key_.series_id.empty()) throw std::invalid_argument("empty series_id");
    if (values_.size() == 0) throw std::invalid_argument("empty series");
  }

  const SeriesKey& key() const { return key_; }
  const std::string& metric_name() const { return metric_name_; }
  std::int64_t start_epoch() const { return start_epoch_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  static bool is_missing(double v) { return std::isnan(v); }
  static double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

  std::int64_t timestamp_at(Eigen::Index i) const {
    return start_epoch_ + static_cast<std::int64_t>(i) * interval_seconds(key_.interval);
  }

  bool has_missing() const { return values_.hasNaN(); }

 private:
  SeriesKey key_;
  std::string metric_name_;
  std::int64_t start_epoch_;
  Eigen::VectorXd values_;
};

/// Fraction of missing entries, computed before any fill.
double missing_ratio(const MetricSeries& series);

}  // namespace tfb
