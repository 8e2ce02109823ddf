#include "tfb/series.hpp"

namespace tfb {

const char* to_string(AggregationLevel level) {
  switch (level) {
    case AggregationLevel::institutions: return "institutions";
    case AggregationLevel::institution_subnets: return "institution_subnets";
    case AggregationLevel::ip_addresses: return "ip_addresses";
  }
  throw std::invalid_argument("bad AggregationLevel");
}

const char* to_string(Interval interval) {
  switch (interval) {
    case Interval::ten_minutes: return "10min";
    case Interval::one_hour: return "1h";
    case Interval::one_day: return "1day";
  }
  throw std::invalid_argument("bad Interval");
}

AggregationLevel aggregation_level_from_string(const std::string& s) {
  if (s == "institutions") return AggregationLevel::institutions;
  if (s == "institution_subnets") return AggregationLevel::institution_subnets;
  if (s == "ip_addresses") return AggregationLevel::ip_addresses;
  throw std::invalid_argument("unknown aggregation level: " + s);
}

Interval interval_from_string(const std::string& s) {
  if (s == "10min") return Interval::ten_minutes;
  if (s == "1h") return Interval::one_hour;
  if (s == "1day") return Interval::one_day;
  throw std::invalid_argument("unknown interval: " + s);
}

std::int64_t interval_seconds(Interval interval) {
  switch (interval) {
    case Interval::ten_minutes: return 600;
    case Interval::one_hour: return 3600;
    case Interval::one_day: return 86400;
  }
  throw std::invalid_argument("bad Interval");
}

double missing_ratio(const MetricSeries& series) {
  const auto& v = series.values();
  Eigen::Index missing = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (MetricSeries::is_missing(v[i])) ++missing;
  }
  return static_cast<double>(missing) / static_cast<double>(v.size());
}

}  // namespace tfb
