#include "tfb/catalog.hpp"

#include <algorithm>

namespace tfb {

namespace {

struct BaseMetric {
  const char* name;
  ValueDomain domain;
  bool unique_count;  // expands to sum/avg/std at 1h and 1day
};

// Base metric rows, in catalog order.
constexpr BaseMetric kBaseMetrics[] = {
    {"n_flows", ValueDomain::nonnegative_count, false},
    {"n_packets", ValueDomain::nonnegative_count, false},
    {"n_bytes", ValueDomain::nonnegative_count, false},
    {"n_dest_ip", ValueDomain::nonnegative_count, true},
    {"n_dest_ports", ValueDomain::nonnegative_count, true},
    {"n_dest_asn", ValueDomain::nonnegative_count, true},
    {"tcp_udp_ratio_packets", ValueDomain::ratio_unit_interval, false},
    {"tcp_udp_ratio_bytes", ValueDomain::ratio_unit_interval, false},
    {"dir_ratio_packets", ValueDomain::ratio_unit_interval, false},
    {"dir_ratio_bytes", ValueDomain::ratio_unit_interval, false},
    {"avg_duration", ValueDomain::nonnegative_real, false},
    {"avg_ttl", ValueDomain::nonnegative_real, false},
};

}  // namespace

std::vector<MetricCatalogEntry> catalog_metrics(Interval interval) {
  const bool expand = interval != Interval::ten_minutes;
  std::vector<MetricCatalogEntry> out;
  for (const auto& base : kBaseMetrics) {
    if (base.unique_count && expand) {
      out.push_back({std::string(base.name) + "_sum", MetricVariant::sum, base.domain});
      out.push_back({std::string(base.name) + "_avg", MetricVariant::avg,
                     ValueDomain::nonnegative_real});
      out.push_back({std::string(base.name) + "_std", MetricVariant::std_dev,
                     ValueDomain::nonnegative_real});
    } else {
      out.push_back({base.name, MetricVariant::base, base.domain});
    }
  }
  return out;
}

MetricCatalogEntry catalog_entry(Interval interval, const std::string& name) {
  const auto entries = catalog_metrics(interval);
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const auto& e) { return e.name == name; });
  if (it == entries.end()) throw std::out_of_range("unknown metric: " + name);
  return *it;
}

bool is_known_metric(Interval interval, const std::string& name) {
  const auto entries = catalog_metrics(interval);
  return std::any_of(entries.begin(), entries.end(),
                     [&](const auto& e) { return e.name == name; });
}

}  // namespace tfb
