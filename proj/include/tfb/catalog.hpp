#pragma once

#include "tfb/series.hpp"

#include <string>
#include <vector>

namespace tfb {

enum class MetricVariant { base, sum, avg, std_dev };
enum class ValueDomain { nonnegative_count, ratio_unit_interval, nonnegative_real };

struct MetricCatalogEntry {
  std::string name;
  MetricVariant variant = MetricVariant::base;
  ValueDomain domain = ValueDomain::nonnegative_real;

  bool operator==(const MetricCatalogEntry&) const = default;
};

/// Full metric catalog for an interval, in a fixed deterministic order.
/// At 1h and 1day the three unique-count metrics expand into sum/avg/std
/// variants, so the catalog holds 18 entries; at 10min it holds 12.
std::vector<MetricCatalogEntry> catalog_metrics(Interval interval);

/// Looks up a catalog entry by name; throws std::out_of_range for unknown names.
MetricCatalogEntry catalog_entry(Interval interval, const std::string& name);

bool is_known_metric(Interval interval, const std::string& name);

}  // namespace tfb
