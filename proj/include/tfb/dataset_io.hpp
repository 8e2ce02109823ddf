#pragma once

#include "tfb/series.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfb {

/// Canonical on-disk layout: <root>/<level>/<interval>/<series_id>.csv with a
/// header row, a timestamp column (ISO-8601 or epoch seconds) and one column
/// per metric. Missing values are empty fields.
struct DatasetLayout {
  std::string extension = "csv";
  std::string timestamp_column = "id_time";
  /// Canonical metric name -> file column name, for adapting foreign exports.
  std::map<std::string, std::string> column_mapping;

  std::filesystem::path series_dir(const std::filesystem::path& root,
                                   AggregationLevel level, Interval interval) const;
  std::filesystem::path series_path(const std::filesystem::path& root,
                                    AggregationLevel level, Interval interval,
                                    const std::string& series_id) const;
  const std::string& column_for(const std::string& metric) const;
};

struct MalformedRowError : std::runtime_error {
  MalformedRowError(const std::string& file, std::size_t line, const std::string& what);
  std::string file;
  std::size_t line;
};

struct PathNotFoundError : std::runtime_error {
  explicit PathNotFoundError(const std::string& path);
};

struct UnknownMetricError : std::runtime_error {
  explicit UnknownMetricError(const std::string& metric);
};

/// Loads every series of one (level, interval, metric) from the canonical
/// layout. Timestamps absent from the uniform grid become missing entries.
std::vector<MetricSeries> load_series(
    const std::filesystem::path& root, AggregationLevel level, Interval interval,
    const std::string& metric,
    const std::optional<std::set<std::string>>& id_filter = std::nullopt,
    const DatasetLayout& layout = {});

/// Loads one series file.
MetricSeries load_series_file(const std::filesystem::path& file, const SeriesKey& key,
                              const std::string& metric, const DatasetLayout& layout = {});

/// Writes a set of single-metric series sharing one key as one canonical file.
/// All series must share key and timestamp grid.
void write_series(const std::filesystem::path& root,
                  const std::vector<MetricSeries>& columns,
                  const DatasetLayout& layout = {});

/// Series ids present under <root>/<level>/<interval>/, sorted.
std::vector<std::string> list_series_ids(const std::filesystem::path& root,
                                         AggregationLevel level, Interval interval,
                                         const DatasetLayout& layout = {});

}  // namespace tfb
