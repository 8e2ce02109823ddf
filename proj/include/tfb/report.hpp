#pragma once

#include "tfb/evaluation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tfb {

/// One aggregate table: rows = window configs plus a per-part mean row,
/// one block per dataset part, columns = models, trailing overall-mean row.
struct AggregateTable {
  Measure measure = Measure::rmse;
  std::vector<ModelKind> models;
  struct Row {
    AggregationLevel level;
    WindowConfig config;
    std::vector<AggregateCell> cells;  // one per model; n == 0 when empty
  };
  std::vector<Row> rows;
  std::map<AggregationLevel, std::vector<double>> part_means;  // per model
  std::vector<double> overall;                                 // per model
};

AggregateTable build_table(const std::vector<EvaluationRecord>& records, Measure measure);

/// "0.104 (0.53)" cell format: 3-decimal mean, 2-decimal std.
std::string format_cell(const AggregateCell& cell);

/// Plain-text rendering with best/worst markers per row (from rank_row).
std::string render_table(const AggregateTable& table);

/// Per-metric mean over models of the overall-mean harmonic score.
std::vector<std::pair<std::string, double>> metric_harmonic_summary(
    const std::vector<EvaluationRecord>& records);

/// Static SVG bar chart plus the underlying numbers as CSV.
void write_metric_chart(const std::filesystem::path& svg_path,
                        const std::filesystem::path& csv_path,
                        const std::vector<std::pair<std::string, double>>& bars);

}  // namespace tfb
