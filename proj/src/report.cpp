#include "tfb/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace tfb {

namespace {

std::string config_label(const WindowConfig& cfg) {
  return std::to_string(cfg.train_window) + "/" + std::to_string(cfg.pred_window);
}

}  // namespace

AggregateTable build_table(const std::vector<EvaluationRecord>& records, Measure measure) {
  AggregateTable table;
  table.measure = measure;

  std::set<ModelKind> model_set;
  std::set<AggregationLevel> level_set;
  std::vector<WindowConfig> configs;
  for (const auto& r : records) {
    model_set.insert(r.model_kind);
    level_set.insert(r.key.level);
    if (std::find(configs.begin(), configs.end(), r.config) == configs.end())
      configs.push_back(r.config);
  }
  std::sort(configs.begin(), configs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.train_window, a.pred_window) < std::tie(b.train_window, b.pred_window);
  });
  for (ModelKind k : all_model_kinds())
    if (model_set.contains(k)) table.models.push_back(k);

  for (const AggregationLevel level : level_set) {
    for (const auto& cfg : configs) {
      AggregateTable::Row row{level, cfg, {}};
      for (const ModelKind model : table.models) {
        std::vector<const EvaluationRecord*> group;
        for (const auto& r : records) {
          if (r.key.level == level && r.config == cfg && r.model_kind == model)
            group.push_back(&r);
        }
        try {
          row.cells.push_back(aggregate(group, measure));
        } catch (const EmptyGroupError&) {
          row.cells.push_back({0.0, 0.0, 0});
        }
      }
      table.rows.push_back(std::move(row));
    }
  }

  for (const AggregationLevel level : level_set) {
    std::vector<double> means;
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      std::vector<double> setting_means;
      for (const auto& row : table.rows) {
        if (row.level == level && row.cells[m].n > 0) setting_means.push_back(row.cells[m].mean);
      }
      means.push_back(setting_means.empty() ? 0.0 : overall_mean(setting_means));
    }
    table.part_means[level] = std::move(means);
  }

  for (std::size_t m = 0; m < table.models.size(); ++m) {
    std::vector<double> setting_means;
    for (const auto& row : table.rows) {
      if (row.cells[m].n > 0) setting_means.push_back(row.cells[m].mean);
    }
    table.overall.push_back(setting_means.empty() ? 0.0 : overall_mean(setting_means));
  }
  return table;
}

std::string format_cell(const AggregateCell& cell) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << cell.mean << " (" << std::setprecision(2)
     << cell.std << ")";
  return ss.str();
}

std::string render_table(const AggregateTable& table) {
  std::ostringstream out;
  out << "measure: " << to_string(table.measure) << "\n";

  constexpr int col = 18;
  out << std::left << std::setw(22) << "part" << std::setw(10) << "window";
  for (const ModelKind m : table.models) out << std::setw(col) << to_string(m);
  out << "\n";

  for (const auto& row : table.rows) {
    out << std::left << std::setw(22) << to_string(row.level) << std::setw(10)
        << config_label(row.config);
    std::vector<double> values;
    for (const auto& cell : row.cells) values.push_back(cell.n > 0 ? cell.mean : 0.0);
    RowRanks ranks{{}, {}};
    if (values.size() >= 2) ranks = rank_row(values, table.measure);
    for (std::size_t m = 0; m < row.cells.size(); ++m) {
      std::string cell = row.cells[m].n > 0 ? format_cell(row.cells[m]) : "-";
      const bool best = std::find(ranks.best.begin(), ranks.best.end(), m) != ranks.best.end();
      const bool worst = std::find(ranks.worst.begin(), ranks.worst.end(), m) != ranks.worst.end();
      if (row.cells[m].n > 0 && best) cell += " *";
      else if (row.cells[m].n > 0 && worst) cell += " !";
      out << std::setw(col) << cell;
    }
    out << "\n";
  }

  for (const auto& [level, means] : table.part_means) {
    out << std::left << std::setw(22) << to_string(level) << std::setw(10) << "mean";
    for (const double m : means) {
      std::ostringstream c;
      c << std::fixed << std::setprecision(4) << m;
      out << std::setw(col) << c.str();
    }
    out << "\n";
  }
  out << std::left << std::setw(22) << "overall" << std::setw(10) << "mean";
  for (const double m : table.overall) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << m;
    out << std::setw(col) << c.str();
  }
  out << "\n";
  out << "(* best in row, ! worst in row)\n";
  return out.str();
}

std::vector<std::pair<std::string, double>> metric_harmonic_summary(
    const std::vector<EvaluationRecord>& records) {
  std::set<std::string> metric_names;
  for (const auto& r : records) metric_names.insert(r.metric_name);

  std::vector<std::pair<std::string, double>> out;
  for (const auto& metric : metric_names) {
    std::vector<EvaluationRecord> subset;
    for (const auto& r : records)
      if (r.metric_name == metric) subset.push_back(r);
    const AggregateTable table = build_table(subset, Measure::harmonic);
    // Mean over models of each model's overall-mean harmonic.
    if (table.overall.empty()) continue;
    out.emplace_back(metric, overall_mean(table.overall));
  }
  return out;
}

void write_metric_chart(const std::filesystem::path& svg_path,
                        const std::filesystem::path& csv_path,
                        const std::vector<std::pair<std::string, double>>& bars) {
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    csv << "metric,mean_harmonic\n" << std::setprecision(17);
    for (const auto& [name, value] : bars) csv << name << ',' << value << '\n';
  }

  const int bar_w = 36, gap = 14, margin_left = 60, margin_bottom = 120, margin_top = 20;
  const int plot_h = 260;
  const int width = margin_left + static_cast<int>(bars.size()) * (bar_w + gap) + 20;
  const int height = margin_top + plot_h + margin_bottom;
  double max_v = 0.0;
  for (const auto& [name, v] : bars) max_v = std::max(max_v, v);
  if (max_v <= 0.0) max_v = 1.0;

  std::ofstream svg(svg_path);
  if (!svg) throw std::runtime_error("cannot write " + svg_path.string());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  svg << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top + plot_h << "\" x2=\""
      << width - 10 << "\" y2=\"" << margin_top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top << "\" x2=\"" << margin_left
      << "\" y2=\"" << margin_top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"10\" y=\"" << margin_top + 10 << "\" font-size=\"11\">" << std::fixed
      << std::setprecision(3) << max_v << "</text>\n";
  int x = margin_left + gap / 2;
  for (const auto& [name, v] : bars) {
    const int h = static_cast<int>(plot_h * v / max_v);
    svg << "<rect x=\"" << x << "\" y=\"" << margin_top + plot_h - h << "\" width=\"" << bar_w
        << "\" height=\"" << h << "\" fill=\"steelblue\"/>\n";
    svg << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << margin_top + plot_h + 12
        << "\" font-size=\"10\" transform=\"rotate(60 " << x + bar_w / 2 << ","
        << margin_top + plot_h + 12 << ")\">" << name << "</text>\n";
    svg << "<text x=\"" << x << "\" y=\"" << margin_top + plot_h - h - 4
        << "\" font-size=\"9\">" << std::setprecision(3) << v << "</text>\n";
    x += bar_w + gap;
  }
  svg << "</svg>\n";
}

}  // namespace tfb
