#include "tfb/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tfb {

namespace fs = std::filesystem;

MalformedRowError::MalformedRowError(const std::string& f, std::size_t l, const std::string& what)
    : std::runtime_error(f + ":" + std::to_string(l) + ": " + what), file(f), line(l) {}

PathNotFoundError::PathNotFoundError(const std::string& path)
    : std::runtime_error("path not found: " + path) {}

UnknownMetricError::UnknownMetricError(const std::string& metric)
    : std::runtime_error("unknown metric column: " + metric) {}

fs::path DatasetLayout::series_dir(const fs::path& root, AggregationLevel level,
                                   Interval interval) const {
  return root / to_string(level) / to_string(interval);
}

fs::path DatasetLayout::series_path(const fs::path& root, AggregationLevel level,
                                    Interval interval, const std::string& series_id) const {
  return series_dir(root, level, interval) / (series_id + "." + extension);
}

const std::string& DatasetLayout::column_for(const std::string& metric) const {
  const auto it = column_mapping.find(metric);
  return it == column_mapping.end() ? metric : it->second;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_epoch_seconds(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

// Accepts "YYYY-MM-DDTHH:MM:SS" and "YYYY-MM-DD HH:MM:SS" (UTC).
bool parse_iso8601(const std::string& s, std::int64_t& out) {
  std::tm tm{};
  int y, mo, d, h = 0, mi = 0, sec = 0;
  char sep;
  std::istringstream ss(s);
  ss >> y >> sep >> mo >> sep >> d;
  if (!ss) return false;
  if (ss.peek() == 'T' || ss.peek() == ' ') {
    ss.get();
    ss >> h >> sep >> mi >> sep >> sec;
    if (!ss) return false;
  }
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = sec;
  const time_t t = timegm(&tm);
  if (t == static_cast<time_t>(-1)) return false;
  out = static_cast<std::int64_t>(t);
  return true;
}

std::int64_t parse_timestamp(const std::string& s, const std::string& file, std::size_t line) {
  std::int64_t ts;
  if (parse_epoch_seconds(s, ts)) return ts;
  if (parse_iso8601(s, ts)) return ts;
  throw MalformedRowError(file, line, "unparsable timestamp '" + s + "'");
}

std::string format_epoch(std::int64_t epoch) {
  const time_t t = static_cast<time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S");
  return ss.str();
}

std::string trim(const std::string& s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return {b, e};
}

}  // namespace

MetricSeries load_series_file(const fs::path& file, const SeriesKey& key,
                              const std::string& metric, const DatasetLayout& layout) {
  std::ifstream in(file);
  if (!in) throw PathNotFoundError(file.string());
  const std::string fname = file.string();

  std::string line;
  if (!std::getline(in, line)) throw MalformedRowError(fname, 1, "missing header");
  const auto header = split_csv_line(trim(line));

  const std::string& ts_col = layout.timestamp_column;
  const std::string& metric_col = layout.column_for(metric);
  std::ptrdiff_t ts_idx = -1, metric_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string col = trim(header[i]);
    if (col == ts_col) ts_idx = static_cast<std::ptrdiff_t>(i);
    if (col == metric_col) metric_idx = static_cast<std::ptrdiff_t>(i);
  }
  if (ts_idx < 0) throw MalformedRowError(fname, 1, "no timestamp column '" + ts_col + "'");
  if (metric_idx < 0) throw UnknownMetricError(metric_col);

  std::vector<std::pair<std::int64_t, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv_line(t);
    if (fields.size() <= static_cast<std::size_t>(std::max(ts_idx, metric_idx)))
      throw MalformedRowError(fname, lineno, "too few fields");
    const std::int64_t ts = parse_timestamp(trim(fields[static_cast<std::size_t>(ts_idx)]),
                                            fname, lineno);
    const std::string raw = trim(fields[static_cast<std::size_t>(metric_idx)]);
    double v;
    if (raw.empty()) {
      v = MetricSeries::missing_value();
    } else {
      try {
        std::size_t pos = 0;
        v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
      } catch (const std::exception&) {
        throw MalformedRowError(fname, lineno, "unparsable value '" + raw + "'");
      }
    }
    rows.emplace_back(ts, v);
  }
  if (rows.empty()) throw MalformedRowError(fname, lineno, "no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::int64_t step = interval_seconds(key.interval);
  const std::int64_t start = rows.front().first;
  const std::int64_t last = rows.back().first;
  if ((last - start) % step != 0)
    throw MalformedRowError(fname, 0, "timestamps off the uniform grid");
  const Eigen::Index n = static_cast<Eigen::Index>((last - start) / step) + 1;

  // Materialize the full grid; absent timestamps become missing entries.
  Eigen::VectorXd values = Eigen::VectorXd::Constant(n, MetricSeries::missing_value());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& [ts, v] : rows) {
    if ((ts - start) % step != 0)
      throw MalformedRowError(fname, 0, "timestamp " + std::to_string(ts) + " off the grid");
    const auto i = static_cast<std::size_t>((ts - start) / step);
    if (seen[i])
      throw MalformedRowError(fname, 0, "duplicated timestamp " + std::to_string(ts));
    seen[i] = true;
    values[static_cast<Eigen::Index>(i)] = v;
  }
  return MetricSeries(key, metric, start, std::move(values));
}

std::vector<std::string> list_series_ids(const fs::path& root, AggregationLevel level,
                                         Interval interval, const DatasetLayout& layout) {
  const fs::path dir = layout.series_dir(root, level, interval);
  if (!fs::exists(dir)) throw PathNotFoundError(dir.string());
  std::vector<std::string> ids;
  const std::string suffix = "." + layout.extension;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix))
      ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<MetricSeries> load_series(const fs::path& root, AggregationLevel level,
                                      Interval interval, const std::string& metric,
                                      const std::optional<std::set<std::string>>& id_filter,
                                      const DatasetLayout& layout) {
  std::vector<MetricSeries> out;
  for (const auto& id : list_series_ids(root, level, interval, layout)) {
    if (id_filter && !id_filter->contains(id)) continue;
    const SeriesKey key{level, id, interval};
    out.push_back(load_series_file(layout.series_path(root, level, interval, id), key,
                                   metric, layout));
  }
  return out;
}

void write_series(const fs::path& root, const std::vector<MetricSeries>& columns,
                  const DatasetLayout& layout) {
  if (columns.empty()) throw std::invalid_argument("no series to write");
  const auto& first = columns.front();
  for (const auto& s : columns) {
    if (!(s.key() == first.key()) || s.start_epoch() != first.start_epoch() ||
        s.size() != first.size())
      throw std::invalid_argument("series columns disagree on key or grid");
  }
  const fs::path path = layout.series_path(root, first.key().level, first.key().interval,
                                           first.key().series_id);
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << layout.timestamp_column;
  for (const auto& s : columns) out << ',' << layout.column_for(s.metric_name());
  out << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < first.size(); ++i) {
    out << format_epoch(first.timestamp_at(i));
    for (const auto& s : columns) {
      out << ',';
      const double v = s.values()[i];
      if (!MetricSeries::is_missing(v)) out << v;
    }
    out << '\n';
  }
}

}  // namespace tfb
