#include "tfb/preprocess.hpp"

#include "tfb/metrics.hpp"

namespace tfb {

TooShortSeriesError::TooShortSeriesError(Eigen::Index total)
    : std::runtime_error("series too short to split: " + std::to_string(total)) {}

SplitIndices split_series(Eigen::Index total) {
  if (total < 20) throw TooShortSeriesError(total);
  SplitIndices idx;
  idx.total = total;
  // Integer arithmetic: floor(0.35 * total) computed in doubles can land one
  // below the exact value for totals like 6720.
  idx.train_end = total * 35 / 100;
  idx.val_end = total * 40 / 100;
  return idx;
}

ScalerParams fit_scaler(const Eigen::Ref<const Eigen::VectorXd>& train_values) {
  if (train_values.size() == 0) throw EmptyInputError();
  return {train_values.minCoeff(), train_values.maxCoeff()};
}

Eigen::VectorXd transform(const ScalerParams& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double span = p.max - p.min;
  if (span <= 0.0) return Eigen::VectorXd::Zero(x.size());
  return (x.array() - p.min) / span;
}

MetricSeries fill_missing_zero(const MetricSeries& series) {
  Eigen::VectorXd values = series.values();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (MetricSeries::is_missing(values[i])) values[i] = 0.0;
  }
  return MetricSeries(series.key(), series.metric_name(), series.start_epoch(),
                      std::move(values));
}

const std::vector<WindowConfig>& benchmark_window_configs() {
  static const std::vector<WindowConfig> configs = {
      {24, 1}, {168, 1}, {168, 24}, {744, 1}, {744, 168}};
  return configs;
}

Eigen::Index window_count(Eigen::Index n, const WindowConfig& cfg) {
  if (n < cfg.train_window + cfg.pred_window) return 0;
  return (n - cfg.train_window) / cfg.pred_window;
}

std::vector<SupervisedWindow> make_windows(const Eigen::Ref<const Eigen::VectorXd>& values,
                                           const WindowConfig& cfg) {
  if (cfg.train_window <= 0 || cfg.pred_window <= 0)
    throw std::invalid_argument("window sizes must be positive");
  const Eigen::Index count = window_count(values.size(), cfg);
  std::vector<SupervisedWindow> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::Index origin = k * cfg.pred_window;
    out.push_back({values.segment(origin, cfg.train_window),
                   values.segment(origin + cfg.train_window, cfg.pred_window), origin});
  }
  return out;
}

}  // namespace tfb
