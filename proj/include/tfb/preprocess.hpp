#pragma once

#include "tfb/series.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace tfb {

/// Contiguous 35/5/60 partition boundaries with floor rounding.
struct SplitIndices {
  Eigen::Index train_end = 0;
  Eigen::Index val_end = 0;
  Eigen::Index total = 0;
};

struct TooShortSeriesError : std::runtime_error {
  explicit TooShortSeriesError(Eigen::Index total);
};

SplitIndices split_series(Eigen::Index total);

/// MinMax parameters fitted on the train slice only.
struct ScalerParams {
  double min = 0.0;
  double max = 0.0;
};

ScalerParams fit_scaler(const Eigen::Ref<const Eigen::VectorXd>& train_values);

/// (x - min) / (max - min); 0 everywhere for a degenerate (max == min) fit.
/// No clipping: values outside the train range map outside [0,1].
inline double transform(const ScalerParams& p, double x) {
  const double span = p.max - p.min;
  return span > 0.0 ? (x - p.min) / span : 0.0;
}

inline double inverse_transform(const ScalerParams& p, double z) {
  const double span = p.max - p.min;
  return span > 0.0 ? z * span + p.min : p.min;
}

Eigen::VectorXd transform(const ScalerParams& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Replaces missing (NaN) entries with zero; everything else is unchanged.
MetricSeries fill_missing_zero(const MetricSeries& series);

struct WindowConfig {
  Eigen::Index train_window = 0;  // W
  Eigen::Index pred_window = 0;   // H

  bool operator==(const WindowConfig&) const = default;
};

/// The five benchmark (W, H) pairs.
const std::vector<WindowConfig>& benchmark_window_configs();

struct SupervisedWindow {
  Eigen::VectorXd input;   // W scaled values
  Eigen::VectorXd target;  // H scaled values, immediately following the input
  Eigen::Index origin = 0;
};

/// Sliding windows at offsets 0, H, 2H, ... within one partition;
/// count = max(0, floor((N - W) / H)).
std::vector<SupervisedWindow> make_windows(const Eigen::Ref<const Eigen::VectorXd>& values,
                                           const WindowConfig& cfg);

Eigen::Index window_count(Eigen::Index n, const WindowConfig& cfg);

}  // namespace tfb
