#pragma once

#include "tfb/series.hpp"

#include <cstdint>

namespace tfb {

/// Parameters of a synthetic seasonal series used for desk-scale runs.
struct FixtureSpec {
  Eigen::Index length = 0;
  Eigen::Index seasonal_period = 24;
  double amplitude = 1.0;
  double noise_std = 0.0;
  double missing_ratio = 0.0;  // in [0,1)
  double trend_slope = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic seasonal fixture: amplitude*sin(2*pi*t/period) + trend_slope*t
/// + gaussian noise, shifted so the noise-free signal is nonnegative, with
/// missing entries drawn Bernoulli(missing_ratio) from the seeded RNG.
MetricSeries generate_fixture(const FixtureSpec& spec, const SeriesKey& key,
                              const std::string& metric_name,
                              std::int64_t start_epoch = 1696204800);

}  // namespace tfb
