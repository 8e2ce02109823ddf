#include "tfb/fixture.hpp"

#include <numbers>
#include <random>

namespace tfb {

void FixtureSpec::validate() const {
  if (length <= 0) throw std::invalid_argument("fixture length must be positive");
  if (seasonal_period <= 0) throw std::invalid_argument("seasonal_period must be positive");
  if (noise_std < 0) throw std::invalid_argument("noise_std must be nonnegative");
  if (missing_ratio < 0 || missing_ratio >= 1)
    throw std::invalid_argument("missing_ratio must be in [0,1)");
}

MetricSeries generate_fixture(const FixtureSpec& spec, const SeriesKey& key,
                              const std::string& metric_name, std::int64_t start_epoch) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Shift keeps the noise-free signal nonnegative; residual noise dips clamp at 0.
  const double shift = spec.amplitude +
                       std::max(0.0, -spec.trend_slope * static_cast<double>(spec.length - 1));

  Eigen::VectorXd values(spec.length);
  for (Eigen::Index t = 0; t < spec.length; ++t) {
    double v = spec.amplitude *
                   std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                            static_cast<double>(spec.seasonal_period)) +
               spec.trend_slope * static_cast<double>(t) + shift;
    if (spec.noise_std > 0) v += spec.noise_std * noise(rng);
    values[t] = std::max(0.0, v);
  }
  for (Eigen::Index t = 0; t < spec.length; ++t) {
    if (unit(rng) < spec.missing_ratio) values[t] = MetricSeries::missing_value();
  }
  return MetricSeries(key, metric_name, start_epoch, std::move(values));
}

}  // namespace tfb
