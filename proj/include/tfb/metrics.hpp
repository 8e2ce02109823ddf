#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfb {

struct LengthMismatchError : std::invalid_argument {
  LengthMismatchError() : std::invalid_argument("sequence lengths differ") {}
};
struct EmptyInputError : std::invalid_argument {
  EmptyInputError() : std::invalid_argument("empty input sequence") {}
};
struct ZeroVarianceError : std::invalid_argument {
  ZeroVarianceError() : std::invalid_argument("zero-variance input") {}
};

namespace detail {
template <typename A, typename B>
void check_pair(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw LengthMismatchError();
  if (a.size() == 0) throw EmptyInputError();
}
}  // namespace detail

/// Root mean squared error.
template <typename A, typename B>
typename A::Scalar rmse(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<B>& predicted) {
  detail::check_pair(actual, predicted);
  return std::sqrt((actual - predicted).array().square().mean());
}

/// Coefficient of determination, 1 - SSres / (SStot + epsilon), SStot about the
/// mean of `actual`. Exactly 1 when SSres == 0.
template <typename A, typename B>
typename A::Scalar r2_score(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<B>& predicted,
                            typename A::Scalar epsilon = typename A::Scalar(1e-12)) {
  detail::check_pair(actual, predicted);
  using Scalar = typename A::Scalar;
  const Scalar ss_res = (actual - predicted).array().square().sum();
  if (ss_res == Scalar(0)) return Scalar(1);
  const Scalar mean = actual.mean();
  const Scalar ss_tot = (actual.array() - mean).square().sum();
  return Scalar(1) - ss_res / (ss_tot + epsilon);
}

struct ScorePair {
  double rmse = 0.0;
  double r2 = 0.0;
};

/// Published clip constants of the Harmonic-Score.
struct ClipThresholds {
  double rmse_max = 11.0;
  double r2_min = -10.0;
};

/// Harmonic mean of clipped RMSE and clipped |R^2 - 1|. Lower is better;
/// range [0, 11]; the degenerate 0/0 case scores 0.
inline double harmonic_score(const ScorePair& pair, const ClipThresholds& clips = {}) {
  const double r = std::min(pair.rmse, clips.rmse_max);
  const double d = std::abs(std::max(pair.r2, clips.r2_min) - 1.0);
  const double denom = r + d;
  return denom == 0.0 ? 0.0 : 2.0 * r * d / denom;
}

/// Sample Pearson correlation coefficient.
template <typename A, typename B>
typename A::Scalar pearson(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  if (x.size() != y.size()) throw LengthMismatchError();
  if (x.size() < 2) throw EmptyInputError();
  using Scalar = typename A::Scalar;
  const auto xc = (x.array() - x.mean()).eval();
  const auto yc = (y.array() - y.mean()).eval();
  const Scalar sx = std::sqrt(xc.square().sum());
  const Scalar sy = std::sqrt(yc.square().sum());
  if (sx == Scalar(0) || sy == Scalar(0)) throw ZeroVarianceError();
  return (xc * yc).sum() / (sx * sy);
}

}  // namespace tfb
