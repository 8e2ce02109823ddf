#include "tfb/nn/core.hpp"

#include <cmath>

namespace tfb::nn {

void init_uniform_fan_in(Eigen::MatrixXd& w, Eigen::Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
}

}  // namespace tfb::nn
