#pragma once

#include "tfb/nn/core.hpp"

namespace tfb::nn {

/// Adam with the standard (0.9, 0.999, 1e-8) constants.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

}  // namespace tfb::nn
