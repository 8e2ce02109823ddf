#include "tfb/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tfb::nn {

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto* p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("optimizer bound to other parameters");

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * p.grad;
    v_[k] = (beta2_ * v_[k].array() + (1.0 - beta2_) * p.grad.array().square()).matrix();
    p.value.array() -=
        lr_ * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + eps_);
  }
}

}  // namespace tfb::nn
