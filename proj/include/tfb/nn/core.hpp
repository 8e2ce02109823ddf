#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace tfb::nn {

/// Time-major activation: one B x C matrix per timestep.
using Seq = std::vector<Eigen::MatrixXd>;

/// One trainable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

/// Named tensors for checkpointing: parameters plus non-trainable buffers.
using StateMap = std::vector<std::pair<std::string, Eigen::MatrixXd*>>;

/// Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform_fan_in(Eigen::MatrixXd& w, Eigen::Index fan_in, std::mt19937_64& rng);

}  // namespace tfb::nn
