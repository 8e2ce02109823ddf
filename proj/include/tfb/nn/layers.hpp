#pragma once

#include "tfb/nn/core.hpp"

namespace tfb::nn {

/// Fully connected layer on flat B x I activations.
class Dense {
 public:
  Dense(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);

  void collect(std::vector<Param*>& out);
  void register_state(const std::string& prefix, StateMap& out);

 private:
  Param w_;  // I x O
  Param b_;  // 1 x O
  Eigen::MatrixXd x_;
};

/// 1-D convolution over time with "same" padding, stride 1.
class Conv1d {
 public:
  Conv1d(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index kernel,
         std::mt19937_64& rng);

  Seq forward(const Seq& x);
  Seq backward(const Seq& gy);

  void collect(std::vector<Param*>& out);
  void register_state(const std::string& prefix, StateMap& out);

  Eigen::Index out_channels() const { return out_channels_; }

 private:
  Eigen::Index in_channels_, out_channels_, kernel_, pad_left_;
  std::vector<Param> w_;  // kernel taps, each Cin x Cout
  Param b_;               // 1 x Cout
  Seq x_;
};

/// Per-channel batch normalization over the batch and time dimensions.
class BatchNorm1d {
 public:
  explicit BatchNorm1d(Eigen::Index channels, double momentum = 0.1, double eps = 1e-5);

  Seq forward(const Seq& x, bool training);
  Seq backward(const Seq& gy);

  void collect(std::vector<Param*>& out);
  void register_state(const std::string& prefix, StateMap& out);

 private:
  Eigen::Index channels_;
  double momentum_, eps_;
  Param gamma_, beta_;                       // 1 x C
  Eigen::MatrixXd running_mean_, running_var_;  // 1 x C buffers
  Seq xhat_;
  Eigen::RowVectorXd inv_std_;
  Eigen::Index count_ = 0;
};

/// Elementwise rectifier.
class ReLU {
 public:
  Seq forward(const Seq& x);
  Seq backward(const Seq& gy);

 private:
  Seq y_;
};

/// Max pooling over time, stride 1, "same" padding.
class MaxPool1d {
 public:
  explicit MaxPool1d(Eigen::Index kernel) : kernel_(kernel) {}

  Seq forward(const Seq& x);
  Seq backward(const Seq& gy);

 private:
  Eigen::Index kernel_;
  std::vector<Eigen::MatrixXi> argmax_;  // per timestep, B x C source index
  Eigen::Index in_len_ = 0, batch_ = 0, channels_ = 0;
};

/// Mean over the time dimension: Seq (T of B x C) -> B x C.
class GlobalAvgPool {
 public:
  Eigen::MatrixXd forward(const Seq& x);
  Seq backward(const Eigen::MatrixXd& gy);

 private:
  Eigen::Index len_ = 0;
};

/// Channel concatenation of parallel branches.
Seq concat_channels(const std::vector<Seq>& branches);
std::vector<Seq> split_channels(const Seq& gy, const std::vector<Eigen::Index>& widths);

}  // namespace tfb::nn
