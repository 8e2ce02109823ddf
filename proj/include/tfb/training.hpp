#pragma once

#include "tfb/model_zoo.hpp"
#include "tfb/preprocess.hpp"

#include <stdexcept>
#include <vector>

namespace tfb {

struct TrainReport {
  std::vector<double> train_loss_per_epoch;
  std::vector<double> val_loss_per_epoch;
  double wall_clock_train_s = 0.0;
  std::size_t n_train_windows = 0;
  std::size_t n_val_windows = 0;
  std::uint64_t seed = 0;
};

/// Wall-clock durations normalized per 100 datapoints.
struct TimingRecord {
  double train_time_per_100 = 0.0;
  double pred_time_per_100 = 0.0;
  bool comparable = true;  // false when workers were not isolated during timing
};

struct EmptyTrainingSetError : std::runtime_error {
  EmptyTrainingSetError() : std::runtime_error("no training windows") {}
};

struct NonFiniteLossError : std::runtime_error {
  NonFiniteLossError(int epoch, std::size_t batch);
  int epoch;
  std::size_t batch;
};

/// Mini-batch Adam with MSE loss: spec.epochs epochs, seeded per-epoch
/// shuffle, validation loss once per epoch with no updates, final-epoch model
/// kept (no early stopping). The mean model trains in zero epochs.
TrainReport train(Forecaster& model, const std::vector<SupervisedWindow>& train_windows,
                  const std::vector<SupervisedWindow>& val_windows);

double mse_loss(Forecaster& model, const std::vector<SupervisedWindow>& windows);

struct ZeroCountError : std::invalid_argument {
  ZeroCountError() : std::invalid_argument("zero datapoint count") {}
};

TimingRecord measure_times(const TrainReport& report, std::size_t n_train_points,
                           double pred_elapsed_s, std::size_t n_pred_points);

/// Stacks window inputs/targets into B x W and B x H matrices.
Eigen::MatrixXd stack_inputs(const std::vector<SupervisedWindow>& windows,
                             std::size_t begin, std::size_t end);
Eigen::MatrixXd stack_targets(const std::vector<SupervisedWindow>& windows,
                              std::size_t begin, std::size_t end);

}  // namespace tfb
