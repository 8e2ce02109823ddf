#include "tfb/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace tfb {

NonFiniteLossError::NonFiniteLossError(int e, std::size_t b)
    : std::runtime_error("non-finite loss at epoch " + std::to_string(e) + ", batch " +
                         std::to_string(b)),
      epoch(e), batch(b) {}

Eigen::MatrixXd stack_inputs(const std::vector<SupervisedWindow>& windows, std::size_t begin,
                             std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), windows[begin].input.size());
  for (std::size_t i = begin; i < end; ++i)
    out.row(static_cast<Eigen::Index>(i - begin)) = windows[i].input.transpose();
  return out;
}

Eigen::MatrixXd stack_targets(const std::vector<SupervisedWindow>& windows, std::size_t begin,
                              std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), windows[begin].target.size());
  for (std::size_t i = begin; i < end; ++i)
    out.row(static_cast<Eigen::Index>(i - begin)) = windows[i].target.transpose();
  return out;
}

double mse_loss(Forecaster& model, const std::vector<SupervisedWindow>& windows) {
  if (windows.empty()) return 0.0;
  double sq_sum = 0.0;
  std::size_t n = 0;
  // Chunked to bound the activation memory on long window lists.
  const std::size_t chunk = 256;
  for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, windows.size());
    const Eigen::MatrixXd pred = model.predict_batch(stack_inputs(windows, begin, end));
    const Eigen::MatrixXd target = stack_targets(windows, begin, end);
    sq_sum += (pred - target).array().square().sum();
    n += static_cast<std::size_t>(pred.size());
  }
  return sq_sum / static_cast<double>(n);
}

TrainReport train(Forecaster& model, const std::vector<SupervisedWindow>& train_windows,
                  const std::vector<SupervisedWindow>& val_windows) {
  const ModelSpec& spec = model.spec();
  TrainReport report;
  report.seed = spec.seed;
  report.n_train_windows = train_windows.size();
  report.n_val_windows = val_windows.size();

  const auto started = std::chrono::steady_clock::now();
  if (spec.kind == ModelKind::mean || spec.epochs == 0) {
    report.wall_clock_train_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
  }
  if (train_windows.empty()) throw EmptyTrainingSetError();

  nn::Adam optimizer(spec.learning_rate);
  const auto params = model.parameters();
  std::mt19937_64 shuffle_rng(spec.seed);
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(spec.batch_size);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_sq_sum = 0.0;
    std::size_t epoch_count = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
      const std::size_t end = std::min(begin + batch_size, order.size());
      std::vector<SupervisedWindow> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train_windows[order[i]]);

      const Eigen::MatrixXd inputs = stack_inputs(batch, 0, batch.size());
      const Eigen::MatrixXd targets = stack_targets(batch, 0, batch.size());
      model.zero_grads();
      const Eigen::MatrixXd pred = model.forward_train(inputs);
      const Eigen::MatrixXd diff = pred - targets;
      const double loss = diff.array().square().mean();
      if (!std::isfinite(loss)) throw NonFiniteLossError(epoch, batch_index);
      epoch_sq_sum += diff.array().square().sum();
      epoch_count += static_cast<std::size_t>(diff.size());

      model.backward(2.0 * diff / static_cast<double>(diff.size()));
      optimizer.step(params);
    }
    report.train_loss_per_epoch.push_back(epoch_sq_sum / static_cast<double>(epoch_count));
    report.val_loss_per_epoch.push_back(val_windows.empty() ? 0.0
                                                            : mse_loss(model, val_windows));
  }

  report.wall_clock_train_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

TimingRecord measure_times(const TrainReport& report, std::size_t n_train_points,
                           double pred_elapsed_s, std::size_t n_pred_points) {
  if (n_train_points == 0 || n_pred_points == 0) throw ZeroCountError();
  TimingRecord t;
  t.train_time_per_100 = report.wall_clock_train_s / static_cast<double>(n_train_points) * 100.0;
  t.pred_time_per_100 = pred_elapsed_s / static_cast<double>(n_pred_points) * 100.0;
  return t;
}

}  // namespace tfb
