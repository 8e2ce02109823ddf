#include "doctest.h"

#include "tfb/fixture.hpp"
#include "tfb/training.hpp"

#include <numeric>
#include <random>

using namespace tfb;

namespace {

std::vector<SupervisedWindow> sinusoid_windows(Eigen::Index n, const WindowConfig& cfg,
                                               double noise_std = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = 0.5 + 0.4 * std::sin(2.0 * M_PI * static_cast<double>(i) / 24.0) + noise(rng);
  return make_windows(v, cfg);
}

ModelSpec small_spec(ModelKind kind, int epochs, std::uint64_t seed = 0) {
  ModelSpec s = default_spec(kind, 24, 1, seed);
  s.epochs = epochs;
  switch (kind) {
    case ModelKind::gru:
    case ModelKind::lstm:
    case ModelKind::rclstm:
      s.hidden_size = 12;
      break;
    case ModelKind::gru_fcn:
    case ModelKind::lstm_fcn:
      s.hidden_size = 6;
      s.rnn_layers = 1;
      s.conv_channels = {6, 8, 6};
      break;
    case ModelKind::resnet:
      s.conv_channels = {6, 8, 8};
      break;
    default:
      break;
  }
  if (kind == ModelKind::rclstm) s.connectivity_p = 0.5;
  return s;
}

}  // namespace

TEST_CASE("training reduces the loss for every trainable kind") {
  const auto windows = sinusoid_windows(300, {24, 1}, 0.01);
  for (const ModelKind kind : all_model_kinds()) {
    if (kind == ModelKind::mean) continue;
    const int epochs = 5;
    auto model = build(small_spec(kind, epochs));
    const double before = mse_loss(*model, windows);
    const TrainReport report = train(*model, windows, {});
    const double after = mse_loss(*model, windows);
    INFO(to_string(kind), ": ", before, " -> ", after);
    CHECK(after < before);
    CHECK(report.train_loss_per_epoch.size() == epochs);
    CHECK(report.train_loss_per_epoch.back() < report.train_loss_per_epoch.front());
  }
}

TEST_CASE("mean model trains in zero epochs") {
  auto model = build(default_spec(ModelKind::mean, 24, 1, 0));
  const auto windows = sinusoid_windows(100, {24, 1});
  const TrainReport report = train(*model, windows, windows);
  CHECK(report.train_loss_per_epoch.empty());
}

TEST_CASE("training is deterministic given the seed") {
  const auto windows = sinusoid_windows(200, {24, 1}, 0.02);
  const auto val = sinusoid_windows(80, {24, 1}, 0.02, 2);
  Eigen::MatrixXd preds[2];
  double losses[2][2];
  for (int run = 0; run < 2; ++run) {
    auto model = build(small_spec(ModelKind::gru, 3, 42));
    const TrainReport report = train(*model, windows, val);
    preds[run] = model->predict_batch(stack_inputs(windows, 0, 8));
    losses[run][0] = report.train_loss_per_epoch.back();
    losses[run][1] = report.val_loss_per_epoch.back();
  }
  CHECK((preds[0] - preds[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(losses[0][0] == losses[1][0]);
  CHECK(losses[0][1] == losses[1][1]);
}

TEST_CASE("different seeds give different models") {
  const auto windows = sinusoid_windows(200, {24, 1}, 0.02);
  auto a = build(small_spec(ModelKind::gru, 2, 1));
  auto b = build(small_spec(ModelKind::gru, 2, 2));
  train(*a, windows, {});
  train(*b, windows, {});
  const Eigen::MatrixXd x = stack_inputs(windows, 0, 4);
  CHECK((a->predict_batch(x) - b->predict_batch(x)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("empty training set throws") {
  auto model = build(small_spec(ModelKind::gru, 1));
  CHECK_THROWS_AS(train(*model, {}, {}), EmptyTrainingSetError);
}

TEST_CASE("validation loss does not update parameters") {
  const auto windows = sinusoid_windows(200, {24, 1}, 0.02);
  auto with_val = build(small_spec(ModelKind::lstm, 2, 7));
  auto without_val = build(small_spec(ModelKind::lstm, 2, 7));
  train(*with_val, windows, windows);
  train(*without_val, windows, {});
  const Eigen::MatrixXd x = stack_inputs(windows, 0, 4);
  CHECK((with_val->predict_batch(x) - without_val->predict_batch(x)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("masked rclstm weights stay exactly zero through training") {
  const auto windows = sinusoid_windows(150, {24, 1}, 0.02);
  ModelSpec spec = small_spec(ModelKind::rclstm, 10, 3);
  spec.connectivity_p = 0.3;
  auto model = build(spec);
  train(*model, windows, {});

  nn::StateMap state;
  model->register_state(state);
  const Eigen::MatrixXd *wx = nullptr, *wh = nullptr, *mx = nullptr, *mh = nullptr;
  for (const auto& [name, tensor] : state) {
    if (name.ends_with("wx")) wx = tensor;
    if (name.ends_with("wh")) wh = tensor;
    if (name.ends_with("mask_ih")) mx = tensor;
    if (name.ends_with("mask_hh")) mh = tensor;
  }
  REQUIRE(wx != nullptr);
  REQUIRE(mx != nullptr);
  REQUIRE(wh != nullptr);
  REQUIRE(mh != nullptr);
  CHECK((wx->array() * (1.0 - mx->array())).abs().maxCoeff() == 0.0);
  CHECK((wh->array() * (1.0 - mh->array())).abs().maxCoeff() == 0.0);
  // unmasked weights did move
  CHECK((wx->array() * mx->array()).abs().maxCoeff() > 0.0);
}

TEST_CASE("mse_loss matches a direct computation") {
  const auto windows = sinusoid_windows(100, {24, 2});
  auto model = build(default_spec(ModelKind::mean, 24, 2, 0));
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& w : windows) {
    const Eigen::VectorXd p = model->predict(w.input);
    sq += (p - w.target).array().square().sum();
    n += static_cast<std::size_t>(p.size());
  }
  CHECK(mse_loss(*model, windows) == doctest::Approx(sq / n).epsilon(1e-12));
}

TEST_CASE("timing normalization") {
  TrainReport report;
  report.wall_clock_train_s = 2.0;
  const TimingRecord t = measure_times(report, 400, 1.0, 50);
  CHECK(t.train_time_per_100 == doctest::Approx(0.5));
  CHECK(t.pred_time_per_100 == doctest::Approx(2.0));
  CHECK_THROWS_AS(measure_times(report, 0, 1.0, 50), ZeroCountError);
  CHECK_THROWS_AS(measure_times(report, 10, 1.0, 0), ZeroCountError);
}

TEST_CASE("stacking helpers lay out windows row-wise") {
  const auto windows = sinusoid_windows(60, {24, 2});
  const Eigen::MatrixXd x = stack_inputs(windows, 1, 3);
  const Eigen::MatrixXd y = stack_targets(windows, 1, 3);
  REQUIRE(x.rows() == 2);
  CHECK(x.cols() == 24);
  CHECK(y.cols() == 2);
  CHECK(x.row(0).transpose() == windows[1].input);
  CHECK(y.row(1).transpose() == windows[2].target);
}
