#pragma once

#include "tfb/nn/adam.hpp"
#include "tfb/nn/core.hpp"
#include "tfb/preprocess.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace tfb {

enum class ModelKind { mean, gru, lstm, gru_fcn, lstm_fcn, inception_time, resnet, rclstm };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);
const std::vector<ModelKind>& all_model_kinds();

/// Model kind plus everything needed to build and train it.
struct ModelSpec {
  ModelKind kind = ModelKind::mean;
  int rnn_layers = 0;
  int hidden_size = 0;
  std::vector<int> conv_channels;
  int batch_size = 0;
  double learning_rate = 0.0;
  int epochs = 0;
  double connectivity_p = 0.01;  // rclstm only
  std::uint64_t seed = 0;
  int train_window = 0;  // W
  int pred_window = 0;   // H

  void validate() const;
};

struct InvalidSpecError : std::invalid_argument {
  explicit InvalidSpecError(const std::string& what) : std::invalid_argument(what) {}
};

/// Final benchmark hyperparameters per model kind.
ModelSpec default_spec(ModelKind kind, int train_window, int pred_window, std::uint64_t seed);

/// Uniform train/predict contract: W scaled values in, H scaled values out.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  const ModelSpec& spec() const { return spec_; }

  /// Inference-mode forward: inputs B x W -> predictions B x H. Deterministic.
  virtual Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) = 0;

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& input);

  /// Training-mode forward, caching activations for backward().
  virtual Eigen::MatrixXd forward_train(const Eigen::MatrixXd& inputs) = 0;
  virtual void backward(const Eigen::MatrixXd& grad_outputs) = 0;

  virtual std::vector<nn::Param*> parameters() = 0;
  virtual void register_state(nn::StateMap& out) = 0;

  /// Trainable scalars; for rclstm, only unmasked entries count.
  virtual long parameter_count();

  void zero_grads();

 protected:
  explicit Forecaster(ModelSpec spec) : spec_(std::move(spec)) {}
  void check_input(const Eigen::MatrixXd& inputs) const;

  ModelSpec spec_;
};

struct WrongInputLengthError : std::invalid_argument {
  WrongInputLengthError(Eigen::Index got, Eigen::Index want);
};

std::unique_ptr<Forecaster> build(const ModelSpec& spec);

/// Checkpoints: self-describing binary holding the spec and every tensor
/// (parameters, masks, normalization buffers). Reload reproduces predictions.
void save_checkpoint(Forecaster& model, const std::filesystem::path& path);
std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& path);

}  // namespace tfb
