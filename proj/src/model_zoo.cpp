#include "tfb/model_zoo.hpp"

#include "tfb/nn/layers.hpp"
#include "tfb/nn/recurrent.hpp"

#include "json.hpp"

#include <cstring>
#include <fstream>
#include <random>

namespace tfb {

using nn::Seq;
using json = nlohmann::json;

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mean: return "mean";
    case ModelKind::gru: return "gru";
    case ModelKind::lstm: return "lstm";
    case ModelKind::gru_fcn: return "gru_fcn";
    case ModelKind::lstm_fcn: return "lstm_fcn";
    case ModelKind::inception_time: return "inception_time";
    case ModelKind::resnet: return "resnet";
    case ModelKind::rclstm: return "rclstm";
  }
  throw std::invalid_argument("bad ModelKind");
}

ModelKind model_kind_from_string(const std::string& s) {
  for (ModelKind k : all_model_kinds()) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown model kind: " + s);
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {
      ModelKind::mean,     ModelKind::gru,            ModelKind::lstm,
      ModelKind::gru_fcn,  ModelKind::lstm_fcn,       ModelKind::inception_time,
      ModelKind::resnet,   ModelKind::rclstm};
  return kinds;
}

void ModelSpec::validate() const {
  if (train_window <= 0 || pred_window <= 0)
    throw InvalidSpecError("train/pred windows must be positive");
  if (kind == ModelKind::mean) return;
  if (batch_size <= 0) throw InvalidSpecError("batch_size must be positive");
  if (learning_rate <= 0) throw InvalidSpecError("learning_rate must be positive");
  if (epochs < 0) throw InvalidSpecError("epochs must be nonnegative");
  switch (kind) {
    case ModelKind::gru:
    case ModelKind::lstm:
      if (rnn_layers <= 0 || hidden_size <= 0)
        throw InvalidSpecError("recurrent models need layers and hidden size");
      break;
    case ModelKind::rclstm:
      if (rnn_layers <= 0 || hidden_size <= 0)
        throw InvalidSpecError("rclstm needs layers and hidden size");
      if (!(connectivity_p > 0.0 && connectivity_p <= 1.0))
        throw InvalidSpecError("connectivity_p must be in (0,1]");
      break;
    case ModelKind::gru_fcn:
    case ModelKind::lstm_fcn:
      if (rnn_layers <= 0 || hidden_size <= 0)
        throw InvalidSpecError("fcn hybrids need layers and hidden size");
      if (conv_channels.size() != 3)
        throw InvalidSpecError("fcn hybrids need exactly three conv channel widths");
      break;
    case ModelKind::resnet:
      if (conv_channels.size() != 3)
        throw InvalidSpecError("resnet needs exactly three block channel widths");
      break;
    default:
      break;
  }
}

ModelSpec default_spec(ModelKind kind, int train_window, int pred_window, std::uint64_t seed) {
  ModelSpec s;
  s.kind = kind;
  s.seed = seed;
  s.train_window = train_window;
  s.pred_window = pred_window;
  switch (kind) {
    case ModelKind::mean:
      break;
    case ModelKind::gru:
      s.rnn_layers = 1; s.hidden_size = 100; s.batch_size = 16;
      s.learning_rate = 0.01; s.epochs = 100;
      break;
    case ModelKind::lstm:
      s.rnn_layers = 1; s.hidden_size = 100; s.batch_size = 16;
      s.learning_rate = 0.01; s.epochs = 100;
      break;
    case ModelKind::gru_fcn:
      s.rnn_layers = 4; s.hidden_size = 20; s.batch_size = 16;
      s.learning_rate = 0.01; s.epochs = 20; s.conv_channels = {64, 128, 64};
      break;
    case ModelKind::lstm_fcn:
      s.rnn_layers = 1; s.hidden_size = 100; s.batch_size = 16;
      s.learning_rate = 0.01; s.epochs = 100; s.conv_channels = {128, 256, 128};
      break;
    case ModelKind::inception_time:
      s.batch_size = 128; s.learning_rate = 0.001; s.epochs = 20;
      break;
    case ModelKind::resnet:
      s.batch_size = 128; s.learning_rate = 0.01; s.epochs = 20;
      s.conv_channels = {64, 128, 128};
      break;
    case ModelKind::rclstm:
      s.rnn_layers = 1; s.hidden_size = 300; s.batch_size = 32;
      s.learning_rate = 0.01; s.epochs = 100; s.connectivity_p = 0.01;
      break;
  }
  return s;
}

WrongInputLengthError::WrongInputLengthError(Eigen::Index got, Eigen::Index want)
    : std::invalid_argument("input length " + std::to_string(got) + ", expected " +
                            std::to_string(want)) {}

void Forecaster::check_input(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != spec_.train_window)
    throw WrongInputLengthError(inputs.cols(), spec_.train_window);
}

Eigen::VectorXd Forecaster::predict(const Eigen::Ref<const Eigen::VectorXd>& input) {
  Eigen::MatrixXd batch(1, input.size());
  batch.row(0) = input.transpose();
  return predict_batch(batch).row(0).transpose();
}

long Forecaster::parameter_count() {
  long count = 0;
  for (const auto* p : parameters()) count += static_cast<long>(p->value.size());
  return count;
}

void Forecaster::zero_grads() {
  for (auto* p : parameters()) p->zero_grad();
}

namespace {

Seq to_seq(const Eigen::MatrixXd& inputs) {
  Seq xs(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index t = 0; t < inputs.cols(); ++t)
    xs[static_cast<std::size_t>(t)] = inputs.col(t);
  return xs;
}

// ---- mean baseline ----

class MeanForecaster final : public Forecaster {
 public:
  explicit MeanForecaster(ModelSpec spec) : Forecaster(std::move(spec)) {}

  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) override {
    check_input(inputs);
    return inputs.rowwise().mean().replicate(1, spec_.pred_window);
  }
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& inputs) override {
    return predict_batch(inputs);
  }
  void backward(const Eigen::MatrixXd&) override {}
  std::vector<nn::Param*> parameters() override { return {}; }
  void register_state(nn::StateMap&) override {}
};

// ---- plain recurrent stack (gru / lstm / rclstm) ----

class RecurrentForecaster final : public Forecaster {
 public:
  explicit RecurrentForecaster(ModelSpec spec) : Forecaster(std::move(spec)) {
    std::mt19937_64 rng(spec_.seed);
    const bool use_gru = spec_.kind == ModelKind::gru;
    const bool masked = spec_.kind == ModelKind::rclstm;
    Eigen::Index in = 1;
    for (int l = 0; l < spec_.rnn_layers; ++l) {
      if (use_gru) {
        grus_.emplace_back(in, spec_.hidden_size, rng);
      } else {
        std::optional<nn::MaskSet> masks;
        if (masked) {
          // Separate mask stream keeps the weight init identical to plain lstm.
          masks = nn::sample_masks(spec_.hidden_size, in, spec_.connectivity_p,
                                   spec_.seed ^ (0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(l)));
        }
        lstms_.emplace_back(in, spec_.hidden_size, rng, std::move(masks));
      }
      in = spec_.hidden_size;
    }
    head_ = std::make_unique<nn::Dense>(spec_.hidden_size, spec_.pred_window, rng);
  }

  Eigen::MatrixXd run(const Eigen::MatrixXd& inputs) {
    check_input(inputs);
    Seq h = to_seq(inputs);
    for (auto& l : grus_) h = l.forward(h);
    for (auto& l : lstms_) h = l.forward(h);
    last_steps_ = h.size();
    batch_ = inputs.rows();
    return head_->forward(h.back());
  }

  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) override { return run(inputs); }
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& inputs) override { return run(inputs); }

  void backward(const Eigen::MatrixXd& grad_outputs) override {
    const Eigen::MatrixXd g_last = head_->backward(grad_outputs);
    Seq g(last_steps_);
    const Eigen::Index cols = g_last.cols();
    for (std::size_t t = 0; t + 1 < last_steps_; ++t)
      g[t] = Eigen::MatrixXd::Zero(batch_, cols);
    g.back() = g_last;
    for (std::size_t l = lstms_.size(); l-- > 0;) g = lstms_[l].backward(g);
    for (std::size_t l = grus_.size(); l-- > 0;) g = grus_[l].backward(g);
  }

  std::vector<nn::Param*> parameters() override {
    std::vector<nn::Param*> out;
    for (auto& l : grus_) l.collect(out);
    for (auto& l : lstms_) l.collect(out);
    head_->collect(out);
    return out;
  }

  void register_state(nn::StateMap& out) override {
    for (std::size_t l = 0; l < grus_.size(); ++l)
      grus_[l].register_state("rnn" + std::to_string(l), out);
    for (std::size_t l = 0; l < lstms_.size(); ++l)
      lstms_[l].register_state("rnn" + std::to_string(l), out);
    head_->register_state("head", out);
  }

  long parameter_count() override {
    if (spec_.kind != ModelKind::rclstm) return Forecaster::parameter_count();
    long count = 0;
    for (const auto& l : lstms_) count += l.effective_parameter_count();
    count += static_cast<long>(spec_.hidden_size) * spec_.pred_window + spec_.pred_window;
    return count;
  }

  const std::vector<nn::LstmLayer>& lstm_layers() const { return lstms_; }

 private:
  std::vector<nn::GruLayer> grus_;
  std::vector<nn::LstmLayer> lstms_;
  std::unique_ptr<nn::Dense> head_;
  std::size_t last_steps_ = 0;
  Eigen::Index batch_ = 0;
};

// ---- recurrent + convolutional hybrid (gru_fcn / lstm_fcn) ----

class RnnFcnForecaster final : public Forecaster {
 public:
  explicit RnnFcnForecaster(ModelSpec spec) : Forecaster(std::move(spec)) {
    std::mt19937_64 rng(spec_.seed);
    const bool use_gru = spec_.kind == ModelKind::gru_fcn;
    Eigen::Index in = 1;
    for (int l = 0; l < spec_.rnn_layers; ++l) {
      if (use_gru) grus_.emplace_back(in, spec_.hidden_size, rng);
      else lstms_.emplace_back(in, spec_.hidden_size, rng, std::nullopt);
      in = spec_.hidden_size;
    }
    // Conv branch: three blocks, kernel sizes 8/5/3.
    const Eigen::Index kernels[3] = {8, 5, 3};
    Eigen::Index c_in = 1;
    for (int i = 0; i < 3; ++i) {
      convs_.emplace_back(c_in, spec_.conv_channels[static_cast<std::size_t>(i)], kernels[i], rng);
      bns_.emplace_back(spec_.conv_channels[static_cast<std::size_t>(i)]);
      c_in = spec_.conv_channels[static_cast<std::size_t>(i)];
    }
    relus_.resize(3);
    head_ = std::make_unique<nn::Dense>(spec_.hidden_size + c_in, spec_.pred_window, rng);
  }

  Eigen::MatrixXd run(const Eigen::MatrixXd& inputs, bool training) {
    check_input(inputs);
    const Seq xs = to_seq(inputs);
    Seq h = xs;
    for (auto& l : grus_) h = l.forward(h);
    for (auto& l : lstms_) h = l.forward(h);
    rnn_steps_ = h.size();
    batch_ = inputs.rows();

    Seq c = xs;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      c = convs_[i].forward(c);
      c = bns_[i].forward(c, training);
      c = relus_[i].forward(c);
    }
    const Eigen::MatrixXd pooled = gap_.forward(c);

    Eigen::MatrixXd joined(batch_, h.back().cols() + pooled.cols());
    joined << h.back(), pooled;
    rnn_width_ = h.back().cols();
    return head_->forward(joined);
  }

  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) override {
    return run(inputs, false);
  }
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& inputs) override {
    return run(inputs, true);
  }

  void backward(const Eigen::MatrixXd& grad_outputs) override {
    const Eigen::MatrixXd g_joined = head_->backward(grad_outputs);
    const Eigen::MatrixXd g_rnn_last = g_joined.leftCols(rnn_width_);
    const Eigen::MatrixXd g_pooled = g_joined.rightCols(g_joined.cols() - rnn_width_);

    Seq gc = gap_.backward(g_pooled);
    for (std::size_t i = convs_.size(); i-- > 0;) {
      gc = relus_[i].backward(gc);
      gc = bns_[i].backward(gc);
      gc = convs_[i].backward(gc);
    }

    Seq gh(rnn_steps_);
    for (std::size_t t = 0; t + 1 < rnn_steps_; ++t)
      gh[t] = Eigen::MatrixXd::Zero(batch_, rnn_width_);
    gh.back() = g_rnn_last;
    for (std::size_t l = lstms_.size(); l-- > 0;) gh = lstms_[l].backward(gh);
    for (std::size_t l = grus_.size(); l-- > 0;) gh = grus_[l].backward(gh);
    // Both branches read the raw input; no parameters live upstream of them.
  }

  std::vector<nn::Param*> parameters() override {
    std::vector<nn::Param*> out;
    for (auto& l : grus_) l.collect(out);
    for (auto& l : lstms_) l.collect(out);
    for (auto& c : convs_) c.collect(out);
    for (auto& b : bns_) b.collect(out);
    head_->collect(out);
    return out;
  }

  void register_state(nn::StateMap& out) override {
    for (std::size_t l = 0; l < grus_.size(); ++l)
      grus_[l].register_state("rnn" + std::to_string(l), out);
    for (std::size_t l = 0; l < lstms_.size(); ++l)
      lstms_[l].register_state("rnn" + std::to_string(l), out);
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].register_state("conv" + std::to_string(i), out);
      bns_[i].register_state("bn" + std::to_string(i), out);
    }
    head_->register_state("head", out);
  }

 private:
  std::vector<nn::GruLayer> grus_;
  std::vector<nn::LstmLayer> lstms_;
  std::vector<nn::Conv1d> convs_;
  std::vector<nn::BatchNorm1d> bns_;
  std::vector<nn::ReLU> relus_;
  nn::GlobalAvgPool gap_;
  std::unique_ptr<nn::Dense> head_;
  std::size_t rnn_steps_ = 0;
  Eigen::Index batch_ = 0, rnn_width_ = 0;
};

// ---- InceptionTime ----

constexpr Eigen::Index kBottleneck = 32;
constexpr Eigen::Index kInceptionModules = 6;
constexpr Eigen::Index kInceptionOut = 4 * kBottleneck;  // three convs + pool branch

struct InceptionModule {
  std::optional<nn::Conv1d> bottleneck;  // absent when input is one channel
  std::vector<nn::Conv1d> convs;         // kernels 10/20/40
  nn::MaxPool1d pool{3};
  nn::Conv1d pool_conv;
  nn::BatchNorm1d bn;
  nn::ReLU relu;
  Eigen::Index in_channels;

  InceptionModule(Eigen::Index in, std::mt19937_64& rng)
      : pool_conv(in, kBottleneck, 1, rng), bn(kInceptionOut), in_channels(in) {
    Eigen::Index conv_in = in;
    if (in > 1) {
      bottleneck.emplace(in, kBottleneck, 1, rng);
      conv_in = kBottleneck;
    }
    const Eigen::Index kernels[3] = {10, 20, 40};
    for (const Eigen::Index k : kernels) convs.emplace_back(conv_in, kBottleneck, k, rng);
  }

  Seq forward(const Seq& x, bool training) {
    Seq z = bottleneck ? bottleneck->forward(x) : x;
    std::vector<Seq> branches;
    for (auto& c : convs) branches.push_back(c.forward(z));
    branches.push_back(pool_conv.forward(pool.forward(x)));
    return relu.forward(bn.forward(nn::concat_channels(branches), training));
  }

  Seq backward(const Seq& gy) {
    Seq g = bn.backward(relu.backward(gy));
    const std::vector<Eigen::Index> widths(4, kBottleneck);
    auto parts = nn::split_channels(g, widths);
    Seq gx;  // gradient w.r.t. module input
    Seq gz;  // gradient w.r.t. bottleneck output
    for (std::size_t i = 0; i < convs.size(); ++i) {
      Seq gi = convs[i].backward(parts[i]);
      if (gz.empty()) gz = std::move(gi);
      else for (std::size_t t = 0; t < gz.size(); ++t) gz[t] += gi[t];
    }
    gx = pool.backward(pool_conv.backward(parts[3]));
    if (bottleneck) {
      Seq gb = bottleneck->backward(gz);
      for (std::size_t t = 0; t < gx.size(); ++t) gx[t] += gb[t];
    } else {
      for (std::size_t t = 0; t < gx.size(); ++t) gx[t] += gz[t];
    }
    return gx;
  }

  void collect(std::vector<nn::Param*>& out) {
    if (bottleneck) bottleneck->collect(out);
    for (auto& c : convs) c.collect(out);
    pool_conv.collect(out);
    bn.collect(out);
  }

  void register_state(const std::string& prefix, nn::StateMap& out) {
    if (bottleneck) bottleneck->register_state(prefix + ".bottleneck", out);
    for (std::size_t i = 0; i < convs.size(); ++i)
      convs[i].register_state(prefix + ".conv" + std::to_string(i), out);
    pool_conv.register_state(prefix + ".pool_conv", out);
    bn.register_state(prefix + ".bn", out);
  }
};

struct ResidualShortcut {
  nn::Conv1d conv;
  nn::BatchNorm1d bn;
  nn::ReLU relu;
  Seq saved_input;

  ResidualShortcut(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
      : conv(in, out, 1, rng), bn(out) {}

  Seq apply(const Seq& block_input, const Seq& block_output, bool training) {
    saved_input = block_input;
    Seq s = bn.forward(conv.forward(block_input), training);
    Seq y(block_output.size());
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = block_output[t] + s[t];
    return relu.forward(y);
  }

  // Returns {grad wrt block output, grad wrt block input (shortcut path)}.
  std::pair<Seq, Seq> backward(const Seq& gy) {
    Seq g = relu.backward(gy);
    Seq gs = conv.backward(bn.backward(g));
    return {std::move(g), std::move(gs)};
  }
};

class InceptionTimeForecaster final : public Forecaster {
 public:
  explicit InceptionTimeForecaster(ModelSpec spec) : Forecaster(std::move(spec)) {
    std::mt19937_64 rng(spec_.seed);
    Eigen::Index in = 1;
    for (Eigen::Index m = 0; m < kInceptionModules; ++m) {
      modules_.emplace_back(in, rng);
      in = kInceptionOut;
      if ((m + 1) % 3 == 0) {
        const Eigen::Index res_in = m + 1 == 3 ? 1 : kInceptionOut;
        shortcuts_.emplace_back(res_in, kInceptionOut, rng);
      }
    }
    head_ = std::make_unique<nn::Dense>(kInceptionOut, spec_.pred_window, rng);
  }

  Eigen::MatrixXd run(const Eigen::MatrixXd& inputs, bool training) {
    check_input(inputs);
    Seq x = to_seq(inputs);
    Seq res_input = x;
    std::size_t shortcut_idx = 0;
    for (Eigen::Index m = 0; m < kInceptionModules; ++m) {
      x = modules_[static_cast<std::size_t>(m)].forward(x, training);
      if ((m + 1) % 3 == 0) {
        x = shortcuts_[shortcut_idx++].apply(res_input, x, training);
        res_input = x;
      }
    }
    return head_->forward(gap_.forward(x));
  }

  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) override {
    return run(inputs, false);
  }
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& inputs) override {
    return run(inputs, true);
  }

  void backward(const Eigen::MatrixXd& grad_outputs) override {
    Seq g = gap_.backward(head_->backward(grad_outputs));
    Seq pending_shortcut;  // gradient flowing through the skip connection
    for (Eigen::Index m = kInceptionModules; m-- > 0;) {
      if ((m + 1) % 3 == 0) {
        auto [g_block, g_skip] = shortcuts_[static_cast<std::size_t>((m + 1) / 3 - 1)].backward(g);
        g = std::move(g_block);
        pending_shortcut = std::move(g_skip);
      }
      g = modules_[static_cast<std::size_t>(m)].backward(g);
      if (m % 3 == 0 && !pending_shortcut.empty()) {
        for (std::size_t t = 0; t < g.size(); ++t) g[t] += pending_shortcut[t];
        pending_shortcut.clear();
      }
    }
  }

  std::vector<nn::Param*> parameters() override {
    std::vector<nn::Param*> out;
    for (auto& m : modules_) m.collect(out);
    for (auto& s : shortcuts_) {
      s.conv.collect(out);
      s.bn.collect(out);
    }
    head_->collect(out);
    return out;
  }

  void register_state(nn::StateMap& out) override {
    for (std::size_t m = 0; m < modules_.size(); ++m)
      modules_[m].register_state("module" + std::to_string(m), out);
    for (std::size_t s = 0; s < shortcuts_.size(); ++s) {
      shortcuts_[s].conv.register_state("shortcut" + std::to_string(s) + ".conv", out);
      shortcuts_[s].bn.register_state("shortcut" + std::to_string(s) + ".bn", out);
    }
    head_->register_state("head", out);
  }

 private:
  std::vector<InceptionModule> modules_;
  std::vector<ResidualShortcut> shortcuts_;
  nn::GlobalAvgPool gap_;
  std::unique_ptr<nn::Dense> head_;
};

// ---- ResNet ----

struct ResNetBlock {
  std::vector<nn::Conv1d> convs;
  std::vector<nn::BatchNorm1d> bns;
  std::vector<nn::ReLU> relus;
  std::optional<nn::Conv1d> shortcut_conv;
  std::optional<nn::BatchNorm1d> shortcut_bn;
  nn::ReLU out_relu;

  ResNetBlock(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
    const Eigen::Index kernels[3] = {8, 5, 3};
    Eigen::Index c = in;
    for (const Eigen::Index k : kernels) {
      convs.emplace_back(c, out, k, rng);
      bns.emplace_back(out);
      c = out;
    }
    relus.resize(2);
    if (in != out) {
      shortcut_conv.emplace(in, out, 1, rng);
      shortcut_bn.emplace(out);
    }
  }

  Seq forward(const Seq& x, bool training) {
    Seq y = x;
    for (std::size_t i = 0; i < convs.size(); ++i) {
      y = bns[i].forward(convs[i].forward(y), training);
      if (i + 1 < convs.size()) y = relus[i].forward(y);
    }
    Seq s = shortcut_conv ? shortcut_bn->forward(shortcut_conv->forward(x), training) : x;
    for (std::size_t t = 0; t < y.size(); ++t) y[t] += s[t];
    return out_relu.forward(y);
  }

  Seq backward(const Seq& gy) {
    Seq g = out_relu.backward(gy);
    Seq g_shortcut = shortcut_conv ? shortcut_conv->backward(shortcut_bn->backward(g)) : g;
    Seq gm = g;
    for (std::size_t i = convs.size(); i-- > 0;) {
      if (i + 1 < convs.size()) gm = relus[i].backward(gm);
      gm = convs[i].backward(bns[i].backward(gm));
    }
    for (std::size_t t = 0; t < gm.size(); ++t) gm[t] += g_shortcut[t];
    return gm;
  }

  void collect(std::vector<nn::Param*>& out) {
    for (auto& c : convs) c.collect(out);
    for (auto& b : bns) b.collect(out);
    if (shortcut_conv) shortcut_conv->collect(out);
    if (shortcut_bn) shortcut_bn->collect(out);
  }

  void register_state(const std::string& prefix, nn::StateMap& out) {
    for (std::size_t i = 0; i < convs.size(); ++i) {
      convs[i].register_state(prefix + ".conv" + std::to_string(i), out);
      bns[i].register_state(prefix + ".bn" + std::to_string(i), out);
    }
    if (shortcut_conv) shortcut_conv->register_state(prefix + ".shortcut_conv", out);
    if (shortcut_bn) shortcut_bn->register_state(prefix + ".shortcut_bn", out);
  }
};

class ResNetForecaster final : public Forecaster {
 public:
  explicit ResNetForecaster(ModelSpec spec) : Forecaster(std::move(spec)) {
    std::mt19937_64 rng(spec_.seed);
    Eigen::Index in = 1;
    for (const int c : spec_.conv_channels) {
      blocks_.emplace_back(in, c, rng);
      in = c;
    }
    head_ = std::make_unique<nn::Dense>(in, spec_.pred_window, rng);
  }

  Eigen::MatrixXd run(const Eigen::MatrixXd& inputs, bool training) {
    check_input(inputs);
    Seq x = to_seq(inputs);
    for (auto& b : blocks_) x = b.forward(x, training);
    return head_->forward(gap_.forward(x));
  }

  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) override {
    return run(inputs, false);
  }
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& inputs) override {
    return run(inputs, true);
  }

  void backward(const Eigen::MatrixXd& grad_outputs) override {
    Seq g = gap_.backward(head_->backward(grad_outputs));
    for (std::size_t b = blocks_.size(); b-- > 0;) g = blocks_[b].backward(g);
  }

  std::vector<nn::Param*> parameters() override {
    std::vector<nn::Param*> out;
    for (auto& b : blocks_) b.collect(out);
    head_->collect(out);
    return out;
  }

  void register_state(nn::StateMap& out) override {
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      blocks_[b].register_state("block" + std::to_string(b), out);
    head_->register_state("head", out);
  }

 private:
  std::vector<ResNetBlock> blocks_;
  nn::GlobalAvgPool gap_;
  std::unique_ptr<nn::Dense> head_;
};

}  // namespace

std::unique_ptr<Forecaster> build(const ModelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ModelKind::mean:
      return std::make_unique<MeanForecaster>(spec);
    case ModelKind::gru:
    case ModelKind::lstm:
    case ModelKind::rclstm:
      return std::make_unique<RecurrentForecaster>(spec);
    case ModelKind::gru_fcn:
    case ModelKind::lstm_fcn:
      return std::make_unique<RnnFcnForecaster>(spec);
    case ModelKind::inception_time:
      return std::make_unique<InceptionTimeForecaster>(spec);
    case ModelKind::resnet:
      return std::make_unique<ResNetForecaster>(spec);
  }
  throw InvalidSpecError("bad ModelKind");
}

// ---- checkpoints ----

namespace {

constexpr char kMagic[8] = {'T', 'F', 'B', 'M', '0', '0', '0', '1'};

json spec_to_json(const ModelSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"rnn_layers", s.rnn_layers},
              {"hidden_size", s.hidden_size},
              {"conv_channels", s.conv_channels},
              {"batch_size", s.batch_size},
              {"learning_rate", s.learning_rate},
              {"epochs", s.epochs},
              {"connectivity_p", s.connectivity_p},
              {"seed", s.seed},
              {"train_window", s.train_window},
              {"pred_window", s.pred_window}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.kind = model_kind_from_string(j.at("kind").get<std::string>());
  s.rnn_layers = j.at("rnn_layers").get<int>();
  s.hidden_size = j.at("hidden_size").get<int>();
  s.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  s.batch_size = j.at("batch_size").get<int>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.epochs = j.at("epochs").get<int>();
  s.connectivity_p = j.at("connectivity_p").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_window = j.at("train_window").get<int>();
  s.pred_window = j.at("pred_window").get<int>();
  return s;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(Forecaster& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof(kMagic));
  const std::string header = spec_to_json(model.spec()).dump();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));

  nn::StateMap state;
  model.register_state(state);
  write_pod<std::uint64_t>(os, state.size());
  for (const auto& [name, tensor] : state) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(tensor->rows()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(tensor->cols()));
    os.write(reinterpret_cast<const char*>(tensor->data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(tensor->size())));
  }
}

std::unique_ptr<Forecaster> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  const auto header_len = read_pod<std::uint32_t>(is);
  std::string header(header_len, '\0');
  is.read(header.data(), header_len);
  auto model = build(spec_from_json(json::parse(header)));

  nn::StateMap state;
  model->register_state(state);
  std::map<std::string, Eigen::MatrixXd*> by_name;
  for (auto& [name, tensor] : state) by_name[name] = tensor;

  const auto count = read_pod<std::uint64_t>(is);
  if (count != state.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = static_cast<Eigen::Index>(read_pod<std::uint64_t>(is));
    const auto cols = static_cast<Eigen::Index>(read_pod<std::uint64_t>(is));
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("unexpected checkpoint tensor " + name);
    if (it->second->rows() != rows || it->second->cols() != cols)
      throw std::runtime_error("checkpoint tensor shape mismatch for " + name);
    is.read(reinterpret_cast<char*>(it->second->data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rows * cols)));
    if (!is) throw std::runtime_error("truncated checkpoint");
  }
  return model;
}

}  // namespace tfb
