#include "tfb/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace tfb::nn {

// ---- Dense ----

Dense::Dense(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
    : w_("w", in, out), b_("b", 1, out) {
  init_uniform_fan_in(w_.value, in, rng);
  init_uniform_fan_in(b_.value, in, rng);
}

Eigen::MatrixXd Dense::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  return (x * w_.value).rowwise() + b_.value.row(0);
}

Eigen::MatrixXd Dense::backward(const Eigen::MatrixXd& gy) {
  w_.grad.noalias() += x_.transpose() * gy;
  b_.grad.row(0) += gy.colwise().sum();
  return gy * w_.value.transpose();
}

void Dense::collect(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

void Dense::register_state(const std::string& prefix, StateMap& out) {
  out.emplace_back(prefix + ".w", &w_.value);
  out.emplace_back(prefix + ".b", &b_.value);
}

// ---- Conv1d ----

Conv1d::Conv1d(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index kernel,
               std::mt19937_64& rng)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel),
      pad_left_((kernel - 1) / 2), b_("b", 1, out_channels) {
  const Eigen::Index fan_in = in_channels * kernel;
  w_.reserve(static_cast<std::size_t>(kernel));
  for (Eigen::Index k = 0; k < kernel; ++k) {
    w_.emplace_back("w" + std::to_string(k), in_channels, out_channels);
    init_uniform_fan_in(w_.back().value, fan_in, rng);
  }
  init_uniform_fan_in(b_.value, fan_in, rng);
}

Seq Conv1d::forward(const Seq& x) {
  x_ = x;
  const auto len = static_cast<Eigen::Index>(x.size());
  const Eigen::Index batch = x.empty() ? 0 : x[0].rows();
  Seq y(x.size());
  for (Eigen::Index t = 0; t < len; ++t) {
    Eigen::MatrixXd acc = b_.value.row(0).replicate(batch, 1);
    for (Eigen::Index k = 0; k < kernel_; ++k) {
      const Eigen::Index src = t + k - pad_left_;
      if (src < 0 || src >= len) continue;
      acc.noalias() += x[static_cast<std::size_t>(src)] * w_[static_cast<std::size_t>(k)].value;
    }
    y[static_cast<std::size_t>(t)] = std::move(acc);
  }
  return y;
}

Seq Conv1d::backward(const Seq& gy) {
  const auto len = static_cast<Eigen::Index>(gy.size());
  Seq gx(gy.size());
  for (auto& g : gx) g = Eigen::MatrixXd::Zero(x_[0].rows(), in_channels_);
  for (Eigen::Index t = 0; t < len; ++t) {
    const auto& g = gy[static_cast<std::size_t>(t)];
    b_.grad.row(0) += g.colwise().sum();
    for (Eigen::Index k = 0; k < kernel_; ++k) {
      const Eigen::Index src = t + k - pad_left_;
      if (src < 0 || src >= len) continue;
      auto& wk = w_[static_cast<std::size_t>(k)];
      wk.grad.noalias() += x_[static_cast<std::size_t>(src)].transpose() * g;
      gx[static_cast<std::size_t>(src)].noalias() += g * wk.value.transpose();
    }
  }
  return gx;
}

void Conv1d::collect(std::vector<Param*>& out) {
  for (auto& wk : w_) out.push_back(&wk);
  out.push_back(&b_);
}

void Conv1d::register_state(const std::string& prefix, StateMap& out) {
  for (std::size_t k = 0; k < w_.size(); ++k)
    out.emplace_back(prefix + ".w" + std::to_string(k), &w_[k].value);
  out.emplace_back(prefix + ".b", &b_.value);
}

// ---- BatchNorm1d ----

BatchNorm1d::BatchNorm1d(Eigen::Index channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps),
      gamma_("gamma", 1, channels), beta_("beta", 1, channels),
      running_mean_(Eigen::MatrixXd::Zero(1, channels)),
      running_var_(Eigen::MatrixXd::Ones(1, channels)) {
  gamma_.value.setOnes();
  beta_.value.setZero();
}

Seq BatchNorm1d::forward(const Seq& x, bool training) {
  const auto steps = x.size();
  Seq y(steps);
  if (!training) {
    const Eigen::RowVectorXd scale =
        (gamma_.value.row(0).array() / (running_var_.row(0).array() + eps_).sqrt()).matrix();
    for (std::size_t t = 0; t < steps; ++t) {
      y[t] = ((x[t].rowwise() - running_mean_.row(0)) * scale.asDiagonal()).rowwise() +
             beta_.value.row(0);
    }
    return y;
  }

  count_ = 0;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(channels_);
  Eigen::RowVectorXd sq_sum = Eigen::RowVectorXd::Zero(channels_);
  for (const auto& m : x) {
    sum += m.colwise().sum();
    sq_sum += m.array().square().colwise().sum().matrix();
    count_ += m.rows();
  }
  const double n = static_cast<double>(count_);
  const Eigen::RowVectorXd mean = sum / n;
  const Eigen::RowVectorXd var =
      (sq_sum.array() / n - mean.array().square()).max(0.0).matrix();
  inv_std_ = (var.array() + eps_).sqrt().inverse().matrix();

  xhat_.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    xhat_[t] = (x[t].rowwise() - mean) * inv_std_.asDiagonal();
    y[t] = (xhat_[t] * gamma_.value.row(0).asDiagonal()).rowwise() + beta_.value.row(0);
  }

  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  running_mean_.row(0) = (1.0 - momentum_) * running_mean_.row(0) + momentum_ * mean;
  running_var_.row(0) = (1.0 - momentum_) * running_var_.row(0) + momentum_ * (var * unbias);
  return y;
}

Seq BatchNorm1d::backward(const Seq& gy) {
  const auto steps = gy.size();
  const double n = static_cast<double>(count_);

  Eigen::RowVectorXd g_sum = Eigen::RowVectorXd::Zero(channels_);
  Eigen::RowVectorXd gx_hat_sum = Eigen::RowVectorXd::Zero(channels_);
  for (std::size_t t = 0; t < steps; ++t) {
    g_sum += gy[t].colwise().sum();
    gx_hat_sum += gy[t].cwiseProduct(xhat_[t]).colwise().sum();
  }
  gamma_.grad.row(0) += gx_hat_sum;
  beta_.grad.row(0) += g_sum;

  // dL/dx = gamma * inv_std / n * (n*gy - sum(gy) - xhat * sum(gy*xhat))
  const Eigen::RowVectorXd scale =
      (gamma_.value.row(0).array() * inv_std_.array()).matrix() / n;
  Seq gx(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::MatrixXd tmp = n * gy[t];
    tmp.rowwise() -= g_sum;
    tmp -= xhat_[t] * gx_hat_sum.asDiagonal();
    gx[t] = tmp * scale.asDiagonal();
  }
  return gx;
}

void BatchNorm1d::collect(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm1d::register_state(const std::string& prefix, StateMap& out) {
  out.emplace_back(prefix + ".gamma", &gamma_.value);
  out.emplace_back(prefix + ".beta", &beta_.value);
  out.emplace_back(prefix + ".running_mean", &running_mean_);
  out.emplace_back(prefix + ".running_var", &running_var_);
}

// ---- ReLU ----

Seq ReLU::forward(const Seq& x) {
  y_.resize(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) y_[t] = x[t].cwiseMax(0.0);
  return y_;
}

Seq ReLU::backward(const Seq& gy) {
  Seq gx(gy.size());
  for (std::size_t t = 0; t < gy.size(); ++t)
    gx[t] = ((y_[t].array() > 0.0).cast<double>() * gy[t].array()).matrix();
  return gx;
}

// ---- MaxPool1d ----

Seq MaxPool1d::forward(const Seq& x) {
  in_len_ = static_cast<Eigen::Index>(x.size());
  batch_ = x.empty() ? 0 : x[0].rows();
  channels_ = x.empty() ? 0 : x[0].cols();
  const Eigen::Index pad_left = (kernel_ - 1) / 2;
  Seq y(x.size());
  argmax_.assign(x.size(), Eigen::MatrixXi());
  for (Eigen::Index t = 0; t < in_len_; ++t) {
    Eigen::MatrixXd best =
        Eigen::MatrixXd::Constant(batch_, channels_, -std::numeric_limits<double>::infinity());
    Eigen::MatrixXi best_src = Eigen::MatrixXi::Zero(batch_, channels_);
    for (Eigen::Index k = 0; k < kernel_; ++k) {
      const Eigen::Index src = t + k - pad_left;
      if (src < 0 || src >= in_len_) continue;
      const auto& m = x[static_cast<std::size_t>(src)];
      for (Eigen::Index r = 0; r < batch_; ++r)
        for (Eigen::Index c = 0; c < channels_; ++c)
          if (m(r, c) > best(r, c)) {
            best(r, c) = m(r, c);
            best_src(r, c) = static_cast<int>(src);
          }
    }
    y[static_cast<std::size_t>(t)] = std::move(best);
    argmax_[static_cast<std::size_t>(t)] = std::move(best_src);
  }
  return y;
}

Seq MaxPool1d::backward(const Seq& gy) {
  Seq gx(static_cast<std::size_t>(in_len_));
  for (auto& g : gx) g = Eigen::MatrixXd::Zero(batch_, channels_);
  for (std::size_t t = 0; t < gy.size(); ++t) {
    for (Eigen::Index r = 0; r < batch_; ++r)
      for (Eigen::Index c = 0; c < channels_; ++c)
        gx[static_cast<std::size_t>(argmax_[t](r, c))](r, c) += gy[t](r, c);
  }
  return gx;
}

// ---- GlobalAvgPool ----

Eigen::MatrixXd GlobalAvgPool::forward(const Seq& x) {
  if (x.empty()) throw std::invalid_argument("empty sequence");
  len_ = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x[0].rows(), x[0].cols());
  for (const auto& m : x) y += m;
  return y / static_cast<double>(len_);
}

Seq GlobalAvgPool::backward(const Eigen::MatrixXd& gy) {
  Seq gx(static_cast<std::size_t>(len_));
  const Eigen::MatrixXd g = gy / static_cast<double>(len_);
  for (auto& m : gx) m = g;
  return gx;
}

// ---- channel concat ----

Seq concat_channels(const std::vector<Seq>& branches) {
  if (branches.empty()) throw std::invalid_argument("no branches");
  const std::size_t steps = branches[0].size();
  Eigen::Index total = 0;
  for (const auto& b : branches) total += b[0].cols();
  Seq y(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    y[t].resize(branches[0][t].rows(), total);
    Eigen::Index off = 0;
    for (const auto& b : branches) {
      y[t].middleCols(off, b[t].cols()) = b[t];
      off += b[t].cols();
    }
  }
  return y;
}

std::vector<Seq> split_channels(const Seq& gy, const std::vector<Eigen::Index>& widths) {
  std::vector<Seq> out(widths.size());
  for (std::size_t b = 0; b < widths.size(); ++b) out[b].resize(gy.size());
  for (std::size_t t = 0; t < gy.size(); ++t) {
    Eigen::Index off = 0;
    for (std::size_t b = 0; b < widths.size(); ++b) {
      out[b][t] = gy[t].middleCols(off, widths[b]);
      off += widths[b];
    }
  }
  return out;
}

}  // namespace tfb::nn
