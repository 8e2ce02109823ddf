#include "tfb/nn/recurrent.hpp"

#include <cmath>

namespace tfb::nn {

namespace {

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return ((-x.array()).exp() + 1.0).inverse().matrix();
}

}  // namespace

// ---- GRU ----

GruLayer::GruLayer(Eigen::Index in, Eigen::Index hidden, std::mt19937_64& rng)
    : in_(in), hidden_(hidden), wx_("wx", in, 3 * hidden), wh_("wh", hidden, 3 * hidden),
      b_("b", 1, 3 * hidden) {
  init_uniform_fan_in(wx_.value, hidden, rng);
  init_uniform_fan_in(wh_.value, hidden, rng);
  init_uniform_fan_in(b_.value, hidden, rng);
}

Seq GruLayer::forward(const Seq& xs) {
  const std::size_t steps = xs.size();
  const Eigen::Index batch = xs.empty() ? 0 : xs[0].rows();
  xs_ = xs;
  hs_.assign(steps, {});
  r_.assign(steps, {});
  z_.assign(steps, {});
  n_.assign(steps, {});
  ahn_.assign(steps, {});

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, hidden_);
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::MatrixXd ax = (xs[t] * wx_.value).rowwise() + b_.value.row(0);
    const Eigen::MatrixXd ah = h * wh_.value;
    r_[t] = sigmoid(ax.leftCols(hidden_) + ah.leftCols(hidden_));
    z_[t] = sigmoid(ax.middleCols(hidden_, hidden_) + ah.middleCols(hidden_, hidden_));
    ahn_[t] = ah.rightCols(hidden_);
    n_[t] = (ax.rightCols(hidden_) + r_[t].cwiseProduct(ahn_[t])).array().tanh().matrix();
    h = ((1.0 - z_[t].array()) * n_[t].array() + z_[t].array() * h.array()).matrix();
    hs_[t] = h;
  }
  return hs_;
}

Seq GruLayer::backward(const Seq& gy) {
  const std::size_t steps = gy.size();
  const Eigen::Index batch = gy.empty() ? 0 : gy[0].rows();
  Seq gx(steps);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(batch, hidden_);
  Eigen::MatrixXd da_x(batch, 3 * hidden_), da_h(batch, 3 * hidden_);

  for (std::size_t t = steps; t-- > 0;) {
    const Eigen::MatrixXd h_prev =
        t == 0 ? Eigen::MatrixXd::Zero(batch, hidden_) : hs_[t - 1];
    const Eigen::MatrixXd dh = gy[t] + dh_next;

    const auto& r = r_[t];
    const auto& z = z_[t];
    const auto& n = n_[t];
    const Eigen::MatrixXd dz =
        (dh.array() * (h_prev.array() - n.array()) * z.array() * (1.0 - z.array())).matrix();
    const Eigen::MatrixXd dn =
        (dh.array() * (1.0 - z.array()) * (1.0 - n.array().square())).matrix();
    const Eigen::MatrixXd dr =
        (dn.array() * ahn_[t].array() * r.array() * (1.0 - r.array())).matrix();

    da_x.leftCols(hidden_) = dr;
    da_x.middleCols(hidden_, hidden_) = dz;
    da_x.rightCols(hidden_) = dn;
    da_h.leftCols(hidden_) = dr;
    da_h.middleCols(hidden_, hidden_) = dz;
    da_h.rightCols(hidden_) = dn.cwiseProduct(r);

    wx_.grad.noalias() += xs_[t].transpose() * da_x;
    wh_.grad.noalias() += h_prev.transpose() * da_h;
    b_.grad.row(0) += da_x.colwise().sum();

    gx[t] = da_x * wx_.value.transpose();
    dh_next = dh.cwiseProduct(z) + da_h * wh_.value.transpose();
  }
  return gx;
}

void GruLayer::collect(std::vector<Param*>& out) {
  out.push_back(&wx_);
  out.push_back(&wh_);
  out.push_back(&b_);
}

void GruLayer::register_state(const std::string& prefix, StateMap& out) {
  out.emplace_back(prefix + ".wx", &wx_.value);
  out.emplace_back(prefix + ".wh", &wh_.value);
  out.emplace_back(prefix + ".b", &b_.value);
}

// ---- masks ----

MaskSet sample_masks(Eigen::Index hidden, Eigen::Index input_dim, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("connectivity p must be in (0,1]");
  MaskSet masks;
  masks.p = p;
  masks.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unit(rng) < p ? 1.0 : 0.0;
    return m;
  };
  masks.input_hidden = p == 1.0 ? Eigen::MatrixXd::Ones(input_dim, 4 * hidden).eval()
                                : draw(input_dim, 4 * hidden);
  masks.hidden_hidden = p == 1.0 ? Eigen::MatrixXd::Ones(hidden, 4 * hidden).eval()
                                 : draw(hidden, 4 * hidden);
  return masks;
}

// ---- LSTM ----

LstmLayer::LstmLayer(Eigen::Index in, Eigen::Index hidden, std::mt19937_64& rng,
                     std::optional<MaskSet> masks)
    : in_(in), hidden_(hidden), wx_("wx", in, 4 * hidden), wh_("wh", hidden, 4 * hidden),
      b_("b", 1, 4 * hidden), masks_(std::move(masks)) {
  init_uniform_fan_in(wx_.value, hidden, rng);
  init_uniform_fan_in(wh_.value, hidden, rng);
  init_uniform_fan_in(b_.value, hidden, rng);
  if (masks_) {
    wx_.value = wx_.value.cwiseProduct(masks_->input_hidden);
    wh_.value = wh_.value.cwiseProduct(masks_->hidden_hidden);
  }
}

Seq LstmLayer::forward(const Seq& xs) {
  const std::size_t steps = xs.size();
  const Eigen::Index batch = xs.empty() ? 0 : xs[0].rows();
  xs_ = xs;
  hs_.assign(steps, {});
  cs_.assign(steps, {});
  i_.assign(steps, {});
  f_.assign(steps, {});
  g_.assign(steps, {});
  o_.assign(steps, {});
  tanh_c_.assign(steps, {});

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, hidden_);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(batch, hidden_);
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::MatrixXd a =
        ((xs[t] * wx_.value + h * wh_.value).rowwise() + b_.value.row(0));
    i_[t] = sigmoid(a.leftCols(hidden_));
    f_[t] = sigmoid(a.middleCols(hidden_, hidden_));
    g_[t] = a.middleCols(2 * hidden_, hidden_).array().tanh().matrix();
    o_[t] = sigmoid(a.rightCols(hidden_));
    c = f_[t].cwiseProduct(c) + i_[t].cwiseProduct(g_[t]);
    tanh_c_[t] = c.array().tanh().matrix();
    h = o_[t].cwiseProduct(tanh_c_[t]);
    cs_[t] = c;
    hs_[t] = h;
  }
  return hs_;
}

Seq LstmLayer::backward(const Seq& gy) {
  const std::size_t steps = gy.size();
  const Eigen::Index batch = gy.empty() ? 0 : gy[0].rows();
  Seq gx(steps);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(batch, hidden_);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(batch, hidden_);
  Eigen::MatrixXd da(batch, 4 * hidden_);

  for (std::size_t t = steps; t-- > 0;) {
    const Eigen::MatrixXd h_prev =
        t == 0 ? Eigen::MatrixXd::Zero(batch, hidden_) : hs_[t - 1];
    const Eigen::MatrixXd c_prev =
        t == 0 ? Eigen::MatrixXd::Zero(batch, hidden_) : cs_[t - 1];
    const Eigen::MatrixXd dh = gy[t] + dh_next;

    const auto& i = i_[t];
    const auto& f = f_[t];
    const auto& g = g_[t];
    const auto& o = o_[t];
    const auto& tc = tanh_c_[t];

    const Eigen::MatrixXd do_ =
        (dh.array() * tc.array() * o.array() * (1.0 - o.array())).matrix();
    const Eigen::MatrixXd dc =
        dc_next + (dh.array() * o.array() * (1.0 - tc.array().square())).matrix();
    const Eigen::MatrixXd di =
        (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    const Eigen::MatrixXd df =
        (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    const Eigen::MatrixXd dg = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();

    da.leftCols(hidden_) = di;
    da.middleCols(hidden_, hidden_) = df;
    da.middleCols(2 * hidden_, hidden_) = dg;
    da.rightCols(hidden_) = do_;

    wx_.grad.noalias() += xs_[t].transpose() * da;
    wh_.grad.noalias() += h_prev.transpose() * da;
    b_.grad.row(0) += da.colwise().sum();

    gx[t] = da * wx_.value.transpose();
    dh_next = da * wh_.value.transpose();
    dc_next = dc.cwiseProduct(f);
  }

  // Gradients at masked positions are annihilated; the optimizer never moves
  // a masked weight off zero.
  if (masks_) {
    wx_.grad = wx_.grad.cwiseProduct(masks_->input_hidden);
    wh_.grad = wh_.grad.cwiseProduct(masks_->hidden_hidden);
  }
  return gx;
}

void LstmLayer::collect(std::vector<Param*>& out) {
  out.push_back(&wx_);
  out.push_back(&wh_);
  out.push_back(&b_);
}

void LstmLayer::register_state(const std::string& prefix, StateMap& out) {
  out.emplace_back(prefix + ".wx", &wx_.value);
  out.emplace_back(prefix + ".wh", &wh_.value);
  out.emplace_back(prefix + ".b", &b_.value);
  if (masks_) {
    out.emplace_back(prefix + ".mask_ih", &masks_->input_hidden);
    out.emplace_back(prefix + ".mask_hh", &masks_->hidden_hidden);
  }
}

long LstmLayer::effective_parameter_count() const {
  if (!masks_) return static_cast<long>(wx_.value.size() + wh_.value.size() + b_.value.size());
  return static_cast<long>(masks_->input_hidden.sum() + masks_->hidden_hidden.sum() +
                           static_cast<double>(b_.value.size()));
}

}  // namespace tfb::nn
