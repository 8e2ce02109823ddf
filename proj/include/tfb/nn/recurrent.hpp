#pragma once

#include "tfb/nn/core.hpp"

#include <optional>

namespace tfb::nn {

/// Single GRU layer, batch-first hidden state, one bias per gate.
/// Gate order in the packed weight matrices: reset, update, candidate.
class GruLayer {
 public:
  GruLayer(Eigen::Index in, Eigen::Index hidden, std::mt19937_64& rng);

  /// xs: T matrices of B x in. Returns T matrices of B x hidden.
  Seq forward(const Seq& xs);
  /// gy: gradients w.r.t. every timestep output. Returns input gradients.
  Seq backward(const Seq& gy);

  void collect(std::vector<Param*>& out);
  void register_state(const std::string& prefix, StateMap& out);

  Eigen::Index hidden() const { return hidden_; }

 private:
  Eigen::Index in_, hidden_;
  Param wx_;  // in x 3h
  Param wh_;  // h x 3h
  Param b_;   // 1 x 3h
  Seq xs_, hs_, r_, z_, n_, ahn_;  // caches (ahn = hidden contribution to candidate)
};

/// Binary connectivity masks for the sparse LSTM variant.
struct MaskSet {
  Eigen::MatrixXd input_hidden;   // in x 4h
  Eigen::MatrixXd hidden_hidden;  // h x 4h
  double p = 1.0;
  std::uint64_t seed = 0;

  double ones_fraction() const {
    return (input_hidden.sum() + hidden_hidden.sum()) /
           static_cast<double>(input_hidden.size() + hidden_hidden.size());
  }
};

/// I.i.d. Bernoulli(p) masks over the packed 4-gate weight matrices.
MaskSet sample_masks(Eigen::Index hidden, Eigen::Index input_dim, double p, std::uint64_t seed);

/// Single LSTM layer, one bias per gate (order: input, forget, cell, output).
/// An optional MaskSet zeroes weight entries for the whole layer lifetime:
/// masked entries start at 0 and their gradients are annihilated.
class LstmLayer {
 public:
  LstmLayer(Eigen::Index in, Eigen::Index hidden, std::mt19937_64& rng,
            std::optional<MaskSet> masks = std::nullopt);

  Seq forward(const Seq& xs);
  Seq backward(const Seq& gy);

  void collect(std::vector<Param*>& out);
  void register_state(const std::string& prefix, StateMap& out);

  Eigen::Index hidden() const { return hidden_; }
  const std::optional<MaskSet>& masks() const { return masks_; }
  /// Trainable scalars, excluding masked-out weight entries.
  long effective_parameter_count() const;

 private:
  Eigen::Index in_, hidden_;
  Param wx_;  // in x 4h
  Param wh_;  // h x 4h
  Param b_;   // 1 x 4h
  std::optional<MaskSet> masks_;
  Seq xs_, hs_, cs_, i_, f_, g_, o_, tanh_c_;
};

}  // namespace tfb::nn
