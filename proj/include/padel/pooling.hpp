#pragma once

#include <cstdint>
#include <vector>

#include "padel/graph.hpp"
#include "padel/rng.hpp"
#include "padel/tape.hpp"
#include "padel/tensor.hpp"

namespace padel {

// One LSTM direction: gate order [input, forget, cell, output] packed along
// the 4H axis. Biases start at zero.
struct LstmDirection {
  Tensor w_input;   // in×4H
  Tensor w_hidden;  // H×4H
  Tensor bias;      // 1×4H
};

struct BiLstmLayer {
  LstmDirection fwd, bwd;
};

// Structure-aware pooling parameters: one graph-conv + fully-connected branch
// producing the neighbor-position encoding, and a two-layer bidirectional
// recurrent branch over position rows producing the structure encoding.
struct PoolingParams {
  std::size_t d = 0;      // per-node feature dim (X and P each)
  std::size_t d_hat = 0;  // output dim of both branches; must be even
  Tensor gcn_weight;      // 2d×2d
  Tensor fc_weight;       // 2d×d_hat
  BiLstmLayer layer1;     // input d,     hidden d_hat/2 per direction
  BiLstmLayer layer2;     // input d_hat, hidden d_hat/2 per direction

  static PoolingParams init(std::size_t d, std::size_t d_hat, Rng& rng);
  std::vector<NamedParam> params();
};

struct ClassifierHead {
  Tensor weight;  // d_hat×l
  std::size_t num_classes = 0;
  bool multi_label = false;

  static ClassifierHead init(std::size_t d_hat, std::size_t num_classes,
                             bool multi_label, Rng& rng);
  std::vector<NamedParam> params();
};

struct PoolVars {
  Tape::Var gcn_weight, fc_weight;
  Tape::Var l1f_wi, l1f_wh, l1f_b, l1b_wi, l1b_wh, l1b_b;
  Tape::Var l2f_wi, l2f_wh, l2f_b, l2b_wi, l2b_wh, l2b_b;
  std::size_t hidden = 0;  // d_hat/2
};
PoolVars watch(Tape& tape, const PoolingParams& params, bool trainable);

// Mean over nodes of ReLU(Ã·[X_g,P_g]·W_gcn·W_fc); permutation invariant.
// adj01 is the view's raw adjacency; self-loop normalization happens inside.
Tape::Var encode_np(Tape& tape, const PoolVars& vars, Tape::Var x_full,
                    Tape::Var p_full, const std::vector<std::uint32_t>& node_ids,
                    const Tensor& adj01);

// ReLU of the concatenated final forward/backward hidden states of the second
// recurrent layer, reading position rows in ascending node-id order.
Tape::Var encode_s(Tape& tape, const PoolVars& vars, Tape::Var p_full,
                   const std::vector<std::uint32_t>& node_ids);

// Logits (e_np + e_s)·W_head, 1×l. No bias.
Tape::Var classify(Tape& tape, Tape::Var e_np, Tape::Var e_s,
                   Tape::Var head_weight);

// −Σ Y_i·log softmax(logits)_i, log-sum-exp stabilized. onehot must contain
// exactly one 1.
Tape::Var ce_loss(Tape& tape, Tape::Var logits, const Tensor& onehot);

// Summed stable binary cross-entropy with logits over label positions.
// multihot entries must be 0 or 1.
Tape::Var bce_loss(Tape& tape, Tape::Var logits, const Tensor& multihot);

// Single-label: argmax accuracy. Multi-label: predict class i iff
// Sig(logit_i) >= threshold, micro-averaged over all (sample, label) pairs.
// Defined as 1.0 when there are no positives and none are predicted.
double micro_f1(const std::vector<Tensor>& logits,
                const std::vector<std::vector<std::uint32_t>>& truths,
                bool multi_label, std::size_t num_classes,
                double threshold = 0.5);

struct PerClassReport {
  std::vector<std::size_t> tp, fp, fn;
  std::vector<double> f1;  // per class
};
PerClassReport per_class_report(
    const std::vector<Tensor>& logits,
    const std::vector<std::vector<std::uint32_t>>& truths, bool multi_label,
    std::size_t num_classes, double threshold = 0.5);

}  // namespace padel
