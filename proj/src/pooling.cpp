#include "padel/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "padel/vsubgae.hpp"

namespace padel {

namespace {

LstmDirection init_direction(std::size_t in, std::size_t hidden, Rng& rng) {
  LstmDirection d;
  d.w_input = Tensor::xavier_uniform(in, 4 * hidden, rng);
  d.w_hidden = Tensor::xavier_uniform(hidden, 4 * hidden, rng);
  d.bias = Tensor(1, 4 * hidden);
  return d;
}

struct DirVars {
  Tape::Var wi, wh, b;
};

struct LayerOutput {
  std::vector<Tape::Var> per_step;  // 1×2H each, in sequence order
  Tape::Var final_fwd, final_bwd;
};

LayerOutput run_bilstm_layer(Tape& tape, const DirVars& fwd,
                             const DirVars& bwd, std::size_t hidden,
                             const std::vector<Tape::Var>& inputs) {
  const std::size_t n = inputs.size();
  // Forward direction, keeping every step's hidden state.
  std::vector<Tape::Var> hf(n), hb(n);
  {
    Tape::Var h = tape.constant(Tensor(1, hidden));
    Tape::Var c = tape.constant(Tensor(1, hidden));
    for (std::size_t t = 0; t < n; ++t) {
      Tape::Var pre = tape.row_broadcast_add(
          tape.add(tape.matmul(inputs[t], fwd.wi), tape.matmul(h, fwd.wh)),
          fwd.b);
      Tape::Var gi = tape.sigmoid(tape.slice_cols(pre, 0, hidden));
      Tape::Var gf = tape.sigmoid(tape.slice_cols(pre, hidden, hidden));
      Tape::Var gc = tape.tanh(tape.slice_cols(pre, 2 * hidden, hidden));
      Tape::Var go = tape.sigmoid(tape.slice_cols(pre, 3 * hidden, hidden));
      c = tape.add(tape.mul(gf, c), tape.mul(gi, gc));
      h = tape.mul(go, tape.tanh(c));
      hf[t] = h;
    }
  }
  {
    Tape::Var h = tape.constant(Tensor(1, hidden));
    Tape::Var c = tape.constant(Tensor(1, hidden));
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t t = n - 1 - step;
      Tape::Var pre = tape.row_broadcast_add(
          tape.add(tape.matmul(inputs[t], bwd.wi), tape.matmul(h, bwd.wh)),
          bwd.b);
      Tape::Var gi = tape.sigmoid(tape.slice_cols(pre, 0, hidden));
      Tape::Var gf = tape.sigmoid(tape.slice_cols(pre, hidden, hidden));
      Tape::Var gc = tape.tanh(tape.slice_cols(pre, 2 * hidden, hidden));
      Tape::Var go = tape.sigmoid(tape.slice_cols(pre, 3 * hidden, hidden));
      c = tape.add(tape.mul(gf, c), tape.mul(gi, gc));
      h = tape.mul(go, tape.tanh(c));
      hb[t] = h;
    }
  }
  LayerOutput out;
  out.per_step.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    out.per_step[t] = tape.concat_cols(hf[t], hb[t]);
  out.final_fwd = hf[n - 1];
  out.final_bwd = hb[0];
  return out;
}

}  // namespace

PoolingParams PoolingParams::init(std::size_t d, std::size_t d_hat,
                                  Rng& rng) {
  if (d_hat % 2 != 0)
    throw std::invalid_argument("PoolingParams: d_hat must be even");
  PoolingParams p;
  p.d = d;
  p.d_hat = d_hat;
  p.gcn_weight = Tensor::xavier_uniform(2 * d, 2 * d, rng);
  p.fc_weight = Tensor::xavier_uniform(2 * d, d_hat, rng);
  const std::size_t h = d_hat / 2;
  p.layer1.fwd = init_direction(d, h, rng);
  p.layer1.bwd = init_direction(d, h, rng);
  p.layer2.fwd = init_direction(d_hat, h, rng);
  p.layer2.bwd = init_direction(d_hat, h, rng);
  return p;
}

std::vector<NamedParam> PoolingParams::params() {
  std::vector<NamedParam> out = {
      {"pooling.gcn_weight", &gcn_weight},
      {"pooling.fc_weight", &fc_weight},
  };
  auto add_dir = [&out](const char* prefix, LstmDirection& d) {
    out.push_back({std::string(prefix) + ".w_input", &d.w_input});
    out.push_back({std::string(prefix) + ".w_hidden", &d.w_hidden});
    out.push_back({std::string(prefix) + ".bias", &d.bias});
  };
  add_dir("pooling.lstm1.fwd", layer1.fwd);
  add_dir("pooling.lstm1.bwd", layer1.bwd);
  add_dir("pooling.lstm2.fwd", layer2.fwd);
  add_dir("pooling.lstm2.bwd", layer2.bwd);
  return out;
}

ClassifierHead ClassifierHead::init(std::size_t d_hat,
                                    std::size_t num_classes, bool multi_label,
                                    Rng& rng) {
  if (multi_label ? num_classes < 1 : num_classes < 2)
    throw std::invalid_argument("ClassifierHead: class count too small");
  ClassifierHead h;
  h.weight = Tensor::xavier_uniform(d_hat, num_classes, rng);
  h.num_classes = num_classes;
  h.multi_label = multi_label;
  return h;
}

std::vector<NamedParam> ClassifierHead::params() {
  return {{"head.weight", &weight}};
}

PoolVars watch(Tape& tape, const PoolingParams& p, bool trainable) {
  PoolVars v;
  v.hidden = p.d_hat / 2;
  v.gcn_weight = tape.leaf(p.gcn_weight, trainable);
  v.fc_weight = tape.leaf(p.fc_weight, trainable);
  v.l1f_wi = tape.leaf(p.layer1.fwd.w_input, trainable);
  v.l1f_wh = tape.leaf(p.layer1.fwd.w_hidden, trainable);
  v.l1f_b = tape.leaf(p.layer1.fwd.bias, trainable);
  v.l1b_wi = tape.leaf(p.layer1.bwd.w_input, trainable);
  v.l1b_wh = tape.leaf(p.layer1.bwd.w_hidden, trainable);
  v.l1b_b = tape.leaf(p.layer1.bwd.bias, trainable);
  v.l2f_wi = tape.leaf(p.layer2.fwd.w_input, trainable);
  v.l2f_wh = tape.leaf(p.layer2.fwd.w_hidden, trainable);
  v.l2f_b = tape.leaf(p.layer2.fwd.bias, trainable);
  v.l2b_wi = tape.leaf(p.layer2.bwd.w_input, trainable);
  v.l2b_wh = tape.leaf(p.layer2.bwd.w_hidden, trainable);
  v.l2b_b = tape.leaf(p.layer2.bwd.bias, trainable);
  return v;
}

Tape::Var encode_np(Tape& tape, const PoolVars& vars, Tape::Var x_full,
                    Tape::Var p_full,
                    const std::vector<std::uint32_t>& node_ids,
                    const Tensor& adj01) {
  if (node_ids.empty())
    throw std::invalid_argument("encode_np: empty node set");
  std::vector<std::size_t> idx(node_ids.begin(), node_ids.end());
  Tape::Var features = tape.concat_cols(tape.slice_rows(x_full, idx),
                                        tape.slice_rows(p_full, idx));
  Tape::Var a = tape.constant(normalize_adjacency(adj01));
  Tape::Var conv = tape.matmul(tape.matmul(a, features), vars.gcn_weight);
  return tape.mean_rows(tape.relu(tape.matmul(conv, vars.fc_weight)));
}

Tape::Var encode_s(Tape& tape, const PoolVars& vars, Tape::Var p_full,
                   const std::vector<std::uint32_t>& node_ids) {
  if (node_ids.empty())
    throw std::invalid_argument("encode_s: empty node sequence");
  std::vector<std::uint32_t> ordered = node_ids;
  std::sort(ordered.begin(), ordered.end());

  std::vector<Tape::Var> inputs(ordered.size());
  for (std::size_t t = 0; t < ordered.size(); ++t)
    inputs[t] = tape.slice_rows(p_full, {ordered[t]});

  LayerOutput l1 = run_bilstm_layer(
      tape, {vars.l1f_wi, vars.l1f_wh, vars.l1f_b},
      {vars.l1b_wi, vars.l1b_wh, vars.l1b_b}, vars.hidden, inputs);
  LayerOutput l2 = run_bilstm_layer(
      tape, {vars.l2f_wi, vars.l2f_wh, vars.l2f_b},
      {vars.l2b_wi, vars.l2b_wh, vars.l2b_b}, vars.hidden, l1.per_step);
  return tape.relu(tape.concat_cols(l2.final_fwd, l2.final_bwd));
}

Tape::Var classify(Tape& tape, Tape::Var e_np, Tape::Var e_s,
                   Tape::Var head_weight) {
  return tape.matmul(tape.add(e_np, e_s), head_weight);
}

Tape::Var ce_loss(Tape& tape, Tape::Var logits, const Tensor& onehot) {
  const Tensor& lv = tape.value(logits);
  if (lv.rows != 1 || !lv.same_shape(onehot))
    throw std::invalid_argument("ce_loss: logits/onehot shape mismatch");
  std::size_t ones = 0;
  for (double v : onehot.data) {
    if (v == 1.0)
      ++ones;
    else if (v != 0.0)
      throw std::invalid_argument("ce_loss: target is not one-hot");
  }
  if (ones != 1) throw std::invalid_argument("ce_loss: target is not one-hot");

  const double m = *std::max_element(lv.data.begin(), lv.data.end());
  Tape::Var shifted =
      tape.sub(logits, tape.constant(Tensor(1, lv.cols, m)));
  Tape::Var lse =
      tape.add(tape.log(tape.sum_all(tape.exp(shifted))), tape.scalar(m));
  Tape::Var picked = tape.sum_all(tape.mul(logits, tape.constant(onehot)));
  return tape.sub(lse, picked);
}

Tape::Var bce_loss(Tape& tape, Tape::Var logits, const Tensor& multihot) {
  const Tensor& lv = tape.value(logits);
  if (lv.rows != 1 || !lv.same_shape(multihot))
    throw std::invalid_argument("bce_loss: logits/target shape mismatch");
  for (double v : multihot.data)
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument("bce_loss: target entries must be 0 or 1");
  // Σ softplus(x) − x·y  ==  −Σ [y·log Sig(x) + (1−y)·log(1−Sig(x))]
  Tape::Var sp = tape.sum_all(tape.softplus(logits));
  Tape::Var xy = tape.sum_all(tape.mul(logits, tape.constant(multihot)));
  return tape.sub(sp, xy);
}

namespace {

std::vector<char> predict_multihot(const Tensor& logits, double threshold) {
  // Sig(x) >= thr  <=>  x >= logit(thr)
  const double cut = std::log(threshold / (1.0 - threshold));
  std::vector<char> out(logits.cols, 0);
  for (std::size_t i = 0; i < logits.cols; ++i)
    out[i] = logits.data[i] >= cut ? 1 : 0;
  return out;
}

std::size_t argmax(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.cols; ++i)
    if (logits.data[i] > logits.data[best]) best = i;
  return best;
}

}  // namespace

double micro_f1(const std::vector<Tensor>& logits,
                const std::vector<std::vector<std::uint32_t>>& truths,
                bool multi_label, std::size_t num_classes, double threshold) {
  if (logits.size() != truths.size())
    throw std::invalid_argument("micro_f1: prediction/truth length mismatch");
  if (!multi_label) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.size(); ++i)
      if (argmax(logits[i]) == truths[i].at(0)) ++correct;
    return logits.empty() ? 0.0
                          : static_cast<double>(correct) /
                                static_cast<double>(logits.size());
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    std::vector<char> truth(num_classes, 0);
    for (std::uint32_t c : truths[i]) truth.at(c) = 1;
    std::vector<char> pred = predict_multihot(logits[i], threshold);
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (pred[c] && truth[c]) ++tp;
      else if (pred[c] && !truth[c]) ++fp;
      else if (!pred[c] && truth[c]) ++fn;
    }
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0
                    : 2.0 * static_cast<double>(tp) /
                          static_cast<double>(denom);
}

PerClassReport per_class_report(
    const std::vector<Tensor>& logits,
    const std::vector<std::vector<std::uint32_t>>& truths, bool multi_label,
    std::size_t num_classes, double threshold) {
  PerClassReport rep;
  rep.tp.assign(num_classes, 0);
  rep.fp.assign(num_classes, 0);
  rep.fn.assign(num_classes, 0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    std::vector<char> truth(num_classes, 0);
    for (std::uint32_t c : truths[i]) truth.at(c) = 1;
    std::vector<char> pred(num_classes, 0);
    if (multi_label) {
      pred = predict_multihot(logits[i], threshold);
    } else {
      pred[argmax(logits[i])] = 1;
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (pred[c] && truth[c]) ++rep.tp[c];
      else if (pred[c] && !truth[c]) ++rep.fp[c];
      else if (!pred[c] && truth[c]) ++rep.fn[c];
    }
  }
  rep.f1.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t denom = 2 * rep.tp[c] + rep.fp[c] + rep.fn[c];
    rep.f1[c] = denom == 0 ? 1.0
                           : 2.0 * static_cast<double>(rep.tp[c]) /
                                 static_cast<double>(denom);
  }
  return rep;
}

}  // namespace padel
