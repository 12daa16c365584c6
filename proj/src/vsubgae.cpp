#include "padel/vsubgae.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace padel {

VSubGAE VSubGAE::init(std::size_t num_nodes, std::size_t d, Rng& rng) {
  VSubGAE m;
  m.feature_dim = d;
  // Small-scale embeddings keep early decoder logits near zero.
  m.node_embeddings = Tensor::gaussian(num_nodes, d, rng, 0.1);
  m.shared_weight = Tensor::xavier_uniform(2 * d, 2 * d, rng);
  m.mean_head = Tensor::xavier_uniform(2 * d, 2 * d, rng);
  m.logsig_head = Tensor::xavier_uniform(2 * d, 2 * d, rng);
  return m;
}

std::vector<NamedParam> VSubGAE::params() {
  return {{"vsubgae.node_embeddings", &node_embeddings},
          {"vsubgae.shared_weight", &shared_weight},
          {"vsubgae.mean_head", &mean_head},
          {"vsubgae.logsig_head", &logsig_head}};
}

Tensor normalize_adjacency(const Tensor& adj01) {
  if (adj01.rows != adj01.cols)
    throw std::invalid_argument("normalize_adjacency: matrix not square");
  const std::size_t n = adj01.rows;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (adj01.at(i, j) != adj01.at(j, i))
        throw std::invalid_argument("normalize_adjacency: asymmetric input");

  Tensor with_loops = adj01;
  for (std::size_t i = 0; i < n; ++i) with_loops.at(i, i) = 1.0;

  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += with_loops.at(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  Tensor norm(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      norm.at(i, j) = inv_sqrt_deg[i] * with_loops.at(i, j) * inv_sqrt_deg[j];
  return norm;
}

DiffusedSubgraph diffuse_subgraph(const BaseGraph& graph,
                                  const SubgraphRecord& record,
                                  const DiffusionConfig& cfg, Rng& rng) {
  if (!(cfg.p_diff >= 0.0 && cfg.p_diff <= 1.0))
    throw std::invalid_argument("diffuse_subgraph: p_diff must be in [0,1]");
  std::set<std::uint32_t> nodes(record.node_ids.begin(),
                                record.node_ids.end());
  std::set<std::uint32_t> added;
  for (std::uint32_t v : record.node_ids) {
    if (graph.degree(v) == 0) continue;
    if (cfg.p_diff > 0.0 && rng.bernoulli(cfg.p_diff)) {
      const auto& nbrs = graph.neighbors(v);
      const std::uint32_t pick = nbrs[rng.uniform_index(nbrs.size())];
      if (!nodes.count(pick)) added.insert(pick);
    }
  }
  DiffusedSubgraph out;
  out.node_ids.assign(nodes.begin(), nodes.end());
  for (std::uint32_t v : added) {
    if (out.node_ids.size() >= cfg.max_nodes) break;
    out.node_ids.push_back(v);
  }
  std::sort(out.node_ids.begin(), out.node_ids.end());
  out.adjacency = induced_adjacency(graph, out.node_ids);
  return out;
}

VsVars watch(Tape& tape, const VSubGAE& model, bool trainable) {
  VsVars v;
  v.x = tape.leaf(model.node_embeddings, trainable);
  v.shared = tape.leaf(model.shared_weight, trainable);
  v.mean_w = tape.leaf(model.mean_head, trainable);
  v.logsig_w = tape.leaf(model.logsig_head, trainable);
  return v;
}

Tensor sample_epsilon(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor eps(rows, cols);
  for (double& v : eps.data) v = rng.normal();
  return eps;
}

LatentSample encode(Tape& tape, const VsVars& vars, Tape::Var p_full,
                    const std::vector<std::uint32_t>& node_ids,
                    const Tensor& norm_adj, const Tensor& epsilon) {
  const std::size_t n = node_ids.size();
  if (norm_adj.rows != n || norm_adj.cols != n)
    throw std::invalid_argument("encode: adjacency size mismatch");
  std::vector<std::size_t> idx(node_ids.begin(), node_ids.end());
  Tape::Var features = tape.concat_cols(tape.slice_rows(vars.x, idx),
                                        tape.slice_rows(p_full, idx));
  Tape::Var a = tape.constant(norm_adj);
  Tape::Var hidden = tape.matmul(
      a, tape.relu(tape.matmul(tape.matmul(a, features), vars.shared)));

  LatentSample s;
  s.mean = tape.matmul(hidden, vars.mean_w);
  s.log_sigma = tape.clamp(tape.matmul(hidden, vars.logsig_w), -10.0, 10.0);
  if (epsilon.rows != n || epsilon.cols != tape.value(s.mean).cols)
    throw std::invalid_argument("encode: epsilon shape mismatch");
  s.epsilon = epsilon;
  s.z = tape.add(s.mean,
                 tape.mul(tape.exp(s.log_sigma), tape.constant(epsilon)));
  return s;
}

Tape::Var decode(Tape& tape, Tape::Var z) {
  return tape.sigmoid(tape.matmul(z, tape.transpose(z)));
}

Tape::Var elbo_loss(Tape& tape, Tape::Var probs, const Tensor& target_adj,
                    Tape::Var mean, Tape::Var log_sigma, double beta) {
  if (beta < 0.0) throw std::invalid_argument("elbo_loss: beta must be >= 0");
  if (!tape.value(probs).same_shape(target_adj))
    throw std::invalid_argument("elbo_loss: target shape mismatch");
  const std::size_t n = tape.value(probs).rows;
  const std::size_t node_count = tape.value(mean).rows;
  const std::size_t latent_cols = tape.value(mean).cols;

  // Mean BCE over all entries. Probabilities are clamped away from {0,1};
  // the clamp only binds in deep sigmoid saturation.
  Tape::Var target = tape.constant(target_adj);
  Tensor ones_m(n, n, 1.0);
  Tape::Var one = tape.constant(ones_m);
  Tape::Var p = tape.clamp(probs, 1e-12, 1.0 - 1e-12);
  Tape::Var pos = tape.mul(target, tape.log(p));
  Tape::Var neg = tape.mul(tape.sub(one, target), tape.log(tape.sub(one, p)));
  Tape::Var bce = tape.scale(tape.sum_all(tape.add(pos, neg)),
                             -1.0 / static_cast<double>(n * n));

  // Closed-form KL to the unit Gaussian, averaged over nodes:
  // -1/2 Σ (1 + 2L - mean² - e^{2L}).
  Tape::Var ones_kl = tape.constant(Tensor(node_count, latent_cols, 1.0));
  Tape::Var two_l = tape.scale(log_sigma, 2.0);
  Tape::Var inner = tape.sub(tape.sub(tape.add(ones_kl, two_l),
                                      tape.mul(mean, mean)),
                             tape.exp(two_l));
  Tape::Var kl = tape.scale(tape.sum_all(inner),
                            -0.5 / static_cast<double>(node_count));

  return tape.add(bce, tape.scale(kl, beta));
}

AugmentedSubgraph augment(const BaseGraph& graph, const VSubGAE& model,
                          const Tensor& p_values, const SubgraphRecord& record,
                          const DiffusionConfig& cfg, Rng& rng) {
  DiffusedSubgraph diffused = diffuse_subgraph(graph, record, cfg, rng);
  const std::size_t n = diffused.node_ids.size();

  Tape tape;  // local, detached: frozen weights, no gradients
  VsVars vars = watch(tape, model, false);
  Tape::Var p_full = tape.constant(p_values);
  Tensor eps = sample_epsilon(n, 2 * model.feature_dim, rng);
  LatentSample latent = encode(tape, vars, p_full, diffused.node_ids,
                               normalize_adjacency(diffused.adjacency), eps);
  const Tensor prob = tape.value(decode(tape, latent.z));

  AugmentedSubgraph out;
  out.node_ids = diffused.node_ids;
  out.adjacency = Tensor(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(prob.at(i, j)))
        out.adjacency.at(i, j) = out.adjacency.at(j, i) = 1.0;
  return out;
}

}  // namespace padel
