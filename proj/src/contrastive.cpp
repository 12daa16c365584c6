#include "padel/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace padel {

std::size_t auto_walk_hop(const DatasetBundle& bundle) {
  if (bundle.subgraphs.empty()) return 1;
  double total = 0.0;
  for (const auto& rec : bundle.subgraphs)
    total += static_cast<double>(rec.node_ids.size());
  const auto hop = static_cast<std::size_t>(
      std::llround(total / static_cast<double>(bundle.subgraphs.size())));
  return std::max<std::size_t>(1, hop);
}

SubgraphView random_walk_view(const BaseGraph& graph, std::size_t hop,
                              Rng& rng) {
  if (graph.num_nodes == 0)
    throw std::invalid_argument("random_walk_view: empty graph");
  if (hop < 1) throw std::invalid_argument("random_walk_view: hop must be >= 1");
  std::set<std::uint32_t> visited;
  auto cur = static_cast<std::uint32_t>(rng.uniform_index(graph.num_nodes));
  visited.insert(cur);
  for (std::size_t step = 0; step < hop; ++step) {
    const auto& nbrs = graph.neighbors(cur);
    if (nbrs.empty()) break;  // dead end
    cur = nbrs[rng.uniform_index(nbrs.size())];
    visited.insert(cur);
  }
  SubgraphView view;
  view.node_ids.assign(visited.begin(), visited.end());
  view.adjacency = induced_adjacency(graph, view.node_ids);
  return view;
}

std::vector<SubgraphView> explore_view(
    const BaseGraph& graph, const std::vector<const SubgraphRecord*>& batch,
    std::size_t anchor, const ExploreConfig& cfg, Rng& rng) {
  if (batch.size() < 2)
    throw std::invalid_argument("explore_view: need at least 2 records");
  if (anchor >= batch.size())
    throw std::invalid_argument("explore_view: anchor out of range");
  std::vector<SubgraphView> views(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i == anchor) {
      views[i].node_ids = batch[i]->node_ids;
      views[i].adjacency = induced_adjacency(graph, views[i].node_ids);
    } else {
      views[i] = random_walk_view(graph, cfg.hop, rng);
    }
  }
  return views;
}

std::vector<SubgraphView> exploit_view(
    const BaseGraph& graph, const VSubGAE& model, const Tensor& p_values,
    const std::vector<const SubgraphRecord*>& batch,
    const DiffusionConfig& cfg, Rng& rng) {
  std::vector<SubgraphView> views(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    AugmentedSubgraph aug =
        augment(graph, model, p_values, *batch[i], cfg, rng);
    views[i].node_ids = std::move(aug.node_ids);
    views[i].adjacency = std::move(aug.adjacency);
  }
  return views;
}

Tape::Var cosine_similarity(Tape& tape, Tape::Var a, Tape::Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  if (av.rows != 1 || bv.rows != 1 || av.cols != bv.cols)
    throw std::invalid_argument("cosine_similarity: need equal-length rows");
  double na = 0.0, nb = 0.0;
  for (double v : av.data) na += v * v;
  for (double v : bv.data) nb += v * v;
  if (na == 0.0 || nb == 0.0) return tape.scalar(0.0);
  Tape::Var dot = tape.sum_all(tape.mul(a, b));
  Tape::Var norm_a = tape.sqrt(tape.sum_all(tape.mul(a, a)));
  Tape::Var norm_b = tape.sqrt(tape.sum_all(tape.mul(b, b)));
  return tape.div(dot, tape.mul(norm_a, norm_b));
}

Tape::Var score(Tape& tape, const ViewEncoding& a, const ViewEncoding& b) {
  return tape.add(cosine_similarity(tape, a.np, b.np),
                  cosine_similarity(tape, a.s, b.s));
}

namespace {

// Stabilized log Σ e^{θ_j}: the max is subtracted as a constant, which leaves
// the gradient (softmax weights) unchanged.
Tape::Var log_sum_exp(Tape& tape, const std::vector<Tape::Var>& terms) {
  double m = tape.value(terms[0]).data[0];
  for (const auto& t : terms) m = std::max(m, tape.value(t).data[0]);
  Tape::Var acc;
  for (const auto& t : terms) {
    Tape::Var e = tape.exp(tape.sub(t, tape.scalar(m)));
    acc = acc.valid() ? tape.add(acc, e) : e;
  }
  return tape.add(tape.log(acc), tape.scalar(m));
}

}  // namespace

Tape::Var info_nce_term(Tape& tape, const std::vector<ViewEncoding>& ran,
                        const ViewEncoding& aug_k, std::size_t k) {
  const std::size_t K = ran.size();
  if (K < 2) throw std::invalid_argument("info_nce_term: K must be >= 2");
  if (k >= K) throw std::invalid_argument("info_nce_term: anchor out of range");

  Tape::Var positive = score(tape, ran[k], aug_k);
  std::vector<Tape::Var> denom_terms;
  denom_terms.reserve(2 * K - 1);
  denom_terms.push_back(positive);
  for (std::size_t i = 0; i < K; ++i)
    if (i != k) denom_terms.push_back(score(tape, ran[k], ran[i]));
  for (std::size_t i = 0; i < K; ++i)
    if (i != k) denom_terms.push_back(score(tape, ran[i], aug_k));

  return tape.sub(log_sum_exp(tape, denom_terms), positive);
}

Tape::Var info_nce(Tape& tape,
                   const std::vector<std::vector<ViewEncoding>>& ran_lists,
                   const std::vector<ViewEncoding>& augs) {
  const std::size_t K = augs.size();
  if (K < 2) throw std::invalid_argument("info_nce: K must be >= 2");
  if (ran_lists.size() != K)
    throw std::invalid_argument("info_nce: ran list count must equal K");
  Tape::Var total;
  for (std::size_t k = 0; k < K; ++k) {
    if (ran_lists[k].size() != K)
      throw std::invalid_argument("info_nce: each ran list must have K views");
    Tape::Var term = info_nce_term(tape, ran_lists[k], augs[k], k);
    total = total.valid() ? tape.add(total, term) : term;
  }
  return tape.scale(total, 1.0 / static_cast<double>(K));
}

}  // namespace padel
