#pragma once

#include <cstdint>
#include <vector>

#include "padel/graph.hpp"
#include "padel/rng.hpp"
#include "padel/tape.hpp"
#include "padel/tensor.hpp"
#include "padel/vsubgae.hpp"

namespace padel {

struct ExploreConfig {
  std::size_t hop = 1;  // random-walk step count, >= 1
};

// Mean subgraph node count rounded to the nearest integer, at least 1.
std::size_t auto_walk_hop(const DatasetBundle& bundle);

struct SubgraphView {
  std::vector<std::uint32_t> node_ids;  // sorted ascending
  Tensor adjacency;                     // over local indices
};

// Node set visited by a hop-step unbiased random walk from a uniformly random
// start node; dead ends terminate early. Induced adjacency attached.
SubgraphView random_walk_view(const BaseGraph& graph, std::size_t hop,
                              Rng& rng);

// One anchor's exploratory list: position `anchor` holds the record's own
// subgraph, every other position a fresh random walk.
std::vector<SubgraphView> explore_view(
    const BaseGraph& graph, const std::vector<const SubgraphRecord*>& batch,
    std::size_t anchor, const ExploreConfig& cfg, Rng& rng);

// One generatively rewired view per record (frozen autoencoder).
std::vector<SubgraphView> exploit_view(
    const BaseGraph& graph, const VSubGAE& model, const Tensor& p_values,
    const std::vector<const SubgraphRecord*>& batch,
    const DiffusionConfig& cfg, Rng& rng);

// Pooled encodings of one view.
struct ViewEncoding {
  Tape::Var np;  // 1×d_hat
  Tape::Var s;   // 1×d_hat
};

// Cosine similarity of two row vectors; zero-norm inputs score 0.
Tape::Var cosine_similarity(Tape& tape, Tape::Var a, Tape::Var b);

// θ = cos(np_i, np_j) + cos(s_i, s_j) ∈ [-2, 2].
Tape::Var score(Tape& tape, const ViewEncoding& a, const ViewEncoding& b);

// One anchor's term:
//   −log e^{θ(ran_k,aug_k)} / (e^{θ(ran_k,aug_k)}
//        + Σ_{i≠k} e^{θ(ran_k,ran_i)} + Σ_{i≠k} e^{θ(ran_i,aug_k)})
// log-sum-exp stabilized; the denominator has 2K−1 terms.
Tape::Var info_nce_term(Tape& tape, const std::vector<ViewEncoding>& ran,
                        const ViewEncoding& aug_k, std::size_t k);

// Batch loss: mean of per-anchor terms. ran_lists[k] is anchor k's K-view
// exploratory list; augs[k] is record k's exploitable view. K >= 2.
Tape::Var info_nce(Tape& tape,
                   const std::vector<std::vector<ViewEncoding>>& ran_lists,
                   const std::vector<ViewEncoding>& augs);

}  // namespace padel
