#pragma once

#include <cstdint>
#include <vector>

#include "padel/graph.hpp"
#include "padel/rng.hpp"
#include "padel/tape.hpp"
#include "padel/tensor.hpp"

namespace padel {

// Variational subgraph autoencoder: two graph-conv layers over concatenated
// node features and position encodings, Gaussian latent per node, inner
// product decoder.
struct VSubGAE {
  std::size_t feature_dim = 0;  // d; latent width is 2d
  Tensor node_embeddings;       // |V|×d, learnable
  Tensor shared_weight;         // 2d×2d, first conv layer
  Tensor mean_head;             // 2d×2d
  Tensor logsig_head;           // 2d×2d

  static VSubGAE init(std::size_t num_nodes, std::size_t d, Rng& rng);
  std::vector<NamedParam> params();
};

// Symmetric degree-normalized adjacency with self-loops added first:
// D^{-1/2}(A+I)D^{-1/2}. Rows of isolated nodes become unit vectors.
// Input must be a symmetric 0/1 matrix.
Tensor normalize_adjacency(const Tensor& adj01);

struct DiffusionConfig {
  double p_diff = 0.5;
  std::size_t max_nodes = 128;
};

struct DiffusedSubgraph {
  std::vector<std::uint32_t> node_ids;  // superset of the record's nodes
  Tensor adjacency;                     // induced, over local indices
};

// Random 1-hop diffusion: one pass over the original nodes; each adds one
// uniformly chosen base-graph neighbor with probability p_diff. Added nodes
// are admitted lowest-id-first up to the cap; original nodes always stay.
DiffusedSubgraph diffuse_subgraph(const BaseGraph& graph,
                                  const SubgraphRecord& record,
                                  const DiffusionConfig& cfg, Rng& rng);

// Encoder leaves registered once per tape.
struct VsVars {
  Tape::Var x;        // |V|×d
  Tape::Var shared;   // 2d×2d
  Tape::Var mean_w;   // 2d×2d
  Tape::Var logsig_w; // 2d×2d
};
VsVars watch(Tape& tape, const VSubGAE& model, bool trainable);

struct LatentSample {
  Tape::Var mean;       // n×2d
  Tape::Var log_sigma;  // n×2d, clamped to [-10, 10]
  Tape::Var z;          // mean + exp(log_sigma) ⊙ epsilon
  Tensor epsilon;       // the noise draw; replaying it reproduces z exactly
};

Tensor sample_epsilon(std::size_t rows, std::size_t cols, Rng& rng);

// mean/log_sigma heads share the first conv layer:
//   H = Ã·ReLU(Ã·[X_g, P_g]·W_shared), mean = H·W_mean, log_sigma = H·W_logsig
// where rows are gathered by node_ids and Ã is the normalized adjacency.
LatentSample encode(Tape& tape, const VsVars& vars, Tape::Var p_full,
                    const std::vector<std::uint32_t>& node_ids,
                    const Tensor& norm_adj, const Tensor& epsilon);

// Edge probabilities Sig(z·zᵀ); symmetric, entries in (0,1).
Tape::Var decode(Tape& tape, Tape::Var z);

// Negated ELBO: mean binary cross-entropy over all adjacency entries plus
// beta * KL(N(mean, sigma²) ‖ N(0,I)) averaged over nodes.
Tape::Var elbo_loss(Tape& tape, Tape::Var probs, const Tensor& target_adj,
                    Tape::Var mean, Tape::Var log_sigma, double beta);

struct AugmentedSubgraph {
  std::vector<std::uint32_t> node_ids;  // the diffused node set
  Tensor adjacency;                     // sampled 0/1, symmetric, zero diag
};

// Frozen-weights generative rewiring: diffuse, encode with fresh noise,
// decode, then flip one coin per upper-triangular entry. No gradients flow.
AugmentedSubgraph augment(const BaseGraph& graph, const VSubGAE& model,
                          const Tensor& p_values, const SubgraphRecord& record,
                          const DiffusionConfig& cfg, Rng& rng);

}  // namespace padel
