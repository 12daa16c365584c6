#pragma once

#include <cstdint>
#include <filesystem>

#include "padel/graph.hpp"

namespace padel {

struct SbmParams {
  std::size_t num_nodes = 100;
  std::size_t num_blocks = 2;
  double p_in = 0.3;
  double p_out = 0.01;
  std::size_t num_subgraphs = 30;
  std::size_t min_size = 4;
  std::size_t max_size = 10;
  // Probability that each sampled subgraph node comes from its home block.
  double within_prob = 0.9;
  double train_frac = 0.8;
  double val_frac = 0.1;
};

struct BarbellParams {
  std::size_t clique_size = 5;
  std::size_t bridge_len = 5;
};

// Two-block (or more) planted-partition graph. Subgraph labels are the
// majority block of the subgraph's nodes; splits are assigned randomly in
// train/val/test proportions.
void make_sbm(const SbmParams& params, std::uint64_t seed,
              const std::filesystem::path& edge_file,
              const std::filesystem::path& subgraph_file);

// Two cliques joined by a path. One singleton subgraph per node, labeled by
// the nearer clique; all records are train split.
void make_barbell(const BarbellParams& params,
                  const std::filesystem::path& edge_file,
                  const std::filesystem::path& subgraph_file);

// Zachary's karate club: 34 nodes, 78 edges, two faction labels. One
// singleton subgraph per node, all train split.
void make_karate(const std::filesystem::path& edge_file,
                 const std::filesystem::path& subgraph_file);

}  // namespace padel
