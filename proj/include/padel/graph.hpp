#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "padel/tensor.hpp"

namespace padel {

// Immutable undirected base graph in compressed adjacency form. Neighbor
// lists are sorted and deduplicated; no self-loops are stored. Safe to read
// from many threads after construction.
struct BaseGraph {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;  // undirected edge count
  std::vector<std::vector<std::uint32_t>> adjacency;

  // Validates symmetry-by-construction: dedupes, rejects self-loops and
  // out-of-range endpoints.
  static BaseGraph from_edges(
      std::size_t num_nodes,
      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

  const std::vector<std::uint32_t>& neighbors(std::uint32_t v) const {
    return adjacency[v];
  }
  std::size_t degree(std::uint32_t v) const { return adjacency[v].size(); }
  bool has_edge(std::uint32_t u, std::uint32_t v) const;
};

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split parse_split(const std::string& tag);  // throws on unknown tag

struct SubgraphRecord {
  std::vector<std::uint32_t> node_ids;  // strictly increasing, nonempty
  std::vector<std::uint32_t> labels;    // class indices; single-label: size 1
  Split split = Split::Train;
};

struct DatasetBundle {
  BaseGraph graph;
  std::vector<SubgraphRecord> subgraphs;
  std::size_t num_classes = 0;
  bool multi_label = false;
  double train_fraction_used = 1.0;
  std::vector<std::string> label_names;          // intern order = index
  std::vector<std::uint64_t> original_node_ids;  // dense id -> original id

  std::vector<std::size_t> split_indices(Split s) const;
};

struct LoadOptions {
  // Larger subgraphs are truncated to their lowest node ids.
  std::size_t max_subgraph_nodes = 128;
};

// Edge file: one undirected edge per line, two base-10 integers separated by
// whitespace; `#` lines ignored. Arbitrary nonnegative ids are remapped to
// dense 0..|V|-1 in first-seen order.
// Subgraph file: per line, three tab-separated fields:
//   dash-separated node ids, comma-separated label names, split tag.
DatasetBundle load_dataset(const std::filesystem::path& edge_file,
                           const std::filesystem::path& subgraph_file,
                           const LoadOptions& opts = {});

// Writes edges as dense ids, one "u v" per line with u < v, sorted.
void save_edge_file(const BaseGraph& graph, const std::filesystem::path& path);

// Sidecars: label intern table and original-id -> dense-id map.
void write_label_sidecar(const DatasetBundle& bundle,
                         const std::filesystem::path& path);
void write_remap_sidecar(const DatasetBundle& bundle,
                         const std::filesystem::path& path);

// Keeps ceil(fraction * |train|) uniformly chosen train records (deterministic
// given seed); val/test untouched. Record order is preserved.
DatasetBundle subsample_train(const DatasetBundle& bundle, double fraction,
                              std::uint64_t seed);

struct CoverageStats {
  std::size_t covered_nodes = 0;
  double coverage = 0.0;
};
CoverageStats coverage_stats(const DatasetBundle& bundle);

// Dense n×n symmetric 0/1 adjacency over local indices, zero diagonal;
// local index i corresponds to node_ids[i].
Tensor induced_adjacency(const BaseGraph& graph,
                         const std::vector<std::uint32_t>& node_ids);

}  // namespace padel
