#include "padel/synth.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "padel/rng.hpp"

namespace padel {

namespace {

void write_edges(const std::filesystem::path& path,
                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (auto [u, v] : edges) out << u << " " << v << "\n";
}

struct RecordLine {
  std::vector<std::uint32_t> nodes;
  std::string label;
  const char* split;
};

void write_records(const std::filesystem::path& path,
                   const std::vector<RecordLine>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < rec.nodes.size(); ++i)
      out << (i ? "-" : "") << rec.nodes[i];
    out << "\t" << rec.label << "\t" << rec.split << "\n";
  }
}

// Zachary's karate club, canonical 78-edge list; label 0 is the instructor's
// faction, 1 the officer's.
constexpr std::pair<std::uint32_t, std::uint32_t> kKarateEdges[] = {
    {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},
    {0, 8},   {0, 10},  {0, 11},  {0, 12},  {0, 13},  {0, 17},  {0, 19},
    {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},  {1, 17},
    {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},
    {2, 13},  {2, 27},  {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},
    {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},  {6, 16},  {8, 30},
    {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32},
    {15, 33}, {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32},
    {22, 33}, {23, 25}, {23, 27}, {23, 29}, {23, 32}, {23, 33}, {24, 25},
    {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
    {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33},
    {32, 33}};

constexpr int kKarateFaction[34] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0,
                                    0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1,
                                    1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

}  // namespace

void make_sbm(const SbmParams& p, std::uint64_t seed,
              const std::filesystem::path& edge_file,
              const std::filesystem::path& subgraph_file) {
  if (p.num_blocks < 2 || p.num_nodes < p.num_blocks)
    throw std::invalid_argument("make_sbm: need >= 2 blocks, nodes >= blocks");
  if (p.min_size < 1 || p.max_size < p.min_size)
    throw std::invalid_argument("make_sbm: bad subgraph size range");
  if (!(p.p_in >= 0 && p.p_in <= 1 && p.p_out >= 0 && p.p_out <= 1))
    throw std::invalid_argument("make_sbm: probabilities must be in [0,1]");

  Rng rng(seed);
  Rng edge_rng = rng.child("edges");
  Rng sub_rng = rng.child("subgraphs");

  auto block_of = [&](std::uint32_t v) { return v % p.num_blocks; };

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<std::size_t> degree(p.num_nodes, 0);
  for (std::uint32_t u = 0; u < p.num_nodes; ++u)
    for (std::uint32_t v = u + 1; v < p.num_nodes; ++v) {
      const double prob = block_of(u) == block_of(v) ? p.p_in : p.p_out;
      if (edge_rng.bernoulli(prob)) {
        edges.emplace_back(u, v);
        ++degree[u];
        ++degree[v];
      }
    }
  // Isolated nodes would be invisible to an edge-list loader; attach each to
  // a same-block partner so every node id appears in the file.
  for (std::uint32_t v = 0; v < p.num_nodes; ++v) {
    if (degree[v] > 0) continue;
    std::uint32_t partner = static_cast<std::uint32_t>(
        (v + p.num_blocks) % p.num_nodes);
    if (partner == v) partner = (v + 1) % p.num_nodes;
    edges.emplace_back(std::min(v, partner), std::max(v, partner));
    ++degree[v];
    ++degree[partner];
  }
  write_edges(edge_file, edges);

  std::vector<std::vector<std::uint32_t>> block_members(p.num_blocks);
  for (std::uint32_t v = 0; v < p.num_nodes; ++v)
    block_members[block_of(v)].push_back(v);

  std::vector<RecordLine> records;
  for (std::size_t s = 0; s < p.num_subgraphs; ++s) {
    const std::size_t home = s % p.num_blocks;
    const std::size_t size =
        p.min_size + sub_rng.uniform_index(p.max_size - p.min_size + 1);
    std::set<std::uint32_t> nodes;
    while (nodes.size() < size) {
      std::size_t block = home;
      if (!sub_rng.bernoulli(p.within_prob))
        block = sub_rng.uniform_index(p.num_blocks);
      const auto& members = block_members[block];
      nodes.insert(members[sub_rng.uniform_index(members.size())]);
    }
    // Majority block decides the label (ties go to the lower block id).
    std::vector<std::size_t> counts(p.num_blocks, 0);
    for (std::uint32_t v : nodes) ++counts[block_of(v)];
    const std::size_t label = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());

    const double roll = sub_rng.uniform();
    const char* split = roll < p.train_frac              ? "train"
                        : roll < p.train_frac + p.val_frac ? "val"
                                                           : "test";
    RecordLine rec;
    rec.nodes.assign(nodes.begin(), nodes.end());
    rec.label = "block" + std::to_string(label);
    rec.split = split;
    records.push_back(std::move(rec));
  }
  write_records(subgraph_file, records);
}

void make_barbell(const BarbellParams& p,
                  const std::filesystem::path& edge_file,
                  const std::filesystem::path& subgraph_file) {
  if (p.clique_size < 3)
    throw std::invalid_argument("make_barbell: clique size must be >= 3");
  const std::size_t n = 2 * p.clique_size + p.bridge_len;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  auto clique = [&](std::uint32_t base) {
    for (std::uint32_t i = 0; i < p.clique_size; ++i)
      for (std::uint32_t j = i + 1; j < p.clique_size; ++j)
        edges.emplace_back(base + i, base + j);
  };
  clique(0);
  clique(static_cast<std::uint32_t>(p.clique_size + p.bridge_len));
  // Path from the last node of the left clique through the bridge to the
  // first node of the right clique.
  std::uint32_t prev = static_cast<std::uint32_t>(p.clique_size - 1);
  for (std::size_t i = 0; i < p.bridge_len + 1; ++i) {
    const auto next = static_cast<std::uint32_t>(p.clique_size + i);
    edges.emplace_back(prev, next);
    prev = next;
  }
  write_edges(edge_file, edges);

  std::vector<RecordLine> records;
  for (std::uint32_t v = 0; v < n; ++v) {
    const bool left = v < p.clique_size + (p.bridge_len + 1) / 2;
    records.push_back({{v}, left ? "left" : "right", "train"});
  }
  write_records(subgraph_file, records);
}

void make_karate(const std::filesystem::path& edge_file,
                 const std::filesystem::path& subgraph_file) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges(
      std::begin(kKarateEdges), std::end(kKarateEdges));
  write_edges(edge_file, edges);
  std::vector<RecordLine> records;
  for (std::uint32_t v = 0; v < 34; ++v)
    records.push_back(
        {{v}, kKarateFaction[v] == 0 ? "mrhi" : "officer", "train"});
  write_records(subgraph_file, records);
}

}  // namespace padel
