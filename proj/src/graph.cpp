#include "padel/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "padel/rng.hpp"

namespace padel {

namespace {

[[noreturn]] void parse_error(const std::filesystem::path& file,
                              std::size_t line_no, const std::string& what) {
  throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                           ": " + what);
}

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::vector<std::string> split_on(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

BaseGraph BaseGraph::from_edges(
    std::size_t num_nodes,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  BaseGraph g;
  g.num_nodes = num_nodes;
  g.adjacency.assign(num_nodes, {});
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes)
      throw std::invalid_argument("from_edges: endpoint out of range");
    if (u == v) throw std::invalid_argument("from_edges: self-loop rejected");
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  g.num_edges = 0;
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    g.num_edges += nbrs.size();
  }
  g.num_edges /= 2;
  return g;
}

bool BaseGraph::has_edge(std::uint32_t u, std::uint32_t v) const {
  const auto& nbrs = adjacency[u];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& tag) {
  if (tag == "train") return Split::Train;
  if (tag == "val") return Split::Val;
  if (tag == "test") return Split::Test;
  throw std::invalid_argument("unknown split tag '" + tag + "'");
}

std::vector<std::size_t> DatasetBundle::split_indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < subgraphs.size(); ++i)
    if (subgraphs[i].split == s) out.push_back(i);
  return out;
}

DatasetBundle load_dataset(const std::filesystem::path& edge_file,
                           const std::filesystem::path& subgraph_file,
                           const LoadOptions& opts) {
  std::ifstream ef(edge_file);
  if (!ef)
    throw std::runtime_error("cannot open edge file " + edge_file.string());

  DatasetBundle bundle;
  std::unordered_map<std::uint64_t, std::uint32_t> remap;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  auto dense_id = [&](std::uint64_t orig) {
    auto it = remap.find(orig);
    if (it != remap.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(bundle.original_node_ids.size());
    remap.emplace(orig, id);
    bundle.original_node_ids.push_back(orig);
    return id;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ef, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long long a = -1, b = -1;
    if (!(ss >> a >> b) || a < 0 || b < 0)
      parse_error(edge_file, line_no, "malformed edge line '" + line + "'");
    std::string extra;
    if (ss >> extra)
      parse_error(edge_file, line_no, "trailing tokens on edge line");
    if (a == b)
      parse_error(edge_file, line_no, "self-loop rejected");
    const std::uint32_t u = dense_id(static_cast<std::uint64_t>(a));
    const std::uint32_t v = dense_id(static_cast<std::uint64_t>(b));
    edges.emplace_back(u, v);
  }
  bundle.graph = BaseGraph::from_edges(bundle.original_node_ids.size(), edges);

  std::ifstream sf(subgraph_file);
  if (!sf)
    throw std::runtime_error("cannot open subgraph file " +
                             subgraph_file.string());
  std::unordered_map<std::string, std::uint32_t> label_index;
  bool any_multi = false;
  line_no = 0;
  while (std::getline(sf, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 3)
      parse_error(subgraph_file, line_no,
                  "expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));

    SubgraphRecord rec;
    std::set<std::uint32_t> ids;
    for (const auto& tok : split_on(strip(fields[0]), '-')) {
      if (tok.empty())
        parse_error(subgraph_file, line_no, "empty node id");
      std::uint64_t orig = 0;
      try {
        orig = std::stoull(tok);
      } catch (const std::exception&) {
        parse_error(subgraph_file, line_no, "bad node id '" + tok + "'");
      }
      auto it = remap.find(orig);
      if (it == remap.end())
        parse_error(subgraph_file, line_no,
                    "node id " + tok + " not present in base graph");
      ids.insert(it->second);
    }
    if (ids.empty())
      parse_error(subgraph_file, line_no, "empty subgraph");
    rec.node_ids.assign(ids.begin(), ids.end());
    if (rec.node_ids.size() > opts.max_subgraph_nodes)
      rec.node_ids.resize(opts.max_subgraph_nodes);  // keep lowest ids

    auto label_fields = split_on(strip(fields[1]), ',');
    for (auto& lf : label_fields) {
      const std::string name = strip(lf);
      if (name.empty())
        parse_error(subgraph_file, line_no, "empty label name");
      auto [it, inserted] = label_index.emplace(
          name, static_cast<std::uint32_t>(bundle.label_names.size()));
      if (inserted) bundle.label_names.push_back(name);
      rec.labels.push_back(it->second);
    }
    std::sort(rec.labels.begin(), rec.labels.end());
    rec.labels.erase(std::unique(rec.labels.begin(), rec.labels.end()),
                     rec.labels.end());
    if (rec.labels.size() > 1) any_multi = true;

    try {
      rec.split = parse_split(strip(fields[2]));
    } catch (const std::exception& e) {
      parse_error(subgraph_file, line_no, e.what());
    }
    bundle.subgraphs.push_back(std::move(rec));
  }

  bundle.num_classes = bundle.label_names.size();
  bundle.multi_label = any_multi;
  bundle.train_fraction_used = 1.0;
  return bundle;
}

void save_edge_file(const BaseGraph& graph,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::uint32_t u = 0; u < graph.num_nodes; ++u)
    for (std::uint32_t v : graph.adjacency[u])
      if (u < v) out << u << " " << v << "\n";
}

void write_label_sidecar(const DatasetBundle& bundle,
                         const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["labels"] = bundle.label_names;
  j["multi_label"] = bundle.multi_label;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_remap_sidecar(const DatasetBundle& bundle,
                         const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["original_ids"] = bundle.original_node_ids;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

DatasetBundle subsample_train(const DatasetBundle& bundle, double fraction,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("subsample_train: fraction must be in (0,1]");
  std::vector<std::size_t> train = bundle.split_indices(Split::Train);
  // Tiny relative shrink keeps ceil() from rounding 0.1*1920 = 192.0000…3 up.
  const double want = fraction * static_cast<double>(train.size());
  auto keep_count =
      static_cast<std::size_t>(std::ceil(want * (1.0 - 1e-12)));
  keep_count = std::min(keep_count, train.size());

  Rng rng(seed);
  std::shuffle(train.begin(), train.end(), rng.engine());
  train.resize(keep_count);
  std::sort(train.begin(), train.end());

  DatasetBundle out = bundle;
  out.subgraphs.clear();
  std::size_t next_keep = 0;
  for (std::size_t i = 0; i < bundle.subgraphs.size(); ++i) {
    const auto& rec = bundle.subgraphs[i];
    if (rec.split == Split::Train) {
      if (next_keep < train.size() && train[next_keep] == i) {
        out.subgraphs.push_back(rec);
        ++next_keep;
      }
    } else {
      out.subgraphs.push_back(rec);
    }
  }
  out.train_fraction_used = bundle.train_fraction_used * fraction;
  return out;
}

CoverageStats coverage_stats(const DatasetBundle& bundle) {
  std::vector<char> covered(bundle.graph.num_nodes, 0);
  std::size_t count = 0;
  for (const auto& rec : bundle.subgraphs)
    for (std::uint32_t v : rec.node_ids)
      if (!covered[v]) {
        covered[v] = 1;
        ++count;
      }
  CoverageStats stats;
  stats.covered_nodes = count;
  stats.coverage = bundle.graph.num_nodes == 0
                       ? 0.0
                       : static_cast<double>(count) /
                             static_cast<double>(bundle.graph.num_nodes);
  return stats;
}

Tensor induced_adjacency(const BaseGraph& graph,
                         const std::vector<std::uint32_t>& node_ids) {
  for (std::uint32_t v : node_ids)
    if (v >= graph.num_nodes)
      throw std::invalid_argument("induced_adjacency: node id out of range");
  const std::size_t n = node_ids.size();
  Tensor adj(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (graph.has_edge(node_ids[i], node_ids[j]))
        adj.at(i, j) = adj.at(j, i) = 1.0;
  return adj;
}

}  // namespace padel
