#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gal/common.hpp"

namespace gal {

struct Edge {
  int u = 0;
  int v = 0;
  std::optional<double> target;
};

/// Undirected attributed graph. Adjacency lists are sorted and symmetric,
/// with no self loops; `edges` stores each undirected edge once with u < v.
struct Graph {
  int node_count = 0;
  std::vector<std::vector<int>> adjacency;
  int feature_dim = 0;
  std::vector<double> features;  // node_count x feature_dim, row major
  std::vector<int> sensitive;    // one categorical label per node
  int sensitive_classes = 0;
  std::vector<int> node_targets;  // empty when the graph carries no node task
  int node_target_classes = 0;
  std::vector<Edge> edges;
  bool has_edge_targets = false;

  int degree(int v) const { return static_cast<int>(adjacency[v].size()); }
  const double* feature_row(int v) const { return features.data() + static_cast<std::size_t>(v) * feature_dim; }
  void validate() const;
};

/// Builds the canonical form: dedupes undirected pairs (first target wins),
/// sorts adjacency, and validates labels.
Graph build_graph(int node_count, std::vector<Edge> edge_list, int feature_dim,
                  std::vector<double> features, std::vector<int> sensitive,
                  std::vector<int> node_targets, bool has_edge_targets);

/// Node table: `node_id,f0,...,f{d-1},sensitive[,target]`; edge list:
/// `src,dst[,target]`. Parse failures carry 1-based line numbers.
Graph load_graph(const std::string& node_table_path, const std::string& edge_list_path);
void write_graph(const Graph& g, const std::string& node_table_path,
                 const std::string& edge_list_path);

struct SbmConfig {
  int block_count = 2;
  int nodes_per_block = 200;
  double p_in = 0.1;
  double p_out = 0.01;
  double rho_ya = 0.6;       // correlation knob between block label and attribute
  double feature_noise = 0.1;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Stochastic block model with planted labels. Blocks define the task label
/// Y; the sensitive attribute equals Y with probability (1 + rho_ya) / 2 and
/// is otherwise uniform over the remaining classes. Features are the one-hot
/// attribute concatenated with the one-hot block, plus Gaussian noise.
Graph generate_sbm(const SbmConfig& cfg);

struct EdgeSplit {
  std::vector<int> train_edges;  // indices into Graph::edges
  std::vector<int> test_edges;
};

struct NodeSplit {
  std::vector<int> train_nodes;
  std::vector<int> test_nodes;
};

EdgeSplit split_edges(const Graph& g, double test_fraction, std::uint64_t seed);
NodeSplit split_nodes(const Graph& g, double test_fraction, std::uint64_t seed);

struct NhopResult {
  bool accepted = false;
  int endpoint = -1;
  std::vector<int> path;  // includes the start node when accepted
};

/// Monte-Carlo n-hop neighbor sampler. Greedily extends a self-avoiding path
/// by uniform neighbor draws without replacement, rejecting when the frontier
/// is exhausted. An accepted endpoint is 1..n hops from the start.
NhopResult nhop_sample(const Graph& g, int start, int hops, Rng& rng);

std::optional<int> bfs_distance(const Graph& g, int from, int to);

}  // namespace gal
