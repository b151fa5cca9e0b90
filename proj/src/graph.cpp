#include "gal/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gal/csv.hpp"

namespace gal {

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (table.header.empty()) {
      table.header = std::move(fields);
      width = table.header.size();
      continue;
    }
    if (fields.size() != width) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.row_lines.push_back(line_no);
  }
  if (table.header.empty()) throw ParseError(path + ": empty file");
  return table;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << content;
  if (!out) throw ParseError(path + ": write failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long long parse_int(const std::string& token, const std::string& context, std::size_t line) {
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || token.empty()) {
    throw ParseError(context + ":" + std::to_string(line) + ": expected integer, got '" + token +
                     "'");
  }
  return value;
}

double parse_real(const std::string& token, const std::string& context, std::size_t line) {
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || token.empty()) {
    throw ParseError(context + ":" + std::to_string(line) + ": expected number, got '" + token +
                     "'");
  }
  return value;
}

void Graph::validate() const {
  if (node_count < 0) throw ContractError("graph: negative node count");
  if (static_cast<int>(adjacency.size()) != node_count ||
      static_cast<int>(sensitive.size()) != node_count) {
    throw ContractError("graph: adjacency or label size does not match node count");
  }
  if (features.size() != static_cast<std::size_t>(node_count) * feature_dim) {
    throw ContractError("graph: feature matrix size mismatch");
  }
  if (!all_finite(features)) throw NumericError("graph: non-finite feature");
  for (int v = 0; v < node_count; ++v) {
    if (sensitive[v] < 0 || sensitive[v] >= sensitive_classes) {
      throw ContractError("graph: sensitive label out of range at node " + std::to_string(v));
    }
    for (std::size_t i = 0; i < adjacency[v].size(); ++i) {
      int u = adjacency[v][i];
      if (u < 0 || u >= node_count) throw ContractError("graph: neighbor out of range");
      if (u == v) throw ContractError("graph: self loop at node " + std::to_string(v));
      if (i > 0 && adjacency[v][i - 1] >= u) throw ContractError("graph: adjacency not sorted");
    }
  }
  if (!node_targets.empty()) {
    if (static_cast<int>(node_targets.size()) != node_count) {
      throw ContractError("graph: node target size mismatch");
    }
    for (int y : node_targets) {
      if (y < 0 || y >= node_target_classes) throw ContractError("graph: node target out of range");
    }
  }
}

Graph build_graph(int node_count, std::vector<Edge> edge_list, int feature_dim,
                  std::vector<double> features, std::vector<int> sensitive,
                  std::vector<int> node_targets, bool has_edge_targets) {
  Graph g;
  g.node_count = node_count;
  g.feature_dim = feature_dim;
  g.features = std::move(features);
  g.sensitive = std::move(sensitive);
  g.node_targets = std::move(node_targets);
  g.has_edge_targets = has_edge_targets;

  int max_sensitive = -1;
  for (int a : g.sensitive) max_sensitive = std::max(max_sensitive, a);
  g.sensitive_classes = max_sensitive + 1;
  int max_target = -1;
  for (int y : g.node_targets) max_target = std::max(max_target, y);
  g.node_target_classes = g.node_targets.empty() ? 0 : max_target + 1;

  std::map<std::pair<int, int>, std::optional<double>> dedup;
  for (const Edge& e : edge_list) {
    if (e.u < 0 || e.u >= node_count || e.v < 0 || e.v >= node_count) {
      throw ContractError("graph: edge endpoint out of range");
    }
    if (e.u == e.v) throw ContractError("graph: self loop rejected");
    auto key = std::minmax(e.u, e.v);
    dedup.emplace(std::pair(key.first, key.second), e.target);  // first occurrence wins
  }
  g.adjacency.assign(node_count, {});
  g.edges.reserve(dedup.size());
  for (const auto& [key, target] : dedup) {
    g.edges.push_back({key.first, key.second, target});
    g.adjacency[key.first].push_back(key.second);
    g.adjacency[key.second].push_back(key.first);
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  g.validate();
  return g;
}

Graph load_graph(const std::string& node_table_path, const std::string& edge_list_path) {
  CsvTable nodes = read_csv(node_table_path);

  const auto& h = nodes.header;
  if (h.empty() || h[0] != "node_id") {
    throw ParseError(node_table_path + ":1: first column must be node_id");
  }
  int feature_dim = 0;
  std::size_t col = 1;
  while (col < h.size() && h[col] == "f" + std::to_string(feature_dim)) {
    ++feature_dim;
    ++col;
  }
  if (col >= h.size() || h[col] != "sensitive") {
    throw ParseError(node_table_path + ":1: expected feature columns f0..f{d-1} then sensitive");
  }
  ++col;
  bool has_node_targets = false;
  if (col < h.size()) {
    if (h[col] != "target" || col + 1 != h.size()) {
      throw ParseError(node_table_path + ":1: trailing columns must be a single target");
    }
    has_node_targets = true;
  }

  const int n = static_cast<int>(nodes.rows.size());
  std::vector<double> features(static_cast<std::size_t>(n) * feature_dim);
  std::vector<int> sensitive(n, 0);
  std::vector<int> targets(has_node_targets ? n : 0, 0);
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const auto& row = nodes.rows[r];
    const std::size_t line = nodes.row_lines[r];
    long long id = parse_int(row[0], node_table_path, line);
    if (id < 0 || id >= n) {
      throw ParseError(node_table_path + ":" + std::to_string(line) + ": node id " +
                       std::to_string(id) + " out of range [0, " + std::to_string(n) + ")");
    }
    if (seen[id]) {
      throw ParseError(node_table_path + ":" + std::to_string(line) + ": duplicate node id " +
                       std::to_string(id));
    }
    seen[id] = true;
    for (int f = 0; f < feature_dim; ++f) {
      features[static_cast<std::size_t>(id) * feature_dim + f] =
          parse_real(row[1 + f], node_table_path, line);
    }
    long long a = parse_int(row[1 + feature_dim], node_table_path, line);
    if (a < 0) {
      throw ParseError(node_table_path + ":" + std::to_string(line) + ": negative sensitive label");
    }
    sensitive[id] = static_cast<int>(a);
    if (has_node_targets) {
      long long y = parse_int(row[2 + feature_dim], node_table_path, line);
      if (y < 0) {
        throw ParseError(node_table_path + ":" + std::to_string(line) + ": negative target label");
      }
      targets[id] = static_cast<int>(y);
    }
  }

  CsvTable edges_csv = read_csv(edge_list_path);
  const auto& eh = edges_csv.header;
  bool has_edge_targets = false;
  if (eh.size() == 3 && eh[0] == "src" && eh[1] == "dst" && eh[2] == "target") {
    has_edge_targets = true;
  } else if (!(eh.size() == 2 && eh[0] == "src" && eh[1] == "dst")) {
    throw ParseError(edge_list_path + ":1: header must be src,dst or src,dst,target");
  }
  std::vector<Edge> edge_list;
  edge_list.reserve(edges_csv.rows.size());
  for (std::size_t r = 0; r < edges_csv.rows.size(); ++r) {
    const auto& row = edges_csv.rows[r];
    const std::size_t line = edges_csv.row_lines[r];
    Edge e;
    long long u = parse_int(row[0], edge_list_path, line);
    long long v = parse_int(row[1], edge_list_path, line);
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw ParseError(edge_list_path + ":" + std::to_string(line) + ": endpoint out of range");
    }
    if (u == v) {
      throw ParseError(edge_list_path + ":" + std::to_string(line) + ": self loop");
    }
    e.u = static_cast<int>(u);
    e.v = static_cast<int>(v);
    if (has_edge_targets) e.target = parse_real(row[2], edge_list_path, line);
    edge_list.push_back(e);
  }

  try {
    return build_graph(n, std::move(edge_list), feature_dim, std::move(features),
                       std::move(sensitive), std::move(targets), has_edge_targets);
  } catch (const ContractError& err) {
    throw ParseError(node_table_path + ": " + err.what());
  }
}

void write_graph(const Graph& g, const std::string& node_table_path,
                 const std::string& edge_list_path) {
  std::string nodes = "node_id";
  for (int f = 0; f < g.feature_dim; ++f) nodes += ",f" + std::to_string(f);
  nodes += ",sensitive";
  if (!g.node_targets.empty()) nodes += ",target";
  nodes += "\n";
  for (int v = 0; v < g.node_count; ++v) {
    nodes += std::to_string(v);
    for (int f = 0; f < g.feature_dim; ++f) {
      nodes += "," + format_double(g.feature_row(v)[f]);
    }
    nodes += "," + std::to_string(g.sensitive[v]);
    if (!g.node_targets.empty()) nodes += "," + std::to_string(g.node_targets[v]);
    nodes += "\n";
  }
  write_text_file(node_table_path, nodes);

  std::string edges = g.has_edge_targets ? "src,dst,target\n" : "src,dst\n";
  for (const Edge& e : g.edges) {
    edges += std::to_string(e.u) + "," + std::to_string(e.v);
    if (g.has_edge_targets) edges += "," + format_double(e.target.value_or(0.0));
    edges += "\n";
  }
  write_text_file(edge_list_path, edges);
}

void SbmConfig::validate() const {
  if (block_count < 2) throw ConfigError("sbm: block_count must be at least 2");
  if (nodes_per_block < 1) throw ConfigError("sbm: nodes_per_block must be positive");
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1) {
    throw ConfigError("sbm: edge probabilities must lie in [0, 1]");
  }
  if (rho_ya < 0 || rho_ya > 1) throw ConfigError("sbm: rho_ya must lie in [0, 1]");
  if (feature_noise < 0) throw ConfigError("sbm: feature_noise must be nonnegative");
}

Graph generate_sbm(const SbmConfig& cfg) {
  cfg.validate();
  Rng rng = Rng(cfg.seed).derive("sbm");
  const int n = cfg.block_count * cfg.nodes_per_block;
  const int k = cfg.block_count;

  std::vector<int> blocks(n);
  for (int v = 0; v < n; ++v) blocks[v] = v / cfg.nodes_per_block;

  // Attribute matches the block label with probability (1 + rho) / 2,
  // otherwise lands uniformly on one of the remaining classes.
  std::vector<int> attrs(n);
  const double match = (1.0 + cfg.rho_ya) / 2.0;
  for (int v = 0; v < n; ++v) {
    if (rng.uniform() < match) {
      attrs[v] = blocks[v];
    } else {
      int other = static_cast<int>(rng.uniform_index(k - 1));
      attrs[v] = other >= blocks[v] ? other + 1 : other;
    }
  }

  const int d = 2 * k;
  std::vector<double> features(static_cast<std::size_t>(n) * d, 0.0);
  for (int v = 0; v < n; ++v) {
    double* row = features.data() + static_cast<std::size_t>(v) * d;
    row[attrs[v]] += 1.0;
    row[k + blocks[v]] += 1.0;
    for (int f = 0; f < d; ++f) row[f] += rng.normal(0.0, cfg.feature_noise);
  }

  std::vector<Edge> edge_list;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = blocks[i] == blocks[j] ? cfg.p_in : cfg.p_out;
      if (rng.uniform() < p) edge_list.push_back({i, j, std::nullopt});
    }
  }

  return build_graph(n, std::move(edge_list), d, std::move(features), std::move(attrs),
                     std::move(blocks), false);
}

EdgeSplit split_edges(const Graph& g, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0 || test_fraction > 1) {
    throw ContractError("split-edges: test fraction must lie in [0, 1]");
  }
  if (g.edges.size() < 2) throw ContractError("split-edges: need at least 2 edges");
  std::vector<int> order(g.edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng = Rng(seed).derive("edge-split");
  rng.shuffle(order);
  const std::size_t test_count =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  EdgeSplit split;
  split.test_edges.assign(order.begin(), order.begin() + test_count);
  split.train_edges.assign(order.begin() + test_count, order.end());
  std::sort(split.test_edges.begin(), split.test_edges.end());
  std::sort(split.train_edges.begin(), split.train_edges.end());
  return split;
}

NodeSplit split_nodes(const Graph& g, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0 || test_fraction > 1) {
    throw ContractError("split-nodes: test fraction must lie in [0, 1]");
  }
  if (g.node_count < 2) throw ContractError("split-nodes: need at least 2 nodes");
  std::vector<int> order(g.node_count);
  for (int i = 0; i < g.node_count; ++i) order[i] = i;
  Rng rng = Rng(seed).derive("node-split");
  rng.shuffle(order);
  const std::size_t test_count =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  NodeSplit split;
  split.test_nodes.assign(order.begin(), order.begin() + test_count);
  split.train_nodes.assign(order.begin() + test_count, order.end());
  std::sort(split.test_nodes.begin(), split.test_nodes.end());
  std::sort(split.train_nodes.begin(), split.train_nodes.end());
  return split;
}

NhopResult nhop_sample(const Graph& g, int start, int hops, Rng& rng) {
  if (hops < 1) throw ContractError("nhop-sample: hops must be at least 1");
  if (start < 0 || start >= g.node_count) throw ContractError("nhop-sample: start out of range");
  NhopResult result;
  result.path = {start};
  int current = start;
  for (int step = 0; step < hops; ++step) {
    std::vector<int> frontier = g.adjacency[current];
    int chosen = -1;
    // Uniform draws without replacement until a fresh vertex appears.
    while (!frontier.empty()) {
      const std::size_t pick = rng.uniform_index(frontier.size());
      const int candidate = frontier[pick];
      frontier[pick] = frontier.back();
      frontier.pop_back();
      if (std::find(result.path.begin(), result.path.end(), candidate) == result.path.end()) {
        chosen = candidate;
        break;
      }
    }
    if (chosen < 0) {
      result.accepted = false;
      result.path.clear();
      return result;  // dead end: every neighbor already on the path
    }
    result.path.push_back(chosen);
    current = chosen;
  }
  result.accepted = true;
  result.endpoint = current;
  return result;
}

std::optional<int> bfs_distance(const Graph& g, int from, int to) {
  if (from < 0 || from >= g.node_count || to < 0 || to >= g.node_count) {
    throw ContractError("bfs-distance: node out of range");
  }
  if (from == to) return 0;
  std::vector<int> dist(g.node_count, -1);
  dist[from] = 0;
  std::deque<int> queue = {from};
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : g.adjacency[v]) {
      if (dist[u] >= 0) continue;
      dist[u] = dist[v] + 1;
      if (u == to) return dist[u];
      queue.push_back(u);
    }
  }
  return std::nullopt;
}

}  // namespace gal
