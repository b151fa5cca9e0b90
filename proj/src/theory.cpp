#include "gal/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>

namespace gal {

namespace {

constexpr double kMassTolerance = 1e-12;

void validate_probs(const std::vector<double>& probs, const char* what) {
  if (probs.empty()) throw ContractError(std::string(what) + " has no mass entries");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ContractError(std::string(what) + " has negative mass");
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw ContractError(std::string(what) + " does not sum to 1");
  }
}

void require_common_support(const DiscreteDist& p, const DiscreteDist& q) {
  if (p.points != q.points) throw ContractError("distributions live on different supports");
}

}  // namespace

void DiscreteDist::validate() const {
  if (points.size() != probs.size()) {
    throw ContractError("support and mass lists differ in length");
  }
  validate_probs(probs, "distribution");
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ContractError("tv_distance size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

double tv_distance(const DiscreteDist& p, const DiscreteDist& q) {
  p.validate();
  q.validate();
  require_common_support(p, q);
  return tv_distance(p.probs, q.probs);
}

double advantage_bruteforce(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ContractError("advantage size mismatch");
  if (p.empty() || p.size() > 16) {
    throw ContractError("advantage enumeration needs support size in [1, 16]");
  }
  const std::size_t n = p.size();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double dp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) dp += p[i] - q[i];
    }
    best = std::max(best, std::abs(dp));
  }
  return best;
}

double advantage_bruteforce(const DiscreteDist& p, const DiscreteDist& q) {
  p.validate();
  q.validate();
  require_common_support(p, q);
  return advantage_bruteforce(p.probs, q.probs);
}

double w1_bernoulli(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) {
    throw ContractError("w1_bernoulli needs probabilities in [0, 1]");
  }
  return std::abs(p - q);
}

double w1_transport(const std::vector<double>& p_probs, const std::vector<double>& q_probs,
                    const std::vector<std::vector<double>>& cost) {
  const std::size_t n = p_probs.size();
  const std::size_t m = q_probs.size();
  if (n == 0 || m == 0) throw ContractError("transport needs non-empty supports");
  if (n > 64 || m > 64) throw ContractError("transport supports are capped at 64 points");
  if (cost.size() != n) throw ContractError("cost row count mismatch");
  double total_p = 0.0, total_q = 0.0;
  for (double v : p_probs) {
    if (!(v >= 0.0)) throw ContractError("transport mass must be non-negative");
    total_p += v;
  }
  for (double v : q_probs) {
    if (!(v >= 0.0)) throw ContractError("transport mass must be non-negative");
    total_q += v;
  }
  if (std::abs(total_p - total_q) > kMassTolerance) {
    throw ContractError("transport mass mismatch between the sides");
  }
  for (const auto& row : cost) {
    if (row.size() != m) throw ContractError("cost column count mismatch");
    for (double c : row) {
      if (!(c >= 0.0) || !std::isfinite(c)) throw ContractError("transport costs must be >= 0");
    }
  }

  // Scale masses to integers so augmentation arithmetic is exact; any
  // rounding drift is folded into the largest entry.
  const double scale = 4503599627370496.0;  // 2^52
  std::vector<long long> supply(n), demand(m);
  long long supply_total = 0, demand_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    supply[i] = std::llround(p_probs[i] * scale);
    supply_total += supply[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    demand[j] = std::llround(q_probs[j] * scale);
    demand_total += demand[j];
  }
  auto largest = std::max_element(demand.begin(), demand.end());
  *largest += supply_total - demand_total;
  if (*largest < 0) throw NumericError("transport mass rounding produced negative demand");

  // Residual network: 0 = source, 1 = sink, 2..n+1 supply, n+2..n+m+1 demand.
  struct Arc {
    int to;
    long long cap;
    double cost;
    std::size_t rev;
  };
  const int node_count = static_cast<int>(n + m) + 2;
  std::vector<std::vector<Arc>> arcs(static_cast<std::size_t>(node_count));
  auto add_arc = [&](int u, int v, long long cap, double unit_cost) {
    arcs[static_cast<std::size_t>(u)].push_back(
        {v, cap, unit_cost, arcs[static_cast<std::size_t>(v)].size()});
    arcs[static_cast<std::size_t>(v)].push_back(
        {u, 0, -unit_cost, arcs[static_cast<std::size_t>(u)].size() - 1});
  };
  for (std::size_t i = 0; i < n; ++i) add_arc(0, static_cast<int>(i) + 2, supply[i], 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    add_arc(static_cast<int>(n + j) + 2, 1, demand[j], 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      add_arc(static_cast<int>(i) + 2, static_cast<int>(n + j) + 2, supply_total, cost[i][j]);
    }
  }

  // Successive shortest paths with Johnson potentials. All original costs
  // are non-negative, so zero potentials are valid initially; reduced costs
  // are clamped at zero to absorb floating-point drift, and Dijkstra's
  // finalize-once order keeps the parent pointers acyclic.
  const double inf = std::numeric_limits<double>::infinity();
  double scaled_cost = 0.0;
  std::vector<double> potential(static_cast<std::size_t>(node_count), 0.0);
  const long long iteration_cap =
      10000 + 50LL * static_cast<long long>(n) * static_cast<long long>(m);
  for (long long round = 0;; ++round) {
    if (round > iteration_cap) throw NumericError("transport solver exceeded iteration budget");
    std::vector<double> dist(static_cast<std::size_t>(node_count), inf);
    std::vector<int> parent_node(static_cast<std::size_t>(node_count), -1);
    std::vector<std::size_t> parent_arc(static_cast<std::size_t>(node_count), 0);
    using QueueItem = std::pair<double, int>;
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<QueueItem>> queue;
    dist[0] = 0.0;
    queue.push({0.0, 0});
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      if (d > dist[static_cast<std::size_t>(u)]) continue;
      const auto& out = arcs[static_cast<std::size_t>(u)];
      for (std::size_t k = 0; k < out.size(); ++k) {
        const Arc& arc = out[k];
        if (arc.cap <= 0) continue;
        const double reduced = std::max(
            0.0, arc.cost + potential[static_cast<std::size_t>(u)] -
                     potential[static_cast<std::size_t>(arc.to)]);
        const double candidate = d + reduced;
        if (candidate < dist[static_cast<std::size_t>(arc.to)]) {
          dist[static_cast<std::size_t>(arc.to)] = candidate;
          parent_node[static_cast<std::size_t>(arc.to)] = u;
          parent_arc[static_cast<std::size_t>(arc.to)] = k;
          queue.push({candidate, arc.to});
        }
      }
    }
    if (dist[1] == inf) break;  // all demand satisfied
    for (std::size_t v = 0; v < potential.size(); ++v) {
      if (dist[v] < inf) potential[v] += dist[v];
    }

    long long bottleneck = std::numeric_limits<long long>::max();
    for (int v = 1; v != 0; v = parent_node[static_cast<std::size_t>(v)]) {
      const int u = parent_node[static_cast<std::size_t>(v)];
      const Arc& arc = arcs[static_cast<std::size_t>(u)][parent_arc[static_cast<std::size_t>(v)]];
      bottleneck = std::min(bottleneck, arc.cap);
    }
    for (int v = 1; v != 0; v = parent_node[static_cast<std::size_t>(v)]) {
      const int u = parent_node[static_cast<std::size_t>(v)];
      Arc& arc = arcs[static_cast<std::size_t>(u)][parent_arc[static_cast<std::size_t>(v)]];
      arc.cap -= bottleneck;
      arcs[static_cast<std::size_t>(arc.to)][arc.rev].cap += bottleneck;
      scaled_cost += static_cast<double>(bottleneck) * arc.cost;
    }
  }
  return scaled_cost / scale;
}

double w1_discrete(const DiscreteDist& p, const DiscreteDist& q) {
  p.validate();
  q.validate();
  std::vector<std::vector<double>> cost(p.points.size(),
                                        std::vector<double>(q.points.size(), 0.0));
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    for (std::size_t j = 0; j < q.points.size(); ++j) {
      cost[i][j] = std::abs(p.points[i] - q.points[j]);
    }
  }
  return w1_transport(p.probs, q.probs, cost);
}

double w1_sorted_1d(std::vector<double> samples0, std::vector<double> samples1) {
  if (samples0.size() != samples1.size() || samples0.empty()) {
    throw ContractError("w1_sorted_1d needs equal-size non-empty samples");
  }
  std::sort(samples0.begin(), samples0.end());
  std::sort(samples1.begin(), samples1.end());
  double total = 0.0;
  for (std::size_t i = 0; i < samples0.size(); ++i) {
    total += std::abs(samples0[i] - samples1[i]);
  }
  return total / static_cast<double>(samples0.size());
}

double estimate_w1_embeddings(const Tensor& embeddings, const std::vector<int>& labels,
                              int projections, Rng& rng) {
  if (labels.size() != embeddings.rows()) throw ContractError("one label per embedding row");
  if (projections < 1) throw ContractError("estimate needs at least one projection");
  std::vector<std::size_t> group0, group1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) group0.push_back(i);
    else if (labels[i] == 1) group1.push_back(i);
    else throw ContractError("estimate_w1_embeddings labels must be binary");
  }
  if (group0.empty() || group1.empty()) {
    throw ContractError("both attribute groups need at least one row");
  }
  const std::size_t d = embeddings.cols();
  const std::size_t k = std::min(group0.size(), group1.size());

  double total = 0.0;
  for (int pi = 0; pi < projections; ++pi) {
    std::vector<double> direction(d);
    double norm = 0.0;
    for (auto& v : direction) {
      v = rng.normal(0.0, 1.0);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      direction[0] = 1.0;
      norm = 1.0;
    }
    for (auto& v : direction) v /= norm;

    auto project = [&](const std::vector<std::size_t>& rows) {
      std::vector<double> out;
      out.reserve(rows.size());
      for (std::size_t r : rows) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += embeddings.at(r, c) * direction[c];
        out.push_back(dot);
      }
      return out;
    };
    std::vector<double> s0 = project(group0);
    std::vector<double> s1 = project(group1);
    rng.shuffle(s0);
    rng.shuffle(s1);
    s0.resize(k);
    s1.resize(k);
    total += w1_sorted_1d(std::move(s0), std::move(s1));
  }
  return total / projections;
}

double binary_entropy_bits(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ContractError("binary entropy argument outside [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double conditional_entropy_bits(const std::vector<std::vector<double>>& joint) {
  if (joint.empty() || joint.front().empty()) throw ContractError("joint table is empty");
  const std::size_t cols = joint.front().size();
  double total_mass = 0.0;
  for (const auto& row : joint) {
    if (row.size() != cols) throw ContractError("joint table rows differ in width");
    for (double v : row) {
      if (!(v >= 0.0)) throw ContractError("joint table has negative mass");
      total_mass += v;
    }
  }
  if (std::abs(total_mass - 1.0) > 1e-9) throw ContractError("joint table does not sum to 1");

  double entropy = 0.0;
  for (const auto& row : joint) {
    double row_mass = 0.0;
    for (double v : row) row_mass += v;
    if (row_mass <= 0.0) continue;
    for (double v : row) {
      if (v > 0.0) entropy += v * std::log2(row_mass / v);
    }
  }
  return entropy;
}

double inv_entropy_lower_bound(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw ContractError("inverse entropy bound needs s in (0, 1]");
  return s / (2.0 * std::log2(6.0 / s));
}

void BoundInstance::validate() const {
  if (z_support.empty()) throw ContractError("instance needs support points");
  if (z_given_a0.size() != z_support.size() || z_given_a1.size() != z_support.size()) {
    throw ContractError("conditional mass lists must match the support");
  }
  validate_probs(z_given_a0, "p(z | A=0)");
  validate_probs(z_given_a1, "p(z | A=1)");
  double table_mass = 0.0;
  for (const auto& row : joint_ya) {
    for (double v : row) {
      if (!(v >= 0.0)) throw ContractError("joint (Y, A) table has negative mass");
      table_mass += v;
    }
  }
  if (std::abs(table_mass - 1.0) > kMassTolerance) {
    throw ContractError("joint (Y, A) table does not sum to 1");
  }
  if (!(lipschitz > 0.0)) throw ContractError("Lipschitz budget must be positive");
  if (!(radius > 0.0)) throw ContractError("radius must be positive");
  for (double z : z_support) {
    if (std::abs(z) > radius + kMassTolerance) {
      throw ContractError("support point outside the radius bound");
    }
  }
  const double a0 = prob_a0();
  if (!(a0 > 0.0 && a0 < 1.0)) throw ContractError("both attribute groups need positive mass");
}

double BoundInstance::prob_a0() const { return joint_ya[0][0] + joint_ya[1][0]; }

double BoundInstance::prob_y1_given(int a) const {
  const auto col = static_cast<std::size_t>(a);
  const double mass = joint_ya[0][col] + joint_ya[1][col];
  return joint_ya[1][col] / mass;
}

double BoundInstance::delta() const {
  return std::abs(prob_y1_given(0) - prob_y1_given(1));
}

std::vector<std::vector<double>> BoundInstance::joint_za() const {
  const double a0 = prob_a0();
  std::vector<std::vector<double>> joint(z_support.size(), std::vector<double>(2, 0.0));
  for (std::size_t i = 0; i < z_support.size(); ++i) {
    joint[i][0] = a0 * z_given_a0[i];
    joint[i][1] = (1.0 - a0) * z_given_a1[i];
  }
  return joint;
}

double BoundInstance::entropy_bits() const { return conditional_entropy_bits(joint_za()); }

double BoundInstance::w1() const {
  DiscreteDist p{z_support, z_given_a0};
  DiscreteDist q{z_support, z_given_a1};
  return w1_discrete(p, q);
}

std::vector<double> random_simplex(Rng& rng, std::size_t size) {
  if (size == 0) throw ContractError("simplex sample needs a positive size");
  std::vector<double> values(size);
  double total = 0.0;
  for (auto& v : values) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (auto& v : values) v /= total;
  return values;
}

BoundInstance random_bound_instance(Rng& rng, std::size_t support_size) {
  if (support_size < 2 || support_size > 16) {
    throw ContractError("instance support size must lie in [2, 16]");
  }
  BoundInstance inst;
  inst.radius = 1.0;
  inst.lipschitz = rng.uniform(0.1, 3.0);
  inst.z_support.resize(support_size);
  for (auto& z : inst.z_support) z = rng.uniform(-1.0, 1.0);
  inst.z_given_a0 = random_simplex(rng, support_size);
  inst.z_given_a1 = random_simplex(rng, support_size);
  std::vector<double> table = random_simplex(rng, 4);
  inst.joint_ya = {{{table[0], table[1]}, {table[2], table[3]}}};
  inst.validate();
  return inst;
}

std::vector<double> random_lipschitz_classifier(const BoundInstance& inst, Rng& rng) {
  const double w = rng.uniform(-inst.lipschitz, inst.lipschitz);
  const double b = rng.uniform(-0.5, 1.5);
  std::vector<double> h(inst.z_support.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = std::clamp(b + w * inst.z_support[i], 1e-9, 1.0 - 1e-9);
  }
  return h;
}

TradeoffReport check_tradeoff_bound(const BoundInstance& inst, const std::vector<double>& h) {
  inst.validate();
  if (h.size() != inst.z_support.size()) {
    throw ContractError("classifier must value every support point");
  }
  for (double v : h) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("classifier values must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      const double allowed =
          inst.lipschitz * std::abs(inst.z_support[i] - inst.z_support[j]) + 1e-12;
      if (std::abs(h[i] - h[j]) > allowed) {
        throw ContractError("classifier violates the Lipschitz budget");
      }
    }
  }

  TradeoffReport report;
  // Cross-entropy in nats; Y is independent of Z given A, so the error
  // splits over p(z | a) and p(y | a).
  for (int a = 0; a < 2; ++a) {
    const double y1 = inst.prob_y1_given(a);
    const std::vector<double>& pz = (a == 0) ? inst.z_given_a0 : inst.z_given_a1;
    double err = 0.0;
    for (std::size_t i = 0; i < pz.size(); ++i) {
      const double hv = std::clamp(h[i], 1e-12, 1.0 - 1e-12);
      err += pz[i] * (y1 * -std::log(hv) + (1.0 - y1) * -std::log(1.0 - hv));
    }
    (a == 0 ? report.eps_a0 : report.eps_a1) = err;
  }
  report.lhs = report.eps_a0 + report.eps_a1;

  const double advantage = advantage_bruteforce(inst.z_given_a0, inst.z_given_a1);
  report.rhs_w1 = inst.delta() - inst.lipschitz * inst.w1();
  report.rhs_adv = inst.delta() - 2.0 * inst.radius * inst.lipschitz * advantage;
  report.slack_w1 = report.lhs - report.rhs_w1;
  report.slack_chain = report.rhs_w1 - report.rhs_adv;
  report.holds = report.slack_w1 >= -1e-9 && report.slack_chain >= -1e-9;
  return report;
}

double min_error_exhaustive(const std::vector<double>& mass0, const std::vector<double>& mass1) {
  if (mass0.size() != mass1.size() || mass0.empty()) {
    throw ContractError("exhaustive search needs matching non-empty mass lists");
  }
  if (mass0.size() > 16) throw ContractError("exhaustive search is capped at 16 points");
  const std::size_t n = mass0.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Predicting 1 errs on the A=0 mass at z; predicting 0 errs on A=1.
      err += (mask & (1u << i)) ? mass0[i] : mass1[i];
    }
    best = std::min(best, err);
  }
  return best;
}

namespace {

// Dinic max-flow on doubles; small networks only.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : graph_(static_cast<std::size_t>(nodes)) {}

  void add_edge(int u, int v, double cap) {
    graph_[static_cast<std::size_t>(u)].push_back(
        {v, cap, graph_[static_cast<std::size_t>(v)].size()});
    graph_[static_cast<std::size_t>(v)].push_back(
        {u, 0.0, graph_[static_cast<std::size_t>(u)].size() - 1});
  }

  double run(int source, int sink) {
    double flow = 0.0;
    while (build_levels(source, sink)) {
      iter_.assign(graph_.size(), 0);
      while (true) {
        const double pushed =
            augment(source, sink, std::numeric_limits<double>::infinity());
        if (pushed <= kEps) break;
        flow += pushed;
      }
    }
    return flow;
  }

 private:
  static constexpr double kEps = 1e-15;
  struct Edge {
    int to;
    double cap;
    std::size_t rev;
  };

  bool build_levels(int source, int sink) {
    level_.assign(graph_.size(), -1);
    std::queue<int> queue;
    level_[static_cast<std::size_t>(source)] = 0;
    queue.push(source);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (const Edge& e : graph_[static_cast<std::size_t>(u)]) {
        if (e.cap > kEps && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(u)] + 1;
          queue.push(e.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
  }

  double augment(int u, int sink, double limit) {
    if (u == sink) return limit;
    for (std::size_t& k = iter_[static_cast<std::size_t>(u)];
         k < graph_[static_cast<std::size_t>(u)].size(); ++k) {
      Edge& e = graph_[static_cast<std::size_t>(u)][k];
      if (e.cap <= kEps ||
          level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(u)] + 1) {
        continue;
      }
      const double pushed = augment(e.to, sink, std::min(limit, e.cap));
      if (pushed > kEps) {
        e.cap -= pushed;
        graph_[static_cast<std::size_t>(e.to)][e.rev].cap += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
};

}  // namespace

double min_error_lipschitz_grid(const std::vector<double>& points,
                                const std::vector<double>& mass0,
                                const std::vector<double>& mass1, double lipschitz, int levels) {
  const std::size_t n = points.size();
  if (n == 0 || mass0.size() != n || mass1.size() != n) {
    throw ContractError("grid minimization needs matching point and mass lists");
  }
  if (levels < 2) throw ContractError("grid needs at least two output levels");
  if (!(lipschitz > 0.0)) throw ContractError("Lipschitz budget must be positive");
  const int top = levels - 1;
  const double inf = 1e18;

  // Chain node for "f_i >= l" per point i and level l in [1, top]; cutting
  // the chain between levels l and l+1 selects f_i = l and pays the error
  // mass of that prediction level.
  const int source = 0;
  const int sink = 1;
  auto chain_node = [&](std::size_t i, int l) {
    return 2 + static_cast<int>(i) * top + (l - 1);
  };
  MaxFlow flow(2 + static_cast<int>(n) * top);
  auto unary = [&](std::size_t i, int l) {
    const double value = static_cast<double>(l) / top;
    return mass0[i] * value + mass1[i] * (1.0 - value);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (int l = 0; l <= top; ++l) {
      const int from = (l == 0) ? source : chain_node(i, l);
      const int to = (l == top) ? sink : chain_node(i, l + 1);
      flow.add_edge(from, to, unary(i, l));
    }
    for (int l = 1; l < top; ++l) {
      flow.add_edge(chain_node(i, l + 1), chain_node(i, l), inf);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const long long step_budget = static_cast<long long>(
          std::floor(lipschitz * std::abs(points[i] - points[j]) * top + 1e-9));
      if (step_budget >= top) continue;  // no binding constraint
      // f_i >= l forces f_j >= l - budget.
      for (int l = static_cast<int>(step_budget) + 1; l <= top; ++l) {
        flow.add_edge(chain_node(i, l), chain_node(j, l - static_cast<int>(step_budget)), inf);
      }
    }
  }
  return flow.run(source, sink);
}

LeakageReport check_leakage_bound(const BoundInstance& inst) {
  inst.validate();
  if (inst.z_support.size() > 16) {
    throw ContractError("leakage check enumerates adversaries; support is capped at 16");
  }
  const double alpha = inst.prob_a0();
  std::vector<double> mass0(inst.z_support.size()), mass1(inst.z_support.size());
  for (std::size_t i = 0; i < inst.z_support.size(); ++i) {
    mass0[i] = alpha * inst.z_given_a0[i];
    mass1[i] = (1.0 - alpha) * inst.z_given_a1[i];
  }

  LeakageReport report;
  report.min_error_all = min_error_exhaustive(mass0, mass1);
  const double entropy = std::clamp(inst.entropy_bits(), 0.0, 1.0);
  report.bound_entropy = entropy > 0.0 ? inv_entropy_lower_bound(entropy) : 0.0;

  report.min_error_lipschitz =
      min_error_lipschitz_grid(inst.z_support, mass0, mass1, inst.lipschitz, 65);
  report.bound_w1 = std::min(alpha, 1.0 - alpha) * (1.0 - inst.lipschitz * inst.w1());

  report.slack_entropy = report.min_error_all - report.bound_entropy;
  report.slack_w1 = report.min_error_lipschitz - report.bound_w1;
  report.holds = report.slack_entropy >= -1e-9 && report.slack_w1 >= -1e-9;
  return report;
}

bool check_error_decomposition(const DiscreteDist& p, const DiscreteDist& q) {
  p.validate();
  q.validate();
  require_common_support(p, q);
  const std::size_t n = p.probs.size();
  if (n > 16) throw ContractError("decomposition check is capped at 16 points");
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double type1 = 0.0;  // predicting 1 under p
    double type2 = 0.0;  // predicting 0 under q
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) type1 += p.probs[i];
      else type2 += q.probs[i];
    }
    best = std::min(best, type1 + type2);
  }
  return std::abs((1.0 - advantage_bruteforce(p.probs, q.probs)) - best) <= 1e-12;
}

DiscreteDist pushforward(const DiscreteDist& dist, const std::vector<int>& image_index,
                         const std::vector<double>& new_points) {
  dist.validate();
  if (image_index.size() != dist.points.size()) {
    throw ContractError("pushforward needs one image per support point");
  }
  DiscreteDist out;
  out.points = new_points;
  out.probs.assign(new_points.size(), 0.0);
  for (std::size_t i = 0; i < image_index.size(); ++i) {
    const int target = image_index[i];
    if (target < 0 || static_cast<std::size_t>(target) >= new_points.size()) {
      throw ContractError("pushforward image index out of range");
    }
    out.probs[static_cast<std::size_t>(target)] += dist.probs[i];
  }
  return out;
}

}  // namespace gal
