#include "gal/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "gal/common.hpp"
#include "gal/tape.hpp"

namespace gal {

namespace {

constexpr const char* kEncoderPrefix = "encoder/";
constexpr const char* kTaskPrefix = "task/";
constexpr const char* kAdversaryPrefix = "adv/";

void add_warning(std::vector<std::string>& warnings, const std::string& message) {
  if (std::find(warnings.begin(), warnings.end(), message) == warnings.end()) {
    warnings.push_back(message);
  }
}

HeadConfig adversary_head_config(const Graph& graph, const TrainingConfig& config) {
  HeadConfig head;
  head.input_dim = config.encoder.output_dim();
  head.hidden_dim = config.adversary_hidden_dim;
  head.output_dim = static_cast<std::size_t>(graph.sensitive_classes);
  head.leaky_slope = config.encoder.leaky_slope;
  return head;
}

HeadConfig task_head_config(const Graph& graph, const TrainingConfig& config) {
  HeadConfig head;
  head.input_dim = config.encoder.output_dim();
  head.hidden_dim = config.task_hidden_dim;
  head.output_dim = static_cast<std::size_t>(graph.node_target_classes);
  head.leaky_slope = config.encoder.leaky_slope;
  return head;
}

std::vector<int> node_pool(const Graph& graph, const TrainingConfig& config) {
  if (!config.task_node_ids.empty()) return config.task_node_ids;
  std::vector<int> pool(static_cast<std::size_t>(graph.node_count));
  std::iota(pool.begin(), pool.end(), 0);
  return pool;
}

std::vector<int> edge_pool(const Graph& graph, const TrainingConfig& config) {
  if (!config.task_edge_ids.empty()) return config.task_edge_ids;
  std::vector<int> pool;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (graph.edges[e].target.has_value()) pool.push_back(static_cast<int>(e));
  }
  return pool;
}

std::vector<int> all_nodes(const Graph& graph) {
  std::vector<int> pool(static_cast<std::size_t>(graph.node_count));
  std::iota(pool.begin(), pool.end(), 0);
  return pool;
}

std::vector<int> draw_batch(const std::vector<int>& pool, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0 || batch_size >= pool.size()) return pool;
  std::vector<int> copy = pool;
  rng.shuffle(copy);
  copy.resize(batch_size);
  return copy;
}

}  // namespace

void PairingPolicy::validate() const {
  if (kind == PairingKind::kNhop && hops < 1) {
    throw ConfigError("pairing hops must be at least 1");
  }
}

void TrainingConfig::validate(const Graph& graph) const {
  encoder.validate();
  pairing.validate();
  if (static_cast<std::size_t>(graph.feature_dim) != encoder.input_dim) {
    throw ConfigError("encoder input_dim must equal the graph feature dimension");
  }
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (adversary_period < 1) throw ConfigError("adversary_period must be at least 1");
  if (iterations < 0 || pretrain_iterations < 0) {
    throw ConfigError("iteration counts must be non-negative");
  }
  if (adversary == AdversaryKind::kWasserstein && clip <= 0.0) {
    throw ConfigError("wasserstein clip bound must be positive");
  }
  if (task == TaskKind::kNodeClassification) {
    if (graph.node_target_classes < 2) {
      throw ConfigError("node classification needs a graph with node targets");
    }
    for (int v : task_node_ids) {
      if (v < 0 || v >= graph.node_count) throw ConfigError("task_node_ids out of range");
    }
  } else {
    if (edge_pool(graph, *this).empty()) {
      throw ConfigError("edge regression needs edges with targets");
    }
    for (int e : task_edge_ids) {
      if (e < 0 || e >= static_cast<int>(graph.edges.size()) ||
          !graph.edges[static_cast<std::size_t>(e)].target.has_value()) {
        throw ConfigError("task_edge_ids must index edges with targets");
      }
    }
  }
  if (graph.sensitive_classes < 2) {
    throw ConfigError("training needs at least two sensitive attribute classes");
  }
}

Pairing pair_nodes(const Graph& graph, const PairingPolicy& policy, const std::vector<int>& batch,
                   Rng& rng) {
  policy.validate();
  Pairing pairing;
  pairing.requested = batch.size();
  for (int v : batch) {
    if (v < 0 || v >= graph.node_count) throw ContractError("pairing batch node out of range");
    switch (policy.kind) {
      case PairingKind::kNode:
        pairing.embed_nodes.push_back(v);
        pairing.label_nodes.push_back(v);
        break;
      case PairingKind::kNeighborhood: {
        const auto& nbrs = graph.adjacency[static_cast<std::size_t>(v)];
        if (nbrs.empty()) break;
        pairing.embed_nodes.push_back(v);
        pairing.label_nodes.push_back(nbrs[rng.uniform_index(nbrs.size())]);
        break;
      }
      case PairingKind::kNhop: {
        NhopResult walk = nhop_sample(graph, v, policy.hops, rng);
        if (!walk.accepted) break;
        pairing.embed_nodes.push_back(v);
        pairing.label_nodes.push_back(walk.endpoint);
        break;
      }
    }
  }
  return pairing;
}

ModelParams init_training_params(const Graph& graph, const TrainingConfig& config, Rng& rng) {
  config.validate(graph);
  ModelParams params = init_encoder_params(config.encoder, kEncoderPrefix, rng);
  if (config.task == TaskKind::kNodeClassification) {
    merge_params(params, init_head_params(task_head_config(graph, config), kTaskPrefix, rng));
  } else {
    merge_params(params, init_bilinear_params(config.encoder.output_dim(), kTaskPrefix, rng));
  }
  merge_params(params,
               init_head_params(adversary_head_config(graph, config), kAdversaryPrefix, rng));
  return params;
}

Tensor task_loss(Tape& tape, const ModelParams& watched, const Graph& graph,
                 const TrainingConfig& config, const std::vector<int>& batch) {
  if (batch.empty()) throw ContractError("task batch is empty");
  Tensor z = encode(tape, watched, graph, config.encoder, kEncoderPrefix);
  if (config.task == TaskKind::kNodeClassification) {
    Tensor rows = tape.row_gather(z, batch);
    Tensor logits =
        head_forward(tape, watched, task_head_config(graph, config), kTaskPrefix, rows);
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (int v : batch) labels.push_back(graph.node_targets[static_cast<std::size_t>(v)]);
    return tape.softmax_cross_entropy(logits, labels);
  }
  std::vector<int> us, vs;
  std::vector<double> targets;
  for (int e : batch) {
    const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
    if (!edge.target.has_value()) throw ContractError("edge batch member has no target");
    us.push_back(edge.u);
    vs.push_back(edge.v);
    targets.push_back(-*edge.target);
  }
  Tensor scores = bilinear_scores(tape, watched, kTaskPrefix, z, us, vs);
  Tensor diff = tape.add(scores, tape.constant(Tensor::matrix(targets.size(), 1, targets)));
  return tape.mean_over_rows(tape.elementwise_mul(diff, diff));
}

Tensor adversary_loss(Tape& tape, const ModelParams& watched, const Graph& graph,
                      const TrainingConfig& config, const Pairing& pairing, bool* degenerate) {
  if (degenerate != nullptr) *degenerate = false;
  if (pairing.embed_nodes.size() != pairing.label_nodes.size()) {
    throw ContractError("pairing lists differ in length");
  }
  if (pairing.embed_nodes.empty()) {
    if (degenerate != nullptr) *degenerate = true;
    return tape.constant(Tensor::scalar(0.0));
  }

  Tensor z = encode(tape, watched, graph, config.encoder, kEncoderPrefix);
  Tensor gathered = tape.row_gather(z, pairing.embed_nodes);
  Tensor reversed = tape.grad_reverse(gathered, config.lambda);
  HeadConfig head = adversary_head_config(graph, config);
  Tensor out = head_forward(tape, watched, head, kAdversaryPrefix, reversed);

  std::vector<int> labels;
  labels.reserve(pairing.label_nodes.size());
  for (int w : pairing.label_nodes) {
    labels.push_back(graph.sensitive[static_cast<std::size_t>(w)]);
  }

  if (config.adversary == AdversaryKind::kTotalVariation) {
    return tape.softmax_cross_entropy(out, labels);
  }

  // Wasserstein critic: per-class mean score, each class read off its own
  // output column. The critic minimizes (lowest mean - highest mean), i.e.
  // maximizes the gap; gradient reversal hands the encoder the opposite push.
  std::vector<std::vector<int>> rows_by_class(static_cast<std::size_t>(graph.sensitive_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rows_by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  }
  std::vector<int> present;
  for (std::size_t a = 0; a < rows_by_class.size(); ++a) {
    if (!rows_by_class[a].empty()) present.push_back(static_cast<int>(a));
  }
  if (present.size() < 2) {
    if (degenerate != nullptr) *degenerate = true;
    return tape.constant(Tensor::scalar(0.0));
  }

  const std::size_t k = head.output_dim;
  std::vector<Tensor> class_means;
  std::vector<double> mean_values;
  for (int a : present) {
    Tensor rows = tape.row_gather(out, rows_by_class[static_cast<std::size_t>(a)]);
    Tensor mean = tape.mean_over_rows(rows);  // 1 x k
    const std::size_t column = (k == 1) ? 0 : static_cast<std::size_t>(a);
    Tensor selector = Tensor::zeros(k, 1);
    selector.values[column] = 1.0;
    Tensor picked = tape.matmul(mean, tape.constant(selector));  // 1 x 1
    class_means.push_back(picked);
    mean_values.push_back(picked.values[0]);
  }
  const std::size_t hi = static_cast<std::size_t>(
      std::max_element(mean_values.begin(), mean_values.end()) - mean_values.begin());
  const std::size_t lo = static_cast<std::size_t>(
      std::min_element(mean_values.begin(), mean_values.end()) - mean_values.begin());
  return tape.add(class_means[lo], tape.scale(class_means[hi], -1.0));
}

Optimizer::Optimizer(OptimizerKind kind, double beta1, double beta2, double epsilon)
    : kind_(kind), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Optimizer::apply(ModelParams& params, const std::string& name,
                      const std::vector<double>& grad, double rate) {
  auto it = params.find(name);
  if (it == params.end()) throw ContractError("optimizer update for unknown parameter " + name);
  Tensor& value = it->second;
  if (grad.size() != value.values.size()) {
    throw DimensionError("gradient size does not match parameter " + name);
  }
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < grad.size(); ++i) value.values[i] -= rate * grad[i];
    return;
  }
  Slot& slot = state_[name];
  if (slot.m.empty()) {
    slot.m.assign(grad.size(), 0.0);
    slot.v.assign(grad.size(), 0.0);
  }
  slot.step += 1;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(slot.step));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(slot.step));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * grad[i];
    slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = slot.m[i] / bc1;
    const double v_hat = slot.v[i] / bc2;
    value.values[i] -= rate * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

void clip_params(ModelParams& params, const std::vector<std::string>& names, double bound) {
  if (bound <= 0.0) throw ContractError("clip bound must be positive");
  for (const auto& name : names) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("clip target missing: " + name);
    for (double& v : it->second.values) v = std::clamp(v, -bound, bound);
  }
}

TrainResult train(const Graph& graph, const TrainingConfig& config) {
  graph.validate();
  config.validate(graph);

  Rng root(config.seed);
  Rng init_rng = root.derive("init");
  Rng task_rng = root.derive("task-batch");
  Rng adv_rng = root.derive("adversary");

  TrainResult result;
  result.params = init_training_params(graph, config, init_rng);
  Optimizer opt(config.optimizer, config.adam_beta1, config.adam_beta2, config.adam_epsilon);

  const std::vector<int> task_pool = (config.task == TaskKind::kNodeClassification)
                                         ? node_pool(graph, config)
                                         : edge_pool(graph, config);
  if (task_pool.empty()) throw ConfigError("task supervision pool is empty");
  const std::vector<int> adversary_pool = all_nodes(graph);

  const std::vector<std::string> encoder_names =
      param_names_with_prefix(result.params, kEncoderPrefix);
  const std::vector<std::string> task_names = param_names_with_prefix(result.params, kTaskPrefix);
  const std::vector<std::string> adversary_names =
      param_names_with_prefix(result.params, kAdversaryPrefix);

  ModelParams last_good = result.params;
  const int total = config.pretrain_iterations + config.iterations;

  for (int iter = 0; iter < total; ++iter) {
    const auto started = std::chrono::steady_clock::now();
    const bool pretrain_phase = iter < config.pretrain_iterations;
    const bool adversary_scheduled =
        !pretrain_phase && ((iter - config.pretrain_iterations) % config.adversary_period == 0);

    // Both streams are consumed every iteration so step scheduling and
    // enable/disable toggles never shift later draws.
    std::vector<int> task_batch = draw_batch(task_pool, config.batch_size, task_rng);
    std::vector<int> adv_batch = draw_batch(adversary_pool, config.batch_size, adv_rng);
    Pairing pairing = pair_nodes(graph, config.pairing, adv_batch, adv_rng);
    if (pairing.requested > 0 && pairing.embed_nodes.size() * 2 <= pairing.requested) {
      add_warning(result.warnings,
                  "at least half of the adversary batch had no valid pairing partner");
    }

    try {
      Tape tape;
      ModelParams watched = watch_all(tape, result.params);
      Tensor tl = task_loss(tape, watched, graph, config, task_batch);
      bool degenerate = false;
      Tensor al = adversary_loss(tape, watched, graph, config, pairing, &degenerate);
      if (!std::isfinite(tl.values[0]) || !std::isfinite(al.values[0])) {
        throw NumericError("loss is not finite");
      }

      HistoryRow row;
      row.iteration = iter;
      row.kind = adversary_scheduled ? 'a' : 't';
      row.task_loss = tl.values[0];
      row.adversary_loss = al.values[0];
      row.lambda = config.lambda;

      if (adversary_scheduled) {
        const bool live = config.adversary_enabled && config.lambda > 0.0;
        if (live && degenerate) {
          add_warning(result.warnings,
                      config.adversary == AdversaryKind::kWasserstein
                          ? "adversary batch lacked two attribute classes; update skipped"
                          : "adversary batch had no pairs; update skipped");
        } else if (live) {
          tape.backward(al);
          // Encoder gradients already carry the reversal scale; the head
          // itself trains at lambda times the base rate.
          for (const auto& name : encoder_names) {
            opt.apply(result.params, name, tape.grad(watched.at(name)), config.learning_rate);
          }
          for (const auto& name : adversary_names) {
            opt.apply(result.params, name, tape.grad(watched.at(name)),
                      config.lambda * config.learning_rate);
          }
          if (config.adversary == AdversaryKind::kWasserstein) {
            clip_params(result.params, adversary_names, config.clip);
          }
        }
      } else {
        tape.backward(tl);
        for (const auto& name : encoder_names) {
          opt.apply(result.params, name, tape.grad(watched.at(name)), config.learning_rate);
        }
        for (const auto& name : task_names) {
          opt.apply(result.params, name, tape.grad(watched.at(name)), config.learning_rate);
        }
      }

      if (config.record_timings) {
        row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                           started)
                     .count();
      }
      result.history.push_back(row);
      last_good = result.params;
    } catch (const NumericError&) {
      result.aborted = true;
      result.abort_iteration = iter;
      result.params = last_good;
      add_warning(result.warnings, "non-finite loss at iteration " + std::to_string(iter) +
                                       "; rolled back to the last finite parameters");
      break;
    }
  }
  return result;
}

}  // namespace gal
