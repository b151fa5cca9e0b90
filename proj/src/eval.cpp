#include "gal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gal/tape.hpp"

namespace gal {

double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted,
                int class_count) {
  if (truth.size() != predicted.size()) throw ContractError("macro_f1 size mismatch");
  if (truth.empty()) throw ContractError("macro_f1 needs at least one example");
  if (class_count < 1) throw ContractError("macro_f1 needs a positive class count");
  std::vector<long> tp(static_cast<std::size_t>(class_count), 0);
  std::vector<long> fp(static_cast<std::size_t>(class_count), 0);
  std::vector<long> fn(static_cast<std::size_t>(class_count), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= class_count || predicted[i] < 0 ||
        predicted[i] >= class_count) {
      throw ContractError("macro_f1 label outside [0, class_count)");
    }
    if (truth[i] == predicted[i]) {
      tp[static_cast<std::size_t>(truth[i])]++;
    } else {
      fn[static_cast<std::size_t>(truth[i])]++;
      fp[static_cast<std::size_t>(predicted[i])]++;
    }
  }
  double total = 0.0;
  for (int c = 0; c < class_count; ++c) {
    const auto idx = static_cast<std::size_t>(c);
    const double p_den = static_cast<double>(tp[idx] + fp[idx]);
    const double r_den = static_cast<double>(tp[idx] + fn[idx]);
    const double precision = p_den > 0 ? tp[idx] / p_den : 0.0;
    const double recall = r_den > 0 ? tp[idx] / r_den : 0.0;
    if (precision + recall > 0.0) {
      total += 2.0 * precision * recall / (precision + recall);
    }
  }
  return total / class_count;
}

std::optional<double> auc_binary(const std::vector<int>& truth,
                                 const std::vector<double>& scores) {
  if (truth.size() != scores.size()) throw ContractError("auc size mismatch");
  std::size_t positives = 0;
  for (int label : truth) {
    if (label != 0 && label != 1) return std::nullopt;
    positives += static_cast<std::size_t>(label);
  }
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  // Average ranks across ties, then apply the rank-sum identity.
  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(truth.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double positive_rank_sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] == 1) positive_rank_sum += rank[k];
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw ContractError("accuracy needs matching non-empty label lists");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double rmse(const std::vector<double>& truth, const std::vector<double>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw ContractError("rmse needs matching non-empty value lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - predicted[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(truth.size()));
}

double mae(const std::vector<double>& truth, const std::vector<double>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw ContractError("mae needs matching non-empty value lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) total += std::abs(truth[i] - predicted[i]);
  return total / static_cast<double>(truth.size());
}

void ProbeConfig::validate() const {
  pairing.validate();
  if (hidden_dim == 0) throw ConfigError("probe hidden_dim must be positive");
  if (iterations < 1) throw ConfigError("probe iterations must be positive");
  if (learning_rate <= 0.0) throw ConfigError("probe learning_rate must be positive");
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw ConfigError("probe test_fraction must lie in (0, 1)");
  }
}

namespace {

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out;
  out.reserve(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

int majority_class(const std::vector<int>& labels, int class_count) {
  std::vector<long> counts(static_cast<std::size_t>(class_count), 0);
  for (int label : labels) counts[static_cast<std::size_t>(label)]++;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Tensor gather_rows(const Tensor& source, const std::vector<int>& rows) {
  Tensor out = Tensor::zeros(rows.size(), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < source.cols(); ++c) {
      out.at(i, c) = source.at(static_cast<std::size_t>(rows[i]), c);
    }
  }
  return out;
}

}  // namespace

ProbeResult run_probe(const Graph& graph, const Tensor& embeddings, const ProbeConfig& config) {
  graph.validate();
  config.validate();
  if (embeddings.rows() != static_cast<std::size_t>(graph.node_count)) {
    throw DimensionError("embeddings must have one row per node");
  }
  if (graph.sensitive_classes < 2) {
    throw ContractError("probe needs at least two sensitive attribute classes");
  }

  ProbeResult result;
  Rng root(config.seed);

  // One pair per node; the attribute owner decides the split side.
  Rng pair_rng = root.derive("probe-pairs");
  std::vector<int> everyone(static_cast<std::size_t>(graph.node_count));
  std::iota(everyone.begin(), everyone.end(), 0);
  Pairing pairing = pair_nodes(graph, config.pairing, everyone, pair_rng);
  if (pairing.embed_nodes.empty()) throw ContractError("probe produced no pairs");

  NodeSplit split = split_nodes(graph, config.test_fraction, root.derive("probe-split").seed());
  std::vector<char> in_test(static_cast<std::size_t>(graph.node_count), 0);
  for (int v : split.test_nodes) in_test[static_cast<std::size_t>(v)] = 1;

  std::vector<int> train_rows, test_rows, train_labels, test_labels;
  for (std::size_t i = 0; i < pairing.embed_nodes.size(); ++i) {
    const int owner = pairing.label_nodes[i];
    const int label = graph.sensitive[static_cast<std::size_t>(owner)];
    if (in_test[static_cast<std::size_t>(owner)]) {
      test_rows.push_back(pairing.embed_nodes[i]);
      test_labels.push_back(label);
    } else {
      train_rows.push_back(pairing.embed_nodes[i]);
      train_labels.push_back(label);
    }
  }
  if (train_rows.empty() || test_rows.empty()) {
    throw ContractError("probe split left an empty train or test side");
  }
  result.train_pairs = train_rows.size();
  result.test_pairs = test_rows.size();

  const int classes = graph.sensitive_classes;
  const int majority = majority_class(train_labels, classes);
  std::vector<int> predictions;

  const bool single_class =
      std::all_of(train_labels.begin(), train_labels.end(),
                  [&](int label) { return label == train_labels.front(); });
  if (single_class) {
    result.constant_predictor = true;
    result.warnings.push_back(
        "probe training pairs hold a single attribute class; using a constant predictor");
    predictions.assign(test_rows.size(), train_labels.front());
    if (classes == 2) {
      result.probe_auc = auc_binary(test_labels, std::vector<double>(test_labels.size(), 0.0));
    }
  } else {
    HeadConfig head;
    head.input_dim = embeddings.cols();
    head.hidden_dim = config.hidden_dim;
    head.output_dim = static_cast<std::size_t>(classes);
    head.leaky_slope = config.leaky_slope;
    Rng init_rng = root.derive("probe-init");
    ModelParams params = init_head_params(head, "probe/", init_rng);
    Optimizer opt(config.optimizer, config.adam_beta1, config.adam_beta2, config.adam_epsilon);

    const Tensor train_x = gather_rows(embeddings, train_rows);
    for (int it = 0; it < config.iterations; ++it) {
      Tape tape;
      ModelParams watched = watch_all(tape, params);
      Tensor logits = head_forward(tape, watched, head, "probe/", tape.constant(train_x));
      Tensor loss = tape.softmax_cross_entropy(logits, train_labels);
      tape.backward(loss);
      for (const auto& name : param_names_with_prefix(params, "probe/")) {
        opt.apply(params, name, tape.grad(watched.at(name)), config.learning_rate);
      }
    }

    Tape tape;
    ModelParams watched = watch_all(tape, params);
    Tensor logits =
        head_forward(tape, watched, head, "probe/", tape.constant(gather_rows(embeddings,
                                                                              test_rows)));
    predictions = argmax_rows(logits);
    if (classes == 2) {
      std::vector<double> margins;
      margins.reserve(logits.rows());
      for (std::size_t r = 0; r < logits.rows(); ++r) {
        margins.push_back(logits.at(r, 1) - logits.at(r, 0));
      }
      result.probe_auc = auc_binary(test_labels, margins);
    }
  }

  result.probe_macro_f1 = macro_f1(test_labels, predictions, classes);
  result.probe_accuracy = accuracy(test_labels, predictions);
  const std::vector<int> baseline(test_labels.size(), majority);
  result.baseline_macro_f1 = macro_f1(test_labels, baseline, classes);
  result.baseline_accuracy = accuracy(test_labels, baseline);
  return result;
}

TaskEvaluation evaluate_task(const Graph& graph, const ModelParams& params,
                             const TrainingConfig& config, const std::vector<int>& eval_ids) {
  if (eval_ids.empty()) throw ContractError("evaluate_task needs at least one id");
  TaskEvaluation eval;
  Tape tape;
  ModelParams watched = watch_all(tape, params);

  if (config.task == TaskKind::kNodeClassification) {
    Tensor z = encode(tape, watched, graph, config.encoder, "encoder/");
    HeadConfig head;
    head.input_dim = config.encoder.output_dim();
    head.hidden_dim = config.task_hidden_dim;
    head.output_dim = static_cast<std::size_t>(graph.node_target_classes);
    head.leaky_slope = config.encoder.leaky_slope;
    Tensor logits =
        head_forward(tape, watched, head, "task/", tape.row_gather(z, eval_ids));
    std::vector<int> truth;
    truth.reserve(eval_ids.size());
    for (int v : eval_ids) truth.push_back(graph.node_targets[static_cast<std::size_t>(v)]);
    eval.task_macro_f1 = macro_f1(truth, argmax_rows(logits), graph.node_target_classes);
    eval.task_accuracy = accuracy(truth, argmax_rows(logits));
    if (graph.node_target_classes == 2) {
      std::vector<double> margins;
      for (std::size_t r = 0; r < logits.rows(); ++r) {
        margins.push_back(logits.at(r, 1) - logits.at(r, 0));
      }
      eval.task_auc = auc_binary(truth, margins);
    }
  } else {
    Tensor z = encode(tape, watched, graph, config.encoder, "encoder/");
    std::vector<int> us, vs;
    std::vector<double> truth;
    for (int e : eval_ids) {
      const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
      if (!edge.target.has_value()) throw ContractError("eval edge has no target");
      us.push_back(edge.u);
      vs.push_back(edge.v);
      truth.push_back(*edge.target);
    }
    Tensor scores = bilinear_scores(tape, watched, "task/", z, us, vs);
    eval.task_rmse = rmse(truth, scores.values);
    eval.task_mae = mae(truth, scores.values);
  }
  return eval;
}

}  // namespace gal
