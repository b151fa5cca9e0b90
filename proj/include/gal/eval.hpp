#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gal/graph.hpp"
#include "gal/train.hpp"

namespace gal {

// Unweighted mean F1 over all `class_count` classes; a class with zero
// precision and recall contributes zero.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted,
                int class_count);

// Rank-based AUC with tie averaging for binary labels; empty when either
// class is missing or a label outside {0, 1} appears.
std::optional<double> auc_binary(const std::vector<int>& truth,
                                 const std::vector<double>& scores);

double accuracy(const std::vector<int>& truth, const std::vector<int>& predicted);
double rmse(const std::vector<double>& truth, const std::vector<double>& predicted);
double mae(const std::vector<double>& truth, const std::vector<double>& predicted);

// A leakage probe: a fresh MLP trained to recover the sensitive attribute of
// a paired node from a frozen embedding. Pair labels are split by the node
// that owns the attribute, so no attribute used in training is scored.
struct ProbeConfig {
  PairingPolicy pairing;
  std::size_t hidden_dim = 16;
  int iterations = 300;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double leaky_slope = 0.01;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ProbeResult {
  double probe_macro_f1 = 0.0;
  std::optional<double> probe_auc;
  double probe_accuracy = 0.0;
  // Majority-vote baseline fitted on the probe training pairs.
  double baseline_macro_f1 = 0.0;
  double baseline_accuracy = 0.0;
  std::size_t train_pairs = 0;
  std::size_t test_pairs = 0;
  bool constant_predictor = false;  // degenerate single-class training set
  std::vector<std::string> warnings;
};

ProbeResult run_probe(const Graph& graph, const Tensor& embeddings, const ProbeConfig& config);

// Task-side quality of a trained model on held-out ids (node ids for
// classification, edge ids for regression).
struct TaskEvaluation {
  std::optional<double> task_macro_f1;
  std::optional<double> task_auc;
  std::optional<double> task_accuracy;
  std::optional<double> task_rmse;
  std::optional<double> task_mae;
};

TaskEvaluation evaluate_task(const Graph& graph, const ModelParams& params,
                             const TrainingConfig& config, const std::vector<int>& eval_ids);

}  // namespace gal
