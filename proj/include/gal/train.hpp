#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gal/graph.hpp"
#include "gal/models.hpp"

namespace gal {

enum class AdversaryKind { kTotalVariation, kWasserstein };
enum class PairingKind { kNode, kNeighborhood, kNhop };
enum class TaskKind { kNodeClassification, kEdgeRegression };
enum class OptimizerKind { kSgd, kAdam };

// How the adversary pairs the embedding it reads with the node whose
// sensitive attribute it predicts.
struct PairingPolicy {
  PairingKind kind = PairingKind::kNode;
  int hops = 2;  // used by kNhop only

  void validate() const;
};

// A drawn batch of (embedding node, attribute owner) pairs. Batch members
// with no valid partner (isolated node, rejected walk) are dropped.
struct Pairing {
  std::vector<int> embed_nodes;
  std::vector<int> label_nodes;
  std::size_t requested = 0;
};

Pairing pair_nodes(const Graph& graph, const PairingPolicy& policy,
                   const std::vector<int>& batch, Rng& rng);

struct TrainingConfig {
  EncoderConfig encoder;
  TaskKind task = TaskKind::kNodeClassification;
  std::size_t task_hidden_dim = 16;
  AdversaryKind adversary = AdversaryKind::kTotalVariation;
  std::size_t adversary_hidden_dim = 16;
  PairingPolicy pairing;

  // Strength of the obfuscation pressure. Zero disables adversary updates
  // entirely; training is then byte-identical to adversary_enabled = false.
  double lambda = 1.0;
  bool adversary_enabled = true;

  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Wasserstein critic weights are clamped into [-clip, clip] after every
  // adversary update.
  double clip = 0.01;

  // Every adversary_period-th iteration is an adversary step (the first main
  // iteration is one); the rest are task steps.
  int adversary_period = 2;
  int iterations = 200;
  int pretrain_iterations = 0;  // task-only steps run before the main loop

  // 0 means the full supervision pool each step.
  std::size_t batch_size = 0;

  // Supervision pools; empty means every node (or every edge with a target).
  std::vector<int> task_node_ids;
  std::vector<int> task_edge_ids;

  std::uint64_t seed = 0;
  // Millisecond timings in history rows are written as 0 unless enabled, so
  // reruns stay byte-identical.
  bool record_timings = false;

  void validate(const Graph& graph) const;
};

struct HistoryRow {
  int iteration = 0;
  char kind = 't';  // 't' task step, 'a' adversary step
  double task_loss = 0.0;
  double adversary_loss = 0.0;
  double lambda = 0.0;
  double ms = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<HistoryRow> history;
  std::vector<std::string> warnings;
  bool aborted = false;     // non-finite loss; params roll back to last good
  int abort_iteration = -1;
};

// Fresh parameters for encoder ("encoder/"), task side ("task/"), and
// adversary head ("adv/"), drawn in that fixed order.
ModelParams init_training_params(const Graph& graph, const TrainingConfig& config, Rng& rng);

// Supervised loss on the batch: softmax cross-entropy over node classes, or
// mean squared error of bilinear edge scores against edge targets.
Tensor task_loss(Tape& tape, const ModelParams& watched, const Graph& graph,
                 const TrainingConfig& config, const std::vector<int>& batch);

// Adversary loss on gathered embeddings routed through gradient reversal.
// Total-variation flavor: cross-entropy of the attribute classifier.
// Wasserstein flavor: (lowest - highest) per-class mean critic score, which
// the critic minimizes to widen the gap. Sets *degenerate (and returns a
// constant zero) when the batch cannot support the loss: no pairs at all, or
// fewer than two attribute classes for the Wasserstein gap.
Tensor adversary_loss(Tape& tape, const ModelParams& watched, const Graph& graph,
                      const TrainingConfig& config, const Pairing& pairing, bool* degenerate);

// Per-parameter SGD/Adam with state keyed by parameter name.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double beta1, double beta2, double epsilon);

  // theta -= rate * g (SGD) or the Adam update with step size `rate`.
  void apply(ModelParams& params, const std::string& name, const std::vector<double>& grad,
             double rate);

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
  };
  OptimizerKind kind_;
  double beta1_, beta2_, epsilon_;
  std::map<std::string, Slot> state_;
};

// Clamps every value of every named parameter into [-bound, bound].
void clip_params(ModelParams& params, const std::vector<std::string>& names, double bound);

TrainResult train(const Graph& graph, const TrainingConfig& config);

}  // namespace gal
