#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gal/tensor.hpp"

namespace gal {

enum class Aggregation { kMean, kSum };

/// Define-by-run reverse-mode differentiation tape.
///
/// A forward pass records one node per operation; `backward` seeds the loss
/// with gradient 1 and walks the tape in reverse creation order, so gradient
/// accumulation order is fixed and runs are bit-reproducible. The tape is
/// rebuilt from scratch on every forward pass.
class Tape {
 public:
  Tape();

  /// Registers a differentiable leaf (a parameter). The returned tensor is
  /// bound to this tape; after `backward`, `grad` on it yields d(loss)/d(leaf).
  Tensor watch(const Tensor& value);

  /// Registers a non-differentiable leaf (input data, fixed coefficients).
  Tensor constant(const Tensor& value);

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor elementwise_mul(const Tensor& a, const Tensor& b);
  Tensor leaky_relu(const Tensor& x, double negative_slope);
  Tensor sigmoid(const Tensor& x);
  Tensor row_gather(const Tensor& x, const std::vector<int>& rows);
  Tensor mean_over_rows(const Tensor& x);
  Tensor concat_rows(const std::vector<Tensor>& parts);
  Tensor scale(const Tensor& x, double factor);

  /// Identity on the forward pass; multiplies the upstream gradient by
  /// -lambda on the backward pass. lambda must be nonnegative.
  Tensor grad_reverse(const Tensor& x, double lambda);

  /// Message-passing aggregation: out[v] = agg of x[u] over u in N(v),
  /// including v itself when include_self is set. Mean over an empty
  /// neighborhood yields a zero row. adjacency must outlive the tape pass.
  Tensor neighbor_aggregate(const Tensor& x, const std::vector<std::vector<int>>& adjacency,
                            Aggregation agg, bool include_self);

  /// Mean softmax cross-entropy over rows of `logits` against integer labels.
  Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

  /// Runs the reverse pass from a scalar loss. Only ancestors of the loss are
  /// visited; every other node keeps a zero gradient and reports unreached.
  void backward(const Tensor& loss);

  const std::vector<double>& grad(const Tensor& t) const;
  bool reached(const Tensor& t) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::uint32_t id() const { return id_; }

 private:
  using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

  struct Node {
    std::vector<int> parents;
    std::size_t out_size = 0;
    std::vector<double> grad;
    bool reached = false;
    BackwardFn backprop;  // empty for leaves and constants
  };

  Tensor record(const char* kind, std::vector<int> parents, std::vector<std::size_t> shape,
                std::vector<double> values, BackwardFn backprop);
  // Binds a tensor to this tape, promoting detached values to constants.
  Tensor bound(const Tensor& t, const char* kind);
  std::vector<double>& grad_buffer(int node) { return nodes_[node].grad; }

  std::uint32_t id_ = 0;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

/// Max relative gradient error of `program` against central finite
/// differences at the given step, over every coordinate of every parameter.
/// The relative error denominator is max(1, |numeric estimate|).
double check_gradients(
    const std::function<Tensor(Tape&, std::vector<Tensor>&)>& program,
    const std::vector<Tensor>& params, double step);

}  // namespace gal
