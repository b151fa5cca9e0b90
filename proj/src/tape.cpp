#include "gal/tape.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <utility>

namespace gal {

namespace {

std::atomic<std::uint32_t> g_tape_counter{1};

void ensure_finite(const std::vector<double>& values, const char* kind, const char* role) {
  if (!all_finite(values)) {
    throw NumericError(std::string(kind) + ": non-finite " + role);
  }
}

void ensure_matrix(const Tensor& t, const char* kind) {
  if (t.shape.size() != 2) {
    throw DimensionError(std::string(kind) + ": expected a 2-d tensor, got shape " + t.shape_str());
  }
}

[[noreturn]] void shape_error(const char* kind, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(kind) + ": shapes " + a.shape_str() + " and " + b.shape_str() +
                       " do not conform");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  std::size_t expect = 1;
  for (std::size_t d : shape) expect *= d;
  if (shape.empty()) expect = 0;
  if (expect != values.size()) {
    throw DimensionError("tensor: shape " + shape_str() + " does not match " +
                         std::to_string(values.size()) + " values");
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

Tensor Tensor::row(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({1, n}, std::move(v));
}

Tensor Tensor::column(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n, 1}, std::move(v));
}

std::string Tensor::shape_str() const {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out.empty() ? "scalar" : out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Try progressively shorter forms that still round-trip.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(shorter, "%lf", &back);
    if (back == v) return shorter;
  }
  return buf;
}

Tape::Tape() : id_(g_tape_counter.fetch_add(1)) {}

Tensor Tape::record(const char* kind, std::vector<int> parents, std::vector<std::size_t> shape,
                    std::vector<double> values, BackwardFn backprop) {
  ensure_finite(values, kind, "output");
  Node node;
  node.parents = std::move(parents);
  node.out_size = values.size();
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  Tensor out(std::move(shape), std::move(values));
  out.node = static_cast<int>(nodes_.size()) - 1;
  out.tape_id = id_;
  return out;
}

Tensor Tape::bound(const Tensor& t, const char* kind) {
  if (t.detached()) return constant(t);
  if (t.tape_id != id_ || t.node >= static_cast<int>(nodes_.size())) {
    throw ContractError(std::string(kind) + ": tensor belongs to a different tape");
  }
  return t;
}

Tensor Tape::watch(const Tensor& value) {
  ensure_finite(value.values, "watch", "input");
  ensure_matrix(value, "watch");
  return record("watch", {}, value.shape, value.values, nullptr);
}

Tensor Tape::constant(const Tensor& value) {
  ensure_finite(value.values, "constant", "input");
  ensure_matrix(value, "constant");
  return record("constant", {}, value.shape, value.values, nullptr);
}

Tensor Tape::matmul(const Tensor& a_in, const Tensor& b_in) {
  Tensor a = bound(a_in, "matmul");
  Tensor b = bound(b_in, "matmul");
  ensure_matrix(a, "matmul");
  ensure_matrix(b, "matmul");
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.values[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        out[i * m + j] += av * b.values[p * m + j];
      }
    }
  }
  auto av = a.values;
  auto bv = b.values;
  int pa = a.node, pb = b.node;
  return record(
      "matmul", {pa, pb}, {n, m}, std::move(out),
      [av, bv, pa, pb, n, k, m](Tape& t, const std::vector<double>& up) {
        auto& ga = t.grad_buffer(pa);
        auto& gb = t.grad_buffer(pb);
        // dA = up * B^T, dB = A^T * up
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += up[i * m + j] * bv[p * m + j];
            ga[i * k + p] += acc;
          }
        }
        for (std::size_t p = 0; p < k; ++p) {
          for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += av[i * k + p] * up[i * m + j];
            gb[p * m + j] += acc;
          }
        }
      });
}

Tensor Tape::add(const Tensor& a_in, const Tensor& b_in) {
  Tensor a = bound(a_in, "add");
  Tensor b = bound(b_in, "add");
  if (!a.same_shape(b)) shape_error("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] + b.values[i];
  int pa = a.node, pb = b.node;
  return record("add", {pa, pb}, a.shape, std::move(out),
                [pa, pb](Tape& t, const std::vector<double>& up) {
                  auto& ga = t.grad_buffer(pa);
                  auto& gb = t.grad_buffer(pb);
                  for (std::size_t i = 0; i < up.size(); ++i) {
                    ga[i] += up[i];
                    gb[i] += up[i];
                  }
                });
}

Tensor Tape::elementwise_mul(const Tensor& a_in, const Tensor& b_in) {
  Tensor a = bound(a_in, "elementwise-mul");
  Tensor b = bound(b_in, "elementwise-mul");
  if (!a.same_shape(b)) shape_error("elementwise-mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] * b.values[i];
  auto av = a.values;
  auto bv = b.values;
  int pa = a.node, pb = b.node;
  return record("elementwise-mul", {pa, pb}, a.shape, std::move(out),
                [av, bv, pa, pb](Tape& t, const std::vector<double>& up) {
                  auto& ga = t.grad_buffer(pa);
                  auto& gb = t.grad_buffer(pb);
                  for (std::size_t i = 0; i < up.size(); ++i) {
                    ga[i] += up[i] * bv[i];
                    gb[i] += up[i] * av[i];
                  }
                });
}

Tensor Tape::leaky_relu(const Tensor& x_in, double negative_slope) {
  Tensor x = bound(x_in, "leaky-relu");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x.values[i] > 0.0 ? x.values[i] : negative_slope * x.values[i];
  }
  auto xv = x.values;
  int px = x.node;
  // The kink at exactly zero takes the negative-side slope.
  return record("leaky-relu", {px}, x.shape, std::move(out),
                [xv, px, negative_slope](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  for (std::size_t i = 0; i < up.size(); ++i) {
                    gx[i] += up[i] * (xv[i] > 0.0 ? 1.0 : negative_slope);
                  }
                });
}

Tensor Tape::sigmoid(const Tensor& x_in) {
  Tensor x = bound(x_in, "sigmoid");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.values[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  auto ov = out;
  int px = x.node;
  return record("sigmoid", {px}, x.shape, std::move(out),
                [ov, px](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  for (std::size_t i = 0; i < up.size(); ++i) {
                    gx[i] += up[i] * ov[i] * (1.0 - ov[i]);
                  }
                });
}

Tensor Tape::row_gather(const Tensor& x_in, const std::vector<int>& rows) {
  Tensor x = bound(x_in, "row-gather");
  ensure_matrix(x, "row-gather");
  const std::size_t n = x.rows(), d = x.cols();
  for (int r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= n) {
      throw ContractError("row-gather: row index " + std::to_string(r) + " out of range for " +
                          x.shape_str());
    }
  }
  std::vector<double> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x.values[rows[i] * d + j];
  }
  int px = x.node;
  auto idx = rows;
  return record("row-gather", {px}, {rows.size(), d}, std::move(out),
                [idx, px, d](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  for (std::size_t i = 0; i < idx.size(); ++i) {
                    for (std::size_t j = 0; j < d; ++j) {
                      gx[idx[i] * d + j] += up[i * d + j];
                    }
                  }
                });
}

Tensor Tape::mean_over_rows(const Tensor& x_in) {
  Tensor x = bound(x_in, "mean-over-rows");
  ensure_matrix(x, "mean-over-rows");
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) throw DimensionError("mean-over-rows: empty input");
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j] += x.values[i * d + j];
  }
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(n);
  int px = x.node;
  return record("mean-over-rows", {px}, {1, d}, std::move(out),
                [px, n, d](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  const double inv = 1.0 / static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += up[j] * inv;
                  }
                });
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts_in) {
  if (parts_in.empty()) throw ContractError("concat-rows: no operands");
  std::vector<Tensor> parts;
  parts.reserve(parts_in.size());
  for (const auto& p : parts_in) parts.push_back(bound(p, "concat-rows"));
  const std::size_t d = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    ensure_matrix(p, "concat-rows");
    if (p.cols() != d) shape_error("concat-rows", parts[0], p);
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * d);
  std::vector<int> parent_ids;
  std::vector<std::size_t> row_counts;
  for (const auto& p : parts) {
    out.insert(out.end(), p.values.begin(), p.values.end());
    parent_ids.push_back(p.node);
    row_counts.push_back(p.rows());
  }
  return record("concat-rows", parent_ids, {total, d}, std::move(out),
                [parent_ids, row_counts, d](Tape& t, const std::vector<double>& up) {
                  std::size_t offset = 0;
                  for (std::size_t k = 0; k < parent_ids.size(); ++k) {
                    auto& gp = t.grad_buffer(parent_ids[k]);
                    const std::size_t count = row_counts[k] * d;
                    for (std::size_t i = 0; i < count; ++i) gp[i] += up[offset + i];
                    offset += count;
                  }
                });
}

Tensor Tape::scale(const Tensor& x_in, double factor) {
  Tensor x = bound(x_in, "scale");
  if (!std::isfinite(factor)) throw NumericError("scale: non-finite factor");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values[i] * factor;
  int px = x.node;
  return record("scale", {px}, x.shape, std::move(out),
                [px, factor](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  for (std::size_t i = 0; i < up.size(); ++i) gx[i] += up[i] * factor;
                });
}

Tensor Tape::grad_reverse(const Tensor& x_in, double lambda) {
  if (!(lambda >= 0.0)) {
    throw ConfigError("grad-reverse: lambda must be nonnegative, got " + std::to_string(lambda));
  }
  Tensor x = bound(x_in, "grad-reverse");
  int px = x.node;
  std::vector<double> out = x.values;
  return record("grad-reverse", {px}, x.shape, std::move(out),
                [px, lambda](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  for (std::size_t i = 0; i < up.size(); ++i) gx[i] += up[i] * (-lambda);
                });
}

Tensor Tape::neighbor_aggregate(const Tensor& x_in,
                                const std::vector<std::vector<int>>& adjacency, Aggregation agg,
                                bool include_self) {
  Tensor x = bound(x_in, "neighbor-aggregate");
  ensure_matrix(x, "neighbor-aggregate");
  const std::size_t n = x.rows(), d = x.cols();
  if (adjacency.size() != n) {
    throw DimensionError("neighbor-aggregate: adjacency has " + std::to_string(adjacency.size()) +
                         " rows for input " + x.shape_str());
  }
  std::vector<double> out(n * d, 0.0);
  // Per-node coefficient applied to every aggregated source row.
  std::vector<double> coeff(n, 1.0);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t count = adjacency[v].size() + (include_self ? 1 : 0);
    if (agg == Aggregation::kMean) {
      coeff[v] = count == 0 ? 0.0 : 1.0 / static_cast<double>(count);
    }
    if (count == 0) continue;  // mean over an empty neighborhood stays zero
    if (include_self) {
      for (std::size_t j = 0; j < d; ++j) out[v * d + j] += x.values[v * d + j];
    }
    for (int u : adjacency[v]) {
      for (std::size_t j = 0; j < d; ++j) out[v * d + j] += x.values[u * d + j];
    }
    if (agg == Aggregation::kMean) {
      for (std::size_t j = 0; j < d; ++j) out[v * d + j] *= coeff[v];
    }
  }
  int px = x.node;
  const auto* adj = &adjacency;
  return record("neighbor-aggregate", {px}, {n, d}, std::move(out),
                [px, adj, coeff, n, d, include_self](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  for (std::size_t v = 0; v < n; ++v) {
                    const double c = coeff[v];
                    if (c == 0.0) continue;
                    if (include_self) {
                      for (std::size_t j = 0; j < d; ++j) gx[v * d + j] += up[v * d + j] * c;
                    }
                    for (int u : (*adj)[v]) {
                      for (std::size_t j = 0; j < d; ++j) gx[u * d + j] += up[v * d + j] * c;
                    }
                  }
                });
}

Tensor Tape::softmax_cross_entropy(const Tensor& logits_in, const std::vector<int>& labels) {
  Tensor logits = bound(logits_in, "softmax-cross-entropy");
  ensure_matrix(logits, "softmax-cross-entropy");
  const std::size_t n = logits.rows(), k = logits.cols();
  if (n == 0) throw ContractError("softmax-cross-entropy: empty batch");
  if (labels.size() != n) {
    throw DimensionError("softmax-cross-entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw ContractError("softmax-cross-entropy: label " + std::to_string(y) +
                          " out of range for " + std::to_string(k) + " classes");
    }
  }
  // Stable log-sum-exp per row; cache softmax rows for the backward pass.
  std::vector<double> softmax(n * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = logits.values[i * k];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits.values[i * k + j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      softmax[i * k + j] = std::exp(logits.values[i * k + j] - mx);
      sum += softmax[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) softmax[i * k + j] /= sum;
    loss += std::log(sum) + mx - logits.values[i * k + labels[i]];
  }
  loss /= static_cast<double>(n);
  int px = logits.node;
  auto lab = labels;
  return record("softmax-cross-entropy", {px}, {1, 1}, {loss},
                [px, softmax, lab, n, k](Tape& t, const std::vector<double>& up) {
                  auto& gx = t.grad_buffer(px);
                  const double u = up[0] / static_cast<double>(n);
                  for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < k; ++j) {
                      double g = softmax[i * k + j];
                      if (static_cast<std::size_t>(lab[i]) == j) g -= 1.0;
                      gx[i * k + j] += u * g;
                    }
                  }
                });
}

void Tape::backward(const Tensor& loss) {
  Tensor bound_loss = bound(loss, "backward");
  if (bound_loss.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + bound_loss.shape_str());
  }
  for (auto& node : nodes_) {
    node.grad.assign(node.out_size, 0.0);
    node.reached = false;
  }
  // Mark ancestors of the loss; tape order is already topological.
  std::vector<int> stack = {bound_loss.node};
  nodes_[bound_loss.node].reached = true;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int p : nodes_[i].parents) {
      if (!nodes_[p].reached) {
        nodes_[p].reached = true;
        stack.push_back(p);
      }
    }
  }
  nodes_[bound_loss.node].grad[0] = 1.0;
  for (int i = bound_loss.node; i >= 0; --i) {
    if (nodes_[i].reached && nodes_[i].backprop) {
      nodes_[i].backprop(*this, nodes_[i].grad);
    }
  }
  backward_done_ = true;
}

const std::vector<double>& Tape::grad(const Tensor& t) const {
  if (t.detached() || t.tape_id != id_ || t.node >= static_cast<int>(nodes_.size())) {
    throw ContractError("grad: tensor is not bound to this tape");
  }
  if (!backward_done_) throw ContractError("grad: backward has not run");
  return nodes_[t.node].grad;
}

bool Tape::reached(const Tensor& t) const {
  if (t.detached() || t.tape_id != id_ || t.node >= static_cast<int>(nodes_.size())) {
    throw ContractError("reached: tensor is not bound to this tape");
  }
  return nodes_[t.node].reached;
}

double check_gradients(const std::function<Tensor(Tape&, std::vector<Tensor>&)>& program,
                       const std::vector<Tensor>& params, double step) {
  if (step <= 0.0) throw ContractError("check-gradients: step must be positive");
  auto run = [&](const std::vector<Tensor>& values) {
    Tape tape;
    std::vector<Tensor> watched;
    watched.reserve(values.size());
    for (const auto& p : values) watched.push_back(tape.watch(p));
    Tensor loss = program(tape, watched);
    if (loss.size() != 1) throw ContractError("check-gradients: program must return a scalar");
    return loss.values[0];
  };

  Tape tape;
  std::vector<Tensor> watched;
  watched.reserve(params.size());
  for (const auto& p : params) watched.push_back(tape.watch(p));
  Tensor loss = program(tape, watched);
  tape.backward(loss);

  double worst = 0.0;
  std::vector<Tensor> probe = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const auto& analytic = tape.grad(watched[pi]);
    for (std::size_t c = 0; c < params[pi].size(); ++c) {
      const double orig = probe[pi].values[c];
      probe[pi].values[c] = orig + step;
      const double up = run(probe);
      probe[pi].values[c] = orig - step;
      const double down = run(probe);
      probe[pi].values[c] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(analytic[c] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace gal
