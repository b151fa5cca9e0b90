#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gal/graph.hpp"
#include "gal/tape.hpp"
#include "gal/tensor.hpp"

namespace gal {

// Message-passing encoder: each layer combines a node's own representation
// with an aggregate over its neighbors, adds a bias, and (except on the final
// layer) applies a leaky ReLU.
struct EncoderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;  // one entry per layer
  Aggregation aggregation = Aggregation::kMean;
  bool include_self_in_aggregate = false;
  double leaky_slope = 0.01;

  void validate() const;
  std::size_t output_dim() const;
};

// Two-layer MLP used for task heads, adversary heads, and probes.
struct HeadConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 16;
  std::size_t output_dim = 2;
  double leaky_slope = 0.01;

  void validate() const;
};

// Named parameter store. Keys are "<prefix><local name>", e.g.
// "encoder/l0/w_self". The map ordering makes iteration deterministic.
using ModelParams = std::map<std::string, Tensor>;

// Glorot-uniform weight init (bound sqrt(6 / (fan_in + fan_out))), zero
// biases. Draw order is fixed so a seed pins every value.
ModelParams init_encoder_params(const EncoderConfig& config, const std::string& prefix, Rng& rng);
ModelParams init_head_params(const HeadConfig& config, const std::string& prefix, Rng& rng);
ModelParams init_bilinear_params(std::size_t dim, const std::string& prefix, Rng& rng);

// Merges `from` into `into`; throws ContractError on duplicate names.
void merge_params(ModelParams& into, const ModelParams& from);

// Watches every tensor on the tape (map order), returning tracked copies.
ModelParams watch_all(Tape& tape, const ModelParams& params);

// Names in `params` that start with `prefix`, in map order.
std::vector<std::string> param_names_with_prefix(const ModelParams& params,
                                                 const std::string& prefix);

// Runs the encoder over the whole graph; returns an (n x output_dim) tensor.
Tensor encode(Tape& tape, const ModelParams& watched, const Graph& graph,
              const EncoderConfig& config, const std::string& prefix);

// MLP forward: rows of `input` are independent examples; returns logits.
Tensor head_forward(Tape& tape, const ModelParams& watched, const HeadConfig& config,
                    const std::string& prefix, const Tensor& input);

// Pairwise bilinear scores s_i = z[us[i]]^T B z[vs[i]], returned as (m x 1).
Tensor bilinear_scores(Tape& tape, const ModelParams& watched, const std::string& prefix,
                       const Tensor& embeddings, const std::vector<int>& us,
                       const std::vector<int>& vs);

// Convenience: encoder forward on a scratch tape, values only.
Tensor encode_detached(const Graph& graph, const EncoderConfig& config, const ModelParams& params,
                       const std::string& prefix);

}  // namespace gal
