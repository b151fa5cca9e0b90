#include "gal/models.hpp"

#include <cmath>

#include "gal/common.hpp"

namespace gal {

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t = Tensor::zeros(rows, cols);
  for (auto& v : t.values) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_dim == 0) throw ConfigError("encoder input_dim must be positive");
  if (hidden_dims.empty()) throw ConfigError("encoder needs at least one layer");
  for (std::size_t d : hidden_dims) {
    if (d == 0) throw ConfigError("encoder layer dims must be positive");
  }
  if (leaky_slope < 0.0) throw ConfigError("leaky_slope must be non-negative");
}

std::size_t EncoderConfig::output_dim() const { return hidden_dims.back(); }

void HeadConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw ConfigError("head dims must be positive");
  }
  if (leaky_slope < 0.0) throw ConfigError("leaky_slope must be non-negative");
}

ModelParams init_encoder_params(const EncoderConfig& config, const std::string& prefix,
                                Rng& rng) {
  config.validate();
  ModelParams params;
  std::size_t in = config.input_dim;
  for (std::size_t layer = 0; layer < config.hidden_dims.size(); ++layer) {
    const std::size_t out = config.hidden_dims[layer];
    const std::string base = prefix + "l" + std::to_string(layer) + "/";
    params[base + "w_self"] = glorot(in, out, rng);
    params[base + "w_nbr"] = glorot(in, out, rng);
    params[base + "bias"] = Tensor::zeros(1, out);
    in = out;
  }
  return params;
}

ModelParams init_head_params(const HeadConfig& config, const std::string& prefix, Rng& rng) {
  config.validate();
  ModelParams params;
  params[prefix + "w0"] = glorot(config.input_dim, config.hidden_dim, rng);
  params[prefix + "b0"] = Tensor::zeros(1, config.hidden_dim);
  params[prefix + "w1"] = glorot(config.hidden_dim, config.output_dim, rng);
  params[prefix + "b1"] = Tensor::zeros(1, config.output_dim);
  return params;
}

ModelParams init_bilinear_params(std::size_t dim, const std::string& prefix, Rng& rng) {
  if (dim == 0) throw ConfigError("bilinear dim must be positive");
  ModelParams params;
  params[prefix + "B"] = glorot(dim, dim, rng);
  return params;
}

void merge_params(ModelParams& into, const ModelParams& from) {
  for (const auto& [name, tensor] : from) {
    if (!into.emplace(name, tensor).second) {
      throw ContractError("duplicate parameter name: " + name);
    }
  }
}

ModelParams watch_all(Tape& tape, const ModelParams& params) {
  ModelParams watched;
  for (const auto& [name, tensor] : params) {
    watched.emplace(name, tape.watch(tensor));
  }
  return watched;
}

std::vector<std::string> param_names_with_prefix(const ModelParams& params,
                                                 const std::string& prefix) {
  std::vector<std::string> names;
  for (const auto& [name, tensor] : params) {
    (void)tensor;
    if (name.rfind(prefix, 0) == 0) names.push_back(name);
  }
  return names;
}

namespace {

const Tensor& param(const ModelParams& watched, const std::string& name) {
  auto it = watched.find(name);
  if (it == watched.end()) throw ContractError("missing parameter: " + name);
  return it->second;
}

// Adds a (1 x d) bias row to every row of h via a ones-column product, so the
// whole expression stays inside the differentiable op set.
Tensor add_bias(Tape& tape, const Tensor& h, const Tensor& bias) {
  Tensor ones = tape.constant(Tensor::full(h.rows(), 1, 1.0));
  return tape.add(h, tape.matmul(ones, bias));
}

}  // namespace

Tensor encode(Tape& tape, const ModelParams& watched, const Graph& graph,
              const EncoderConfig& config, const std::string& prefix) {
  config.validate();
  if (static_cast<std::size_t>(graph.feature_dim) != config.input_dim) {
    throw DimensionError("encoder input_dim " + std::to_string(config.input_dim) +
                         " does not match graph feature_dim " +
                         std::to_string(graph.feature_dim));
  }
  Tensor h = tape.constant(Tensor::matrix(static_cast<std::size_t>(graph.node_count),
                                          static_cast<std::size_t>(graph.feature_dim),
                                          graph.features));
  for (std::size_t layer = 0; layer < config.hidden_dims.size(); ++layer) {
    const std::string base = prefix + "l" + std::to_string(layer) + "/";
    Tensor self_part = tape.matmul(h, param(watched, base + "w_self"));
    Tensor agg = tape.neighbor_aggregate(h, graph.adjacency, config.aggregation,
                                         config.include_self_in_aggregate);
    Tensor nbr_part = tape.matmul(agg, param(watched, base + "w_nbr"));
    h = add_bias(tape, tape.add(self_part, nbr_part), param(watched, base + "bias"));
    if (layer + 1 < config.hidden_dims.size()) {
      h = tape.leaky_relu(h, config.leaky_slope);
    }
  }
  return h;
}

Tensor head_forward(Tape& tape, const ModelParams& watched, const HeadConfig& config,
                    const std::string& prefix, const Tensor& input) {
  config.validate();
  if (input.cols() != config.input_dim) {
    throw DimensionError("head input_dim " + std::to_string(config.input_dim) +
                         " does not match input cols " + std::to_string(input.cols()));
  }
  Tensor hidden = add_bias(tape, tape.matmul(input, param(watched, prefix + "w0")),
                           param(watched, prefix + "b0"));
  hidden = tape.leaky_relu(hidden, config.leaky_slope);
  return add_bias(tape, tape.matmul(hidden, param(watched, prefix + "w1")),
                  param(watched, prefix + "b1"));
}

Tensor bilinear_scores(Tape& tape, const ModelParams& watched, const std::string& prefix,
                       const Tensor& embeddings, const std::vector<int>& us,
                       const std::vector<int>& vs) {
  if (us.size() != vs.size()) throw ContractError("bilinear index lists differ in length");
  if (us.empty()) throw ContractError("bilinear score needs at least one pair");
  Tensor left = tape.row_gather(embeddings, us);
  Tensor right = tape.row_gather(embeddings, vs);
  Tensor mixed = tape.elementwise_mul(tape.matmul(left, param(watched, prefix + "B")), right);
  Tensor ones = tape.constant(Tensor::full(mixed.cols(), 1, 1.0));
  return tape.matmul(mixed, ones);
}

Tensor encode_detached(const Graph& graph, const EncoderConfig& config, const ModelParams& params,
                       const std::string& prefix) {
  Tape tape;
  ModelParams watched = watch_all(tape, params);
  Tensor out = encode(tape, watched, graph, config, prefix);
  return Tensor(out.shape, out.values);  // strip the tape binding
}

}  // namespace gal
