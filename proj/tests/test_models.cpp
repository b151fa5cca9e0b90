#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gal/models.hpp"

using gal::EncoderConfig;
using gal::Graph;
using gal::HeadConfig;
using gal::ModelParams;
using gal::Tape;
using gal::Tensor;

namespace {

Graph cycle_graph(int n, int feature_dim, std::vector<double> features) {
  std::vector<gal::Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, std::nullopt});
  return gal::build_graph(n, edges, feature_dim, std::move(features), std::vector<int>(n, 0), {},
                          false);
}

// Plain-loop reference for the encoder forward pass.
std::vector<double> dense_encode(const Graph& g, const EncoderConfig& cfg,
                                 const ModelParams& params, const std::string& prefix) {
  std::size_t in = cfg.input_dim;
  std::vector<double> h = g.features;
  const std::size_t n = static_cast<std::size_t>(g.node_count);
  for (std::size_t layer = 0; layer < cfg.hidden_dims.size(); ++layer) {
    const std::string base = prefix + "l" + std::to_string(layer) + "/";
    const Tensor& w_self = params.at(base + "w_self");
    const Tensor& w_nbr = params.at(base + "w_nbr");
    const Tensor& bias = params.at(base + "bias");
    const std::size_t out = cfg.hidden_dims[layer];

    // Aggregate neighbor rows first.
    std::vector<double> agg(n * in, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<int> sources = g.adjacency[v];
      if (cfg.include_self_in_aggregate) sources.push_back(static_cast<int>(v));
      for (int u : sources) {
        for (std::size_t k = 0; k < in; ++k) {
          agg[v * in + k] += h[static_cast<std::size_t>(u) * in + k];
        }
      }
      if (cfg.aggregation == gal::Aggregation::kMean && !sources.empty()) {
        for (std::size_t k = 0; k < in; ++k) agg[v * in + k] /= sources.size();
      }
    }

    std::vector<double> next(n * out, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t j = 0; j < out; ++j) {
        double acc = bias.values[j];
        for (std::size_t k = 0; k < in; ++k) {
          acc += h[v * in + k] * w_self.values[k * out + j];
          acc += agg[v * in + k] * w_nbr.values[k * out + j];
        }
        if (layer + 1 < cfg.hidden_dims.size() && acc < 0.0) acc *= cfg.leaky_slope;
        next[v * out + j] = acc;
      }
    }
    h = std::move(next);
    in = out;
  }
  return h;
}

}  // namespace

TEST_CASE("encoder forward matches a dense plain-loop reference") {
  gal::Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    gal::SbmConfig sbm;
    sbm.block_count = 2;
    sbm.nodes_per_block = 8;
    sbm.p_in = 0.5;
    sbm.p_out = 0.2;
    sbm.seed = 100 + trial;
    Graph g = gal::generate_sbm(sbm);

    EncoderConfig cfg;
    cfg.input_dim = static_cast<std::size_t>(g.feature_dim);
    cfg.hidden_dims = {5, 3};
    cfg.aggregation = (trial % 2 == 0) ? gal::Aggregation::kMean : gal::Aggregation::kSum;
    cfg.include_self_in_aggregate = (trial % 3 == 0);
    ModelParams params = gal::init_encoder_params(cfg, "encoder/", rng);

    Tensor got = gal::encode_detached(g, cfg, params, "encoder/");
    std::vector<double> want = dense_encode(g, cfg, params, "encoder/");
    REQUIRE(got.values.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(got.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("relabeling nodes permutes embeddings exactly") {
  // Dyadic features and weights keep every intermediate sum exact, so the
  // equality below is bitwise, not approximate.
  const int n = 6;
  const std::size_t d = 2;
  std::vector<double> feats = {0.25,  -0.5, 0.75, 1.0,   -0.125, 0.5,
                               0.375, -1.0, 0.0,  0.625, -0.25,  0.875};
  Graph g = cycle_graph(n, static_cast<int>(d), feats);

  EncoderConfig cfg;
  cfg.input_dim = d;
  cfg.hidden_dims = {3, 2};
  cfg.leaky_slope = 0.5;
  ModelParams params;
  params["enc/l0/w_self"] = Tensor::matrix(2, 3, {0.5, -0.25, 0.125, 0.75, 0.0625, -0.5});
  params["enc/l0/w_nbr"] = Tensor::matrix(2, 3, {-0.125, 0.25, 0.5, 0.0625, -0.75, 0.375});
  params["enc/l0/bias"] = Tensor::matrix(1, 3, {0.25, -0.125, 0.0625});
  params["enc/l1/w_self"] = Tensor::matrix(3, 2, {0.5, 0.25, -0.125, 0.375, 0.0625, -0.25});
  params["enc/l1/w_nbr"] = Tensor::matrix(3, 2, {0.25, -0.5, 0.125, 0.0625, 0.375, -0.125});
  params["enc/l1/bias"] = Tensor::matrix(1, 2, {-0.0625, 0.125});

  Tensor base = gal::encode_detached(g, cfg, params, "enc/");

  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};  // new id of each old node
  std::vector<double> pfeats(feats.size());
  for (int v = 0; v < n; ++v) {
    for (std::size_t k = 0; k < d; ++k) pfeats[perm[v] * d + k] = feats[v * d + k];
  }
  std::vector<gal::Edge> pedges;
  for (const auto& e : g.edges) pedges.push_back({perm[e.u], perm[e.v], std::nullopt});
  Graph pg = gal::build_graph(n, pedges, static_cast<int>(d), pfeats, std::vector<int>(n, 0), {},
                              false);
  Tensor permuted = gal::encode_detached(pg, cfg, params, "enc/");

  for (int v = 0; v < n; ++v) {
    for (std::size_t k = 0; k < cfg.output_dim(); ++k) {
      CHECK(permuted.values[perm[v] * cfg.output_dim() + k] ==
            base.values[v * cfg.output_dim() + k]);
    }
  }
}

TEST_CASE("initialization respects fan-based bounds and zero biases") {
  EncoderConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden_dims = {16, 4};
  gal::Rng rng(7);
  ModelParams params = gal::init_encoder_params(cfg, "encoder/", rng);
  REQUIRE(params.size() == 6);

  const double bound0 = std::sqrt(6.0 / (8 + 16));
  for (double v : params.at("encoder/l0/w_self").values) {
    CHECK(std::abs(v) <= bound0);
  }
  for (double v : params.at("encoder/l0/bias").values) CHECK(v == 0.0);
  CHECK(params.at("encoder/l1/w_self").shape == std::vector<std::size_t>{16, 4});

  gal::Rng rng2(7);
  ModelParams again = gal::init_encoder_params(cfg, "encoder/", rng2);
  CHECK(again.at("encoder/l0/w_nbr").values == params.at("encoder/l0/w_nbr").values);
  gal::Rng rng3(8);
  ModelParams other = gal::init_encoder_params(cfg, "encoder/", rng3);
  CHECK(other.at("encoder/l0/w_nbr").values != params.at("encoder/l0/w_nbr").values);

  HeadConfig head;
  head.input_dim = 4;
  head.hidden_dim = 6;
  head.output_dim = 3;
  ModelParams hp = gal::init_head_params(head, "task/", rng);
  CHECK(hp.at("task/w0").shape == std::vector<std::size_t>{4, 6});
  CHECK(hp.at("task/w1").shape == std::vector<std::size_t>{6, 3});
  for (double v : hp.at("task/b0").values) CHECK(v == 0.0);
}

TEST_CASE("bilinear score matches hand computation") {
  // z_u = [1, 2], z_v = [3, 1], B = [[1, 0], [1, 1]]:
  // u^T B = [3, 2]; dot with v gives 9 + 2 = 11.
  Tape tape;
  ModelParams params;
  params["dec/B"] = Tensor::matrix(2, 2, {1.0, 0.0, 1.0, 1.0});
  ModelParams watched = gal::watch_all(tape, params);
  Tensor z = tape.constant(Tensor::matrix(2, 2, {1.0, 2.0, 3.0, 1.0}));
  Tensor s = gal::bilinear_scores(tape, watched, "dec/", z, {0, 0}, {1, 0});
  REQUIRE(s.shape == std::vector<std::size_t>{2, 1});
  CHECK(s.values[0] == doctest::Approx(11.0));
  // z_u^T B z_u = [3,2].[1,2] = 7.
  CHECK(s.values[1] == doctest::Approx(7.0));
}

TEST_CASE("head gradients match finite differences") {
  HeadConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.output_dim = 2;
  gal::Rng rng(11);
  ModelParams params = gal::init_head_params(cfg, "h/", rng);
  // Nudge biases off zero so their gradients are probed at a generic point.
  for (auto& v : params.at("h/b0").values) v = rng.uniform(-0.3, 0.3);
  for (auto& v : params.at("h/b1").values) v = rng.uniform(-0.3, 0.3);

  std::vector<std::string> order;
  std::vector<Tensor> flat;
  for (const auto& [name, tensor] : params) {
    order.push_back(name);
    flat.push_back(tensor);
  }
  Tensor input = Tensor::matrix(5, 3,
                                {0.3, -0.7, 1.2, 0.9, 0.4, -1.1, 1.4, -0.2, 0.6, -0.8, 0.35,
                                 1.05, 0.15, -1.3, 0.45});
  std::vector<int> labels = {0, 1, 1, 0, 1};

  auto program = [&](Tape& tape, std::vector<Tensor>& watched) {
    ModelParams wp;
    for (std::size_t i = 0; i < order.size(); ++i) wp[order[i]] = watched[i];
    Tensor logits = gal::head_forward(tape, wp, cfg, "h/", tape.constant(input));
    return tape.softmax_cross_entropy(logits, labels);
  };
  CHECK(gal::check_gradients(program, flat, 1e-5) < 1e-6);
}

TEST_CASE("encoder gradients match finite differences") {
  gal::SbmConfig sbm;
  sbm.block_count = 2;
  sbm.nodes_per_block = 5;
  sbm.p_in = 0.6;
  sbm.p_out = 0.3;
  sbm.seed = 21;
  Graph g = gal::generate_sbm(sbm);

  EncoderConfig cfg;
  cfg.input_dim = static_cast<std::size_t>(g.feature_dim);
  cfg.hidden_dims = {4, 2};
  gal::Rng rng(3);
  ModelParams params = gal::init_encoder_params(cfg, "e/", rng);

  std::vector<std::string> order;
  std::vector<Tensor> flat;
  for (const auto& [name, tensor] : params) {
    order.push_back(name);
    flat.push_back(tensor);
  }
  auto program = [&](Tape& tape, std::vector<Tensor>& watched) {
    ModelParams wp;
    for (std::size_t i = 0; i < order.size(); ++i) wp[order[i]] = watched[i];
    Tensor z = gal::encode(tape, wp, g, cfg, "e/");
    Tensor pooled = tape.mean_over_rows(z);  // 1 x d
    Tensor ones = tape.constant(Tensor::full(2, 1, 1.0));
    return tape.mean_over_rows(tape.matmul(pooled, ones));
  };
  CHECK(gal::check_gradients(program, flat, 1e-5) < 1e-6);
}

TEST_CASE("isolated node keeps only its self path") {
  // Node 2 is isolated: its aggregate row is zero, so with zero bias only the
  // self transform contributes.
  Graph g = gal::build_graph(3, {{0, 1, std::nullopt}}, 1, {1.0, 2.0, 4.0},
                             std::vector<int>(3, 0), {}, false);
  EncoderConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_dims = {1};
  ModelParams params;
  params["e/l0/w_self"] = Tensor::matrix(1, 1, {3.0});
  params["e/l0/w_nbr"] = Tensor::matrix(1, 1, {10.0});
  params["e/l0/bias"] = Tensor::matrix(1, 1, {0.0});
  Tensor z = gal::encode_detached(g, cfg, params, "e/");
  CHECK(z.values[0] == doctest::Approx(1.0 * 3 + 2.0 * 10));
  CHECK(z.values[1] == doctest::Approx(2.0 * 3 + 1.0 * 10));
  CHECK(z.values[2] == doctest::Approx(4.0 * 3));
}

TEST_CASE("parameter plumbing raises contract errors") {
  ModelParams a;
  a["x"] = Tensor::scalar(1.0);
  ModelParams b;
  b["x"] = Tensor::scalar(2.0);
  CHECK_THROWS_AS(gal::merge_params(a, b), gal::ContractError);

  Tape tape;
  EncoderConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden_dims = {1};
  Graph g = gal::build_graph(2, {{0, 1, std::nullopt}}, 1, {1.0, 2.0}, {0, 0}, {}, false);
  ModelParams empty;
  CHECK_THROWS_AS(gal::encode(tape, empty, g, cfg, "e/"), gal::ContractError);

  CHECK(gal::param_names_with_prefix(a, "x") == std::vector<std::string>{"x"});
  CHECK(gal::param_names_with_prefix(a, "y").empty());
}
