#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "gal/tape.hpp"
#include "gal/train.hpp"

using gal::AdversaryKind;
using gal::Graph;
using gal::ModelParams;
using gal::Pairing;
using gal::PairingKind;
using gal::Tape;
using gal::TaskKind;
using gal::Tensor;
using gal::TrainingConfig;

namespace {

Graph four_node_graph(std::vector<int> sensitive, std::vector<int> targets) {
  return gal::build_graph(4, {{0, 1, std::nullopt}, {2, 3, std::nullopt}}, 1,
                          {1.0, -0.5, 0.25, 2.0}, std::move(sensitive), std::move(targets),
                          false);
}

TrainingConfig base_config(const Graph& g) {
  TrainingConfig cfg;
  cfg.encoder.input_dim = static_cast<std::size_t>(g.feature_dim);
  cfg.encoder.hidden_dims = {3, 2};
  cfg.seed = 5;
  return cfg;
}

void zero_prefix(ModelParams& params, const std::string& prefix) {
  for (auto& [name, tensor] : params) {
    if (name.rfind(prefix, 0) == 0) {
      for (double& v : tensor.values) v = 0.0;
    }
  }
}

std::vector<int> all_nodes(const Graph& g) {
  std::vector<int> ids(static_cast<std::size_t>(g.node_count));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

TEST_CASE("cross-entropy losses hit log(k) for zeroed heads") {
  Graph g2 = four_node_graph({0, 1, 0, 1}, {0, 0, 1, 1});
  TrainingConfig cfg = base_config(g2);
  gal::Rng rng(1);
  ModelParams params = gal::init_training_params(g2, cfg, rng);
  zero_prefix(params, "task/");
  zero_prefix(params, "adv/");

  Tape tape;
  ModelParams watched = gal::watch_all(tape, params);
  Tensor tl = gal::task_loss(tape, watched, g2, cfg, all_nodes(g2));
  CHECK(tl.values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Pairing pairing = gal::pair_nodes(g2, cfg.pairing, all_nodes(g2), rng);
  bool degenerate = true;
  Tensor al = gal::adversary_loss(tape, watched, g2, cfg, pairing, &degenerate);
  CHECK_FALSE(degenerate);
  CHECK(al.values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Graph g4 = four_node_graph({0, 1, 2, 3}, {0, 0, 1, 1});
  ModelParams params4 = gal::init_training_params(g4, cfg, rng);
  zero_prefix(params4, "adv/");
  Tape tape4;
  ModelParams watched4 = gal::watch_all(tape4, params4);
  Pairing pairing4 = gal::pair_nodes(g4, cfg.pairing, all_nodes(g4), rng);
  Tensor al4 = gal::adversary_loss(tape4, watched4, g4, cfg, pairing4, nullptr);
  CHECK(al4.values[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("wasserstein critic loss is the negated class-mean gap") {
  Graph g = four_node_graph({0, 1, 0, 1}, {0, 0, 1, 1});
  TrainingConfig cfg = base_config(g);
  cfg.adversary = AdversaryKind::kWasserstein;
  gal::Rng rng(2);
  ModelParams params = gal::init_training_params(g, cfg, rng);

  // Zero critic: every score is zero, so the gap is zero.
  ModelParams zeroed = params;
  zero_prefix(zeroed, "adv/");
  {
    Tape tape;
    ModelParams watched = gal::watch_all(tape, zeroed);
    Pairing pairing = gal::pair_nodes(g, cfg.pairing, all_nodes(g), rng);
    bool degenerate = true;
    Tensor al = gal::adversary_loss(tape, watched, g, cfg, pairing, &degenerate);
    CHECK_FALSE(degenerate);
    CHECK(al.values[0] == 0.0);
  }

  // Constant rows [1, 0.5]: class 0 reads 1.0 from column 0, class 1 reads
  // 0.5 from column 1, so the loss is 0.5 - 1.0 = -0.5.
  ModelParams constant = params;
  zero_prefix(constant, "adv/");
  constant.at("adv/b1").values = {1.0, 0.5};
  {
    Tape tape;
    ModelParams watched = gal::watch_all(tape, constant);
    Pairing pairing = gal::pair_nodes(g, cfg.pairing, all_nodes(g), rng);
    Tensor al = gal::adversary_loss(tape, watched, g, cfg, pairing, nullptr);
    CHECK(al.values[0] == doctest::Approx(-0.5).epsilon(1e-12));
  }

  // Single attribute class in the batch cannot support a gap.
  {
    Tape tape;
    ModelParams watched = gal::watch_all(tape, constant);
    Pairing pairing = gal::pair_nodes(g, cfg.pairing, {0, 2}, rng);  // both class 0
    bool degenerate = false;
    Tensor al = gal::adversary_loss(tape, watched, g, cfg, pairing, &degenerate);
    CHECK(degenerate);
    CHECK(al.values[0] == 0.0);
  }
}

TEST_CASE("edge regression loss is the mean squared bilinear residual") {
  Graph g = gal::build_graph(2, {{0, 1, 1.5}}, 1, {1.0, 2.0}, {0, 1}, {}, true);
  TrainingConfig cfg;
  cfg.encoder.input_dim = 1;
  cfg.encoder.hidden_dims = {1};
  cfg.task = TaskKind::kEdgeRegression;
  gal::Rng rng(3);
  ModelParams params = gal::init_training_params(g, cfg, rng);
  params.at("encoder/l0/w_self").values = {1.0};
  params.at("encoder/l0/w_nbr").values = {0.0};
  params.at("task/B").values = {1.0};

  Tape tape;
  ModelParams watched = gal::watch_all(tape, params);
  // z = [[1], [2]]; score = 1 * 1 * 2 = 2; residual 0.5; loss 0.25.
  Tensor tl = gal::task_loss(tape, watched, g, cfg, {0});
  CHECK(tl.values[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("pairing policies draw valid partners") {
  Graph star = gal::build_graph(5,
                                {{0, 1, std::nullopt},
                                 {0, 2, std::nullopt},
                                 {0, 3, std::nullopt},
                                 {0, 4, std::nullopt}},
                                1, std::vector<double>(5, 0.0), {0, 1, 0, 1, 0}, {}, false);
  gal::Rng rng(4);

  gal::PairingPolicy node_policy;
  Pairing identity = gal::pair_nodes(star, node_policy, {2, 0, 4}, rng);
  CHECK(identity.embed_nodes == std::vector<int>{2, 0, 4});
  CHECK(identity.label_nodes == std::vector<int>{2, 0, 4});

  gal::PairingPolicy nbr_policy;
  nbr_policy.kind = PairingKind::kNeighborhood;
  for (int trial = 0; trial < 20; ++trial) {
    Pairing p = gal::pair_nodes(star, nbr_policy, {1, 2, 3, 4}, rng);
    CHECK(p.label_nodes == std::vector<int>{0, 0, 0, 0});  // leaves pair with the hub
  }

  gal::PairingPolicy hop_policy;
  hop_policy.kind = PairingKind::kNhop;
  hop_policy.hops = 2;
  Pairing hop = gal::pair_nodes(star, hop_policy, {1, 1, 1, 1}, rng);
  CHECK(hop.requested == 4);
  for (std::size_t i = 0; i < hop.embed_nodes.size(); ++i) {
    auto dist = gal::bfs_distance(star, hop.embed_nodes[i], hop.label_nodes[i]);
    REQUIRE(dist.has_value());
    CHECK(*dist >= 1);
    CHECK(*dist <= 2);
  }

  // Isolated nodes are dropped rather than paired.
  Graph lonely = gal::build_graph(3, {{0, 1, std::nullopt}}, 1, {0.0, 0.0, 0.0}, {0, 1, 0}, {},
                                  false);
  Pairing dropped = gal::pair_nodes(lonely, nbr_policy, {0, 1, 2}, rng);
  CHECK(dropped.requested == 3);
  CHECK(dropped.embed_nodes == std::vector<int>{0, 1});

  gal::Rng r1(9), r2(9);
  Pairing a = gal::pair_nodes(star, nbr_policy, {1, 2, 3}, r1);
  Pairing b = gal::pair_nodes(star, nbr_policy, {1, 2, 3}, r2);
  CHECK(a.label_nodes == b.label_nodes);
}

TEST_CASE("optimizer steps match hand-evaluated formulas") {
  ModelParams params;
  params["p"] = Tensor::row({1.0});
  gal::Optimizer sgd(gal::OptimizerKind::kSgd, 0.9, 0.999, 1e-8);
  sgd.apply(params, "p", {2.0}, 0.01);
  CHECK(params.at("p").values[0] == doctest::Approx(0.98).epsilon(1e-15));

  ModelParams aparams;
  aparams["p"] = Tensor::row({1.0});
  gal::Optimizer adam(gal::OptimizerKind::kAdam, 0.9, 0.999, 1e-8);
  adam.apply(aparams, "p", {2.0}, 0.01);
  const double m_hat = (0.1 * 2.0) / (1.0 - 0.9);
  const double v_hat = (0.001 * 4.0) / (1.0 - 0.999);
  const double expected = 1.0 - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(aparams.at("p").values[0] == expected);

  // Second step uses the accumulated moments and bias corrections.
  adam.apply(aparams, "p", {-1.0}, 0.01);
  const double m2 = 0.9 * 0.2 + 0.1 * -1.0;
  const double v2 = 0.999 * 0.004 + 0.001 * 1.0;
  const double expected2 = expected - 0.01 * (m2 / (1.0 - 0.81)) /
                                          (std::sqrt(v2 / (1.0 - 0.999 * 0.999)) + 1e-8);
  CHECK(aparams.at("p").values[0] == doctest::Approx(expected2).epsilon(1e-15));
}

TEST_CASE("clip clamps every named parameter into the band") {
  ModelParams params;
  params["adv/w"] = Tensor::row({-5.0, 0.003, 5.0});
  params["other"] = Tensor::row({9.0});
  gal::clip_params(params, {"adv/w"}, 0.01);
  CHECK(params.at("adv/w").values == std::vector<double>{-0.01, 0.003, 0.01});
  CHECK(params.at("other").values[0] == 9.0);  // untouched: not named
  CHECK_THROWS_AS(gal::clip_params(params, {"missing"}, 0.01), gal::ContractError);
}

TEST_CASE("one adversary step applies reversal-scaled rates per parameter group") {
  gal::SbmConfig sbm;
  sbm.nodes_per_block = 10;
  sbm.p_in = 0.4;
  sbm.p_out = 0.1;
  sbm.seed = 77;
  Graph g = gal::generate_sbm(sbm);

  TrainingConfig cfg;
  cfg.encoder.input_dim = static_cast<std::size_t>(g.feature_dim);
  cfg.encoder.hidden_dims = {4, 2};
  cfg.optimizer = gal::OptimizerKind::kSgd;
  cfg.learning_rate = 0.25;
  cfg.lambda = 0.5;
  cfg.iterations = 1;
  cfg.seed = 13;

  // Replay what the loop does for its first (adversary) iteration.
  gal::Rng root(cfg.seed);
  gal::Rng init_rng = root.derive("init");
  ModelParams init = gal::init_training_params(g, cfg, init_rng);
  gal::Rng adv_rng = root.derive("adversary");
  Pairing pairing = gal::pair_nodes(g, cfg.pairing, all_nodes(g), adv_rng);

  Tape tape;
  ModelParams watched = gal::watch_all(tape, init);
  Tensor al = gal::adversary_loss(tape, watched, g, cfg, pairing, nullptr);
  tape.backward(al);

  ModelParams expected = init;
  for (auto& [name, tensor] : expected) {
    const double rate = name.rfind("encoder/", 0) == 0 ? cfg.learning_rate
                        : name.rfind("adv/", 0) == 0   ? cfg.lambda * cfg.learning_rate
                                                       : 0.0;
    if (rate == 0.0) continue;
    const auto& grad = tape.grad(watched.at(name));
    for (std::size_t i = 0; i < tensor.values.size(); ++i) tensor.values[i] -= rate * grad[i];
  }

  gal::TrainResult got = gal::train(g, cfg);
  REQUIRE(got.history.size() == 1);
  CHECK(got.history[0].kind == 'a');
  for (const auto& [name, tensor] : expected) {
    CHECK(got.params.at(name).values == tensor.values);  // bitwise
  }

  // A following task step updates encoder and task parameters only.
  TrainingConfig cfg2 = cfg;
  cfg2.iterations = 2;
  gal::TrainResult two = gal::train(g, cfg2);
  REQUIRE(two.history.size() == 2);
  CHECK(two.history[1].kind == 't');

  Tape tape2;
  ModelParams watched2 = gal::watch_all(tape2, got.params);
  Tensor tl = gal::task_loss(tape2, watched2, g, cfg, all_nodes(g));
  tape2.backward(tl);
  for (const auto& [name, tensor] : got.params) {
    std::vector<double> want = tensor.values;
    if (name.rfind("encoder/", 0) == 0 || name.rfind("task/", 0) == 0) {
      const auto& grad = tape2.grad(watched2.at(name));
      for (std::size_t i = 0; i < want.size(); ++i) want[i] -= cfg.learning_rate * grad[i];
    }
    CHECK(two.params.at(name).values == want);
  }
}

TEST_CASE("zero lambda trains byte-identically to a disabled adversary") {
  gal::SbmConfig sbm;
  sbm.nodes_per_block = 8;
  sbm.seed = 5;
  sbm.p_in = 0.5;
  sbm.p_out = 0.2;
  Graph g = gal::generate_sbm(sbm);

  TrainingConfig zero = base_config(g);
  zero.lambda = 0.0;
  zero.iterations = 12;
  zero.pretrain_iterations = 2;
  TrainingConfig disabled = zero;
  disabled.lambda = 1.0;
  disabled.adversary_enabled = false;

  gal::TrainResult a = gal::train(g, zero);
  gal::TrainResult b = gal::train(g, disabled);
  REQUIRE(a.history.size() == b.history.size());
  for (const auto& [name, tensor] : a.params) {
    CHECK(b.params.at(name).values == tensor.values);
  }
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].task_loss == b.history[i].task_loss);
    CHECK(a.history[i].adversary_loss == b.history[i].adversary_loss);
    CHECK(a.history[i].kind == b.history[i].kind);
  }
}

TEST_CASE("step schedule interleaves adversary steps at the configured period") {
  Graph g = four_node_graph({0, 1, 0, 1}, {0, 0, 1, 1});
  TrainingConfig cfg = base_config(g);
  cfg.iterations = 7;
  cfg.pretrain_iterations = 3;
  cfg.adversary_period = 2;
  gal::TrainResult res = gal::train(g, cfg);
  REQUIRE(res.history.size() == 10);
  int adversary_rows = 0;
  for (int i = 0; i < 3; ++i) CHECK(res.history[i].kind == 't');
  for (const auto& row : res.history) {
    if (row.kind == 'a') ++adversary_rows;
    CHECK(std::isfinite(row.task_loss));
    CHECK(std::isfinite(row.adversary_loss));
    CHECK(row.lambda == cfg.lambda);
    CHECK(row.ms == 0.0);
  }
  CHECK(adversary_rows == 4);  // ceil(7 / 2)
}

TEST_CASE("task-only training leaves the adversary head at initialization") {
  Graph g = four_node_graph({0, 1, 0, 1}, {0, 0, 1, 1});
  TrainingConfig cfg = base_config(g);
  cfg.pretrain_iterations = 5;
  cfg.iterations = 0;

  gal::Rng root(cfg.seed);
  gal::Rng init_rng = root.derive("init");
  ModelParams init = gal::init_training_params(g, cfg, init_rng);

  gal::TrainResult res = gal::train(g, cfg);
  for (const auto& name : gal::param_names_with_prefix(init, "adv/")) {
    CHECK(res.params.at(name).values == init.at(name).values);
  }
  CHECK(res.params.at("encoder/l0/w_self").values != init.at("encoder/l0/w_self").values);
}

TEST_CASE("wasserstein training keeps critic weights inside the clip band") {
  gal::SbmConfig sbm;
  sbm.nodes_per_block = 8;
  sbm.seed = 6;
  sbm.p_in = 0.5;
  sbm.p_out = 0.2;
  Graph g = gal::generate_sbm(sbm);
  TrainingConfig cfg = base_config(g);
  cfg.adversary = AdversaryKind::kWasserstein;
  cfg.clip = 0.01;
  cfg.iterations = 9;
  gal::TrainResult res = gal::train(g, cfg);
  for (const auto& name : gal::param_names_with_prefix(res.params, "adv/")) {
    for (double v : res.params.at(name).values) {
      CHECK(std::abs(v) <= cfg.clip);
    }
  }
}

TEST_CASE("divergent updates abort and roll back to finite parameters") {
  Graph g = four_node_graph({0, 1, 0, 1}, {0, 0, 1, 1});
  TrainingConfig cfg = base_config(g);
  cfg.optimizer = gal::OptimizerKind::kSgd;
  cfg.learning_rate = 1e160;
  cfg.iterations = 6;
  gal::TrainResult res = gal::train(g, cfg);
  CHECK(res.aborted);
  CHECK(res.abort_iteration >= 0);
  CHECK_FALSE(res.warnings.empty());
  for (const auto& [name, tensor] : res.params) {
    (void)name;
    CHECK(gal::all_finite(tensor.values));
  }
}

TEST_CASE("training is deterministic in the seed") {
  gal::SbmConfig sbm;
  sbm.nodes_per_block = 8;
  sbm.seed = 9;
  sbm.p_in = 0.5;
  sbm.p_out = 0.2;
  Graph g = gal::generate_sbm(sbm);
  TrainingConfig cfg = base_config(g);
  cfg.iterations = 8;
  cfg.batch_size = 6;
  cfg.pairing.kind = PairingKind::kNeighborhood;

  gal::TrainResult a = gal::train(g, cfg);
  gal::TrainResult b = gal::train(g, cfg);
  for (const auto& [name, tensor] : a.params) {
    CHECK(b.params.at(name).values == tensor.values);
  }
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].task_loss == b.history[i].task_loss);
    CHECK(a.history[i].adversary_loss == b.history[i].adversary_loss);
  }

  TrainingConfig other = cfg;
  other.seed = cfg.seed + 1;
  gal::TrainResult c = gal::train(g, other);
  CHECK(c.params.at("encoder/l0/w_self").values != a.params.at("encoder/l0/w_self").values);
}

TEST_CASE("mostly-unpairable batches surface a warning") {
  Graph lonely = gal::build_graph(6, {{0, 1, std::nullopt}}, 1, std::vector<double>(6, 0.0),
                                  {0, 1, 0, 1, 0, 1}, {0, 1, 1, 0, 0, 1}, false);
  TrainingConfig cfg = base_config(lonely);
  cfg.pairing.kind = PairingKind::kNeighborhood;
  cfg.iterations = 2;
  gal::TrainResult res = gal::train(lonely, cfg);
  bool found = false;
  for (const auto& w : res.warnings) {
    if (w.find("no valid pairing partner") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("config validation rejects bad settings") {
  Graph g = four_node_graph({0, 1, 0, 1}, {0, 0, 1, 1});
  TrainingConfig cfg = base_config(g);
  cfg.lambda = -0.5;
  CHECK_THROWS_AS(gal::train(g, cfg), gal::ConfigError);
  cfg = base_config(g);
  cfg.adversary_period = 0;
  CHECK_THROWS_AS(gal::train(g, cfg), gal::ConfigError);
  cfg = base_config(g);
  cfg.encoder.input_dim = 3;  // graph features are 1-dimensional
  CHECK_THROWS_AS(gal::train(g, cfg), gal::ConfigError);
  cfg = base_config(g);
  cfg.adversary = AdversaryKind::kWasserstein;
  cfg.clip = 0.0;
  CHECK_THROWS_AS(gal::train(g, cfg), gal::ConfigError);
}

TEST_CASE("task loss descends during pretraining on separable data") {
  gal::SbmConfig sbm;
  sbm.nodes_per_block = 20;
  sbm.seed = 14;
  sbm.p_in = 0.3;
  sbm.p_out = 0.05;
  sbm.feature_noise = 0.05;
  Graph g = gal::generate_sbm(sbm);
  TrainingConfig cfg = base_config(g);
  cfg.encoder.hidden_dims = {8, 4};
  cfg.pretrain_iterations = 40;
  cfg.iterations = 0;
  gal::TrainResult res = gal::train(g, cfg);
  REQUIRE(res.history.size() == 40);
  CHECK(res.history.back().task_loss < res.history.front().task_loss);
  CHECK_FALSE(res.aborted);
}
