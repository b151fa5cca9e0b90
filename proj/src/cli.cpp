#include "gal/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gal/common.hpp"
#include "gal/config.hpp"
#include "gal/csv.hpp"
#include "gal/eval.hpp"
#include "gal/graph.hpp"
#include "gal/models.hpp"
#include "gal/theory.hpp"
#include "gal/train.hpp"

namespace gal {
namespace {

constexpr const char* kToolVersion = "gal 1.0.0";
using ordered_json = nlohmann::ordered_json;

// Every key the flat config format understands, across all subcommands. One
// file can drive generate, train, probe, and sweep together.
const std::vector<std::string> kKnownKeys = {
    "sbm.blocks",          "sbm.nodes_per_block", "sbm.p_in",
    "sbm.p_out",           "sbm.rho_ya",          "sbm.feature_noise",
    "sbm.seed",            "encoder.hidden_dims", "encoder.aggregation",
    "encoder.include_self","encoder.leaky_slope", "task.kind",
    "task.hidden_dim",     "task.test_fraction",  "adversary.kind",
    "adversary.hidden_dim","adversary.enabled",   "adversary.period",
    "adversary.clip",      "pairing.kind",        "pairing.hops",
    "train.lambda",        "train.optimizer",     "train.learning_rate",
    "train.adam_beta1",    "train.adam_beta2",    "train.adam_epsilon",
    "train.iterations",    "train.pretrain_iterations",
    "train.batch_size",    "train.seed",          "probe.pairing",
    "probe.hops",          "probe.hidden_dim",    "probe.iterations",
    "probe.learning_rate", "probe.optimizer",     "probe.test_fraction",
    "probe.leaky_slope",   "probe.seed",
};

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

std::string hex_digest(const std::string& bytes) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes);
  return out.str();
}

ConfigFile load_config_or_empty(const std::string& path) {
  ConfigFile cfg = path.empty() ? ConfigFile() : ConfigFile::load(path);
  cfg.require_known(kKnownKeys);
  return cfg;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::map<std::string, std::string>& config_snapshot,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_names,
                    const std::vector<std::string>& notes) {
  ordered_json manifest;
  manifest["command"] = command;
  manifest["tool_version"] = kToolVersion;
  ordered_json config = ordered_json::object();
  for (const auto& [key, value] : config_snapshot) config[key] = value;
  manifest["config"] = config;
  ordered_json seed_list = ordered_json::array();
  for (std::uint64_t s : seeds) seed_list.push_back(s);
  manifest["seeds"] = seed_list;
  ordered_json inputs = ordered_json::object();
  for (const std::string& path : input_paths) inputs[path] = hex_digest(read_text_file(path));
  manifest["inputs"] = inputs;
  manifest["outputs"] = output_names;
  manifest["notes"] = notes;
  // Wall-clock stamp lives in its own field so that byte comparisons of
  // reruns can drop exactly this key.
  manifest["volatile"] = {
      {"written_at_unix_ms",
       std::chrono::duration_cast<std::chrono::milliseconds>(
           std::chrono::system_clock::now().time_since_epoch())
           .count()}};
  write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::vector<double> parse_double_list_arg(const std::string& text, const std::string& flag) {
  ConfigFile helper;
  helper.set(flag, text);
  return helper.get_double_list(flag, {});
}

std::vector<std::uint64_t> parse_u64_list_arg(const std::string& text, const std::string& flag) {
  std::vector<std::uint64_t> out;
  std::string token;
  std::istringstream stream(text);
  while (std::getline(stream, token, ',')) {
    const std::size_t begin = token.find_first_not_of(" \t");
    const std::size_t end = token.find_last_not_of(" \t");
    if (begin == std::string::npos) continue;
    token = token.substr(begin, end - begin + 1);
    char* stop = nullptr;
    const unsigned long long parsed = std::strtoull(token.c_str(), &stop, 10);
    if (token.empty() || stop != token.c_str() + token.size()) {
      throw ConfigError(flag + " expects a comma-separated list of unsigned integers");
    }
    out.push_back(parsed);
  }
  if (out.empty()) throw ConfigError(flag + " needs at least one entry");
  return out;
}

std::vector<int> parse_int_list_arg(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (std::uint64_t v : parse_u64_list_arg(text, flag)) out.push_back(static_cast<int>(v));
  return out;
}

// ---------------------------------------------------------------------------
// Config -> engine structs
// ---------------------------------------------------------------------------

SbmConfig sbm_from_config(const ConfigFile& cfg) {
  SbmConfig sbm;
  sbm.block_count = static_cast<int>(cfg.get_int("sbm.blocks", sbm.block_count));
  sbm.nodes_per_block =
      static_cast<int>(cfg.get_int("sbm.nodes_per_block", sbm.nodes_per_block));
  sbm.p_in = cfg.get_double("sbm.p_in", sbm.p_in);
  sbm.p_out = cfg.get_double("sbm.p_out", sbm.p_out);
  sbm.rho_ya = cfg.get_double("sbm.rho_ya", sbm.rho_ya);
  sbm.feature_noise = cfg.get_double("sbm.feature_noise", sbm.feature_noise);
  sbm.seed = cfg.get_u64("sbm.seed", sbm.seed);
  return sbm;
}

PairingKind parse_pairing_kind(const std::string& value, const std::string& key) {
  if (value == "node") return PairingKind::kNode;
  if (value == "neighborhood") return PairingKind::kNeighborhood;
  if (value == "nhop") return PairingKind::kNhop;
  throw ConfigError("config key '" + key + "' expects node, neighborhood, or nhop, got '" +
                    value + "'");
}

OptimizerKind parse_optimizer(const std::string& value, const std::string& key) {
  if (value == "sgd") return OptimizerKind::kSgd;
  if (value == "adam") return OptimizerKind::kAdam;
  throw ConfigError("config key '" + key + "' expects sgd or adam, got '" + value + "'");
}

EncoderConfig encoder_from_config(const ConfigFile& cfg, const Graph& graph) {
  EncoderConfig enc;
  enc.input_dim = graph.feature_dim;
  enc.hidden_dims = cfg.get_size_list("encoder.hidden_dims", {16, 8});
  const std::string agg = cfg.get_string("encoder.aggregation", "mean");
  if (agg == "mean") enc.aggregation = Aggregation::kMean;
  else if (agg == "sum") enc.aggregation = Aggregation::kSum;
  else throw ConfigError("config key 'encoder.aggregation' expects mean or sum, got '" + agg + "'");
  enc.include_self_in_aggregate = cfg.get_bool("encoder.include_self", false);
  enc.leaky_slope = cfg.get_double("encoder.leaky_slope", 0.01);
  return enc;
}

TrainingConfig training_from_config(const ConfigFile& cfg, const Graph& graph) {
  TrainingConfig t;
  t.encoder = encoder_from_config(cfg, graph);
  const std::string task = cfg.get_string("task.kind", "node-classification");
  if (task == "node-classification") t.task = TaskKind::kNodeClassification;
  else if (task == "edge-regression") t.task = TaskKind::kEdgeRegression;
  else {
    throw ConfigError(
        "config key 'task.kind' expects node-classification or edge-regression, got '" + task +
        "'");
  }
  t.task_hidden_dim = static_cast<std::size_t>(cfg.get_int("task.hidden_dim", 16));
  const std::string adversary = cfg.get_string("adversary.kind", "tv");
  if (adversary == "tv") t.adversary = AdversaryKind::kTotalVariation;
  else if (adversary == "wasserstein") t.adversary = AdversaryKind::kWasserstein;
  else {
    throw ConfigError("config key 'adversary.kind' expects tv or wasserstein, got '" + adversary +
                      "'");
  }
  t.adversary_hidden_dim = static_cast<std::size_t>(cfg.get_int("adversary.hidden_dim", 16));
  t.adversary_enabled = cfg.get_bool("adversary.enabled", true);
  t.adversary_period = static_cast<int>(cfg.get_int("adversary.period", 2));
  t.clip = cfg.get_double("adversary.clip", 0.01);
  t.pairing.kind = parse_pairing_kind(cfg.get_string("pairing.kind", "node"), "pairing.kind");
  t.pairing.hops = static_cast<int>(cfg.get_int("pairing.hops", 2));
  t.lambda = cfg.get_double("train.lambda", 1.0);
  t.optimizer = parse_optimizer(cfg.get_string("train.optimizer", "adam"), "train.optimizer");
  t.learning_rate = cfg.get_double("train.learning_rate", 0.01);
  t.adam_beta1 = cfg.get_double("train.adam_beta1", 0.9);
  t.adam_beta2 = cfg.get_double("train.adam_beta2", 0.999);
  t.adam_epsilon = cfg.get_double("train.adam_epsilon", 1e-8);
  t.iterations = static_cast<int>(cfg.get_int("train.iterations", 200));
  t.pretrain_iterations = static_cast<int>(cfg.get_int("train.pretrain_iterations", 0));
  t.batch_size = static_cast<std::size_t>(cfg.get_int("train.batch_size", 0));
  t.seed = cfg.get_u64("train.seed", 0);
  return t;
}

ProbeConfig probe_from_config(const ConfigFile& cfg) {
  ProbeConfig p;
  p.pairing.kind = parse_pairing_kind(cfg.get_string("probe.pairing", "node"), "probe.pairing");
  p.pairing.hops = static_cast<int>(cfg.get_int("probe.hops", 2));
  p.hidden_dim = static_cast<std::size_t>(cfg.get_int("probe.hidden_dim", 16));
  p.iterations = static_cast<int>(cfg.get_int("probe.iterations", 300));
  p.learning_rate = cfg.get_double("probe.learning_rate", 0.01);
  p.optimizer = parse_optimizer(cfg.get_string("probe.optimizer", "adam"), "probe.optimizer");
  p.test_fraction = cfg.get_double("probe.test_fraction", 0.3);
  p.leaky_slope = cfg.get_double("probe.leaky_slope", 0.01);
  p.seed = cfg.get_u64("probe.seed", 0);
  return p;
}

std::string pairing_name(PairingKind kind) {
  switch (kind) {
    case PairingKind::kNode: return "node";
    case PairingKind::kNeighborhood: return "neighborhood";
    case PairingKind::kNhop: return "nhop";
  }
  return "node";
}

// ---------------------------------------------------------------------------
// Artifact files
// ---------------------------------------------------------------------------

void write_checkpoint(const std::string& path, const ModelParams& params) {
  std::string out = "name,rows,cols,values\n";
  for (const auto& [name, tensor] : params) {
    out += name + "," + std::to_string(tensor.rows()) + "," + std::to_string(tensor.cols());
    for (double v : tensor.values) out += "," + format_double(v);
    out += "\n";
  }
  write_text_file(path, out);
}

ModelParams load_checkpoint(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream stream(text);
  std::string line;
  std::size_t line_number = 0;
  ModelParams params;
  while (std::getline(stream, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line != "name,rows,cols,values") {
        throw ParseError(path + ":1: expected checkpoint header 'name,rows,cols,values'");
      }
      continue;
    }
    std::vector<std::string> fields;
    std::string token;
    std::istringstream fieldstream(line);
    while (std::getline(fieldstream, token, ',')) fields.push_back(token);
    if (fields.size() < 3) {
      throw ParseError(path + ":" + std::to_string(line_number) + ": too few fields");
    }
    const long long rows = parse_int(fields[1], "checkpoint rows", line_number);
    const long long cols = parse_int(fields[2], "checkpoint cols", line_number);
    if (rows <= 0 || cols <= 0) {
      throw ParseError(path + ":" + std::to_string(line_number) + ": non-positive shape");
    }
    const std::size_t expected = 3 + static_cast<std::size_t>(rows * cols);
    if (fields.size() != expected) {
      throw ParseError(path + ":" + std::to_string(line_number) + ": expected " +
                       std::to_string(expected - 3) + " values, got " +
                       std::to_string(fields.size() - 3));
    }
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(rows * cols));
    for (std::size_t i = 3; i < fields.size(); ++i) {
      values.push_back(parse_real(fields[i], "checkpoint value", line_number));
    }
    if (params.count(fields[0]) != 0) {
      throw ParseError(path + ":" + std::to_string(line_number) + ": duplicate parameter '" +
                       fields[0] + "'");
    }
    params.emplace(fields[0], Tensor::matrix(static_cast<std::size_t>(rows),
                                             static_cast<std::size_t>(cols), values));
  }
  if (params.empty()) throw ParseError(path + ": checkpoint holds no parameters");
  return params;
}

void write_history(const std::string& path, const std::vector<HistoryRow>& history) {
  std::string out = "iteration,kind,task_loss,adversary_loss,lambda,ms\n";
  for (const HistoryRow& row : history) {
    out += std::to_string(row.iteration);
    out += ",";
    out += row.kind;
    out += "," + format_double(row.task_loss) + "," + format_double(row.adversary_loss) + "," +
           format_double(row.lambda) + "," + format_double(row.ms) + "\n";
  }
  write_text_file(path, out);
}

void write_embeddings(const std::string& path, const Tensor& embeddings) {
  std::string out = "node";
  for (std::size_t c = 0; c < embeddings.cols(); ++c) out += ",e" + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    out += std::to_string(r);
    for (std::size_t c = 0; c < embeddings.cols(); ++c) {
      out += "," + format_double(embeddings.at(r, c));
    }
    out += "\n";
  }
  write_text_file(path, out);
}

// Supervision pool: the training side of a deterministic held-out split.
std::vector<int> assign_task_pool(TrainingConfig& t, const Graph& graph, double test_fraction) {
  if (t.task == TaskKind::kNodeClassification) {
    NodeSplit split = split_nodes(graph, test_fraction, Rng(t.seed).derive("task-split").seed());
    t.task_node_ids = split.train_nodes;
    return split.test_nodes;
  }
  EdgeSplit split = split_edges(graph, test_fraction, Rng(t.seed).derive("task-split").seed());
  t.task_edge_ids = split.train_edges;
  return split.test_edges;
}

std::optional<double> primary_task_metric(const TaskEvaluation& eval) {
  if (eval.task_auc) return eval.task_auc;
  if (eval.task_macro_f1) return eval.task_macro_f1;
  if (eval.task_rmse) return eval.task_rmse;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_generate(const std::string& config_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  ConfigFile cfg = load_config_or_empty(config_path);
  SbmConfig sbm = sbm_from_config(cfg);
  if (seed) sbm.seed = *seed;
  Graph graph = generate_sbm(sbm);
  std::filesystem::create_directories(out);
  write_graph(graph, out + "/nodes.csv", out + "/edges.csv");

  ConfigFile snapshot = cfg;
  snapshot.set("sbm.seed", std::to_string(sbm.seed));
  std::vector<std::string> inputs;
  if (!config_path.empty()) inputs.push_back(config_path);
  write_manifest(out, "generate", snapshot.entries(), {sbm.seed}, inputs,
                 {"nodes.csv", "edges.csv"}, {});
  return 0;
}

int cmd_train(const std::string& nodes_path, const std::string& edges_path,
              const std::string& config_path, const std::string& out,
              std::optional<std::uint64_t> seed) {
  Graph graph = load_graph(nodes_path, edges_path);
  ConfigFile cfg = load_config_or_empty(config_path);
  TrainingConfig t = training_from_config(cfg, graph);
  if (seed) t.seed = *seed;
  assign_task_pool(t, graph, cfg.get_double("task.test_fraction", 0.3));

  TrainResult result = train(graph, t);
  std::filesystem::create_directories(out);
  write_checkpoint(out + "/checkpoint.csv", result.params);
  write_history(out + "/history.csv", result.history);
  std::vector<std::string> outputs = {"checkpoint.csv", "history.csv"};
  std::vector<std::string> notes = result.warnings;
  if (result.aborted) {
    // The rolled-back parameters are finite but may sit one step before the
    // blow-up, so re-running the encoder could overflow; skip the embedding
    // dump rather than crash.
    notes.push_back("training aborted at iteration " + std::to_string(result.abort_iteration) +
                    "; checkpoint holds the last finite parameters; embeddings skipped");
  } else {
    write_embeddings(out + "/embeddings.csv",
                     encode_detached(graph, t.encoder, result.params, "encoder/"));
    outputs.push_back("embeddings.csv");
  }
  ConfigFile snapshot = cfg;
  snapshot.set("train.seed", std::to_string(t.seed));
  std::vector<std::string> inputs = {nodes_path, edges_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  write_manifest(out, "train", snapshot.entries(), {t.seed}, inputs, outputs, notes);
  for (const std::string& note : notes) std::cerr << "warning: " << note << "\n";
  return result.aborted ? 2 : 0;
}

int cmd_probe(const std::string& nodes_path, const std::string& edges_path,
              const std::string& checkpoint_path, const std::string& config_path,
              const std::string& out, std::optional<std::uint64_t> seed) {
  Graph graph = load_graph(nodes_path, edges_path);
  ConfigFile cfg = load_config_or_empty(config_path);
  ProbeConfig probe = probe_from_config(cfg);
  if (seed) probe.seed = *seed;
  ModelParams params = load_checkpoint(checkpoint_path);
  EncoderConfig encoder = encoder_from_config(cfg, graph);
  Tensor embeddings = encode_detached(graph, encoder, params, "encoder/");
  ProbeResult result = run_probe(graph, embeddings, probe);

  ordered_json report;
  report["attribute"] = "sensitive";
  report["attack"] = pairing_name(probe.pairing.kind);
  if (probe.pairing.kind == PairingKind::kNhop) report["hops"] = probe.pairing.hops;
  report["probe_macro_f1"] = result.probe_macro_f1;
  if (result.probe_auc) report["probe_auc"] = *result.probe_auc;
  else report["probe_auc"] = nullptr;
  report["probe_accuracy"] = result.probe_accuracy;
  report["baseline_macro_f1"] = result.baseline_macro_f1;
  report["baseline_accuracy"] = result.baseline_accuracy;
  report["train_pairs"] = result.train_pairs;
  report["test_pairs"] = result.test_pairs;
  report["constant_predictor"] = result.constant_predictor;
  report["warnings"] = result.warnings;
  std::filesystem::create_directories(out);
  write_text_file(out + "/report.json", report.dump(2) + "\n");

  ConfigFile snapshot = cfg;
  snapshot.set("probe.seed", std::to_string(probe.seed));
  std::vector<std::string> inputs = {nodes_path, edges_path, checkpoint_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  write_manifest(out, "probe", snapshot.entries(), {probe.seed}, inputs, {"report.json"},
                 result.warnings);
  return 0;
}

struct SweepRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> task_metric;
  double adv_f1 = 0.0;
  std::optional<double> adv_auc;
  bool ok = false;
  std::string failure;
};

int cmd_sweep(const std::string& nodes_path, const std::string& edges_path,
              const std::string& config_path, const std::string& lambdas_arg,
              const std::string& seeds_arg, int workers, const std::string& out) {
  Graph graph = load_graph(nodes_path, edges_path);
  ConfigFile cfg = load_config_or_empty(config_path);
  std::vector<double> lambdas = parse_double_list_arg(lambdas_arg, "--lambdas");
  std::vector<std::uint64_t> seeds = parse_u64_list_arg(seeds_arg, "--seeds");
  const double test_fraction = cfg.get_double("task.test_fraction", 0.3);

  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    for (std::uint64_t s : seeds) {
      SweepRow row;
      row.lambda = lambda;
      row.seed = s;
      rows.push_back(row);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= rows.size()) return;
      SweepRow& row = rows[index];
      try {
        TrainingConfig t = training_from_config(cfg, graph);
        t.lambda = row.lambda;
        t.seed = row.seed;
        const std::vector<int> eval_ids = assign_task_pool(t, graph, test_fraction);
        TrainResult result = train(graph, t);
        if (result.aborted) {
          row.failure = "training aborted at iteration " +
                        std::to_string(result.abort_iteration);
          continue;
        }
        row.task_metric = primary_task_metric(evaluate_task(graph, result.params, t, eval_ids));
        ProbeConfig probe = probe_from_config(cfg);
        probe.seed = row.seed;
        ProbeResult probed = run_probe(
            graph, encode_detached(graph, t.encoder, result.params, "encoder/"), probe);
        row.adv_f1 = probed.probe_macro_f1;
        row.adv_auc = probed.probe_auc;
        row.ok = true;
      } catch (const std::exception& e) {
        row.failure = e.what();
      }
    }
  };
  const int thread_count = std::max(
      1, std::min({workers, static_cast<int>(rows.size()), 16}));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();

  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.seed < b.seed;
  });

  std::string csv = "lambda,seed,task_metric,adv_f1,adv_auc\n";
  std::vector<std::string> notes;
  for (const SweepRow& row : rows) {
    if (!row.ok) {
      notes.push_back("lambda=" + format_double(row.lambda) + " seed=" +
                      std::to_string(row.seed) + ": " + row.failure);
      continue;
    }
    csv += format_double(row.lambda) + "," + std::to_string(row.seed) + ",";
    csv += row.task_metric ? format_double(*row.task_metric) : std::string();
    csv += "," + format_double(row.adv_f1) + ",";
    csv += row.adv_auc ? format_double(*row.adv_auc) : std::string();
    csv += "\n";
  }
  std::filesystem::create_directories(out);
  write_text_file(out + "/sweep.csv", csv);

  std::vector<std::string> inputs = {nodes_path, edges_path};
  if (!config_path.empty()) inputs.push_back(config_path);
  ConfigFile snapshot = cfg;
  snapshot.set("sweep.lambdas", lambdas_arg);
  snapshot.set("sweep.seeds", seeds_arg);
  write_manifest(out, "sweep", snapshot.entries(), seeds, inputs, {"sweep.csv"}, notes);
  for (const std::string& note : notes) std::cerr << "warning: " << note << "\n";
  return 0;
}

int cmd_nhop_stats(const std::string& nodes_path, const std::string& edges_path,
                   const std::string& hops_arg, int trials, std::uint64_t seed,
                   const std::string& out) {
  if (trials < 1) throw ContractError("nhop-stats needs trials >= 1");
  Graph graph = load_graph(nodes_path, edges_path);
  if (graph.node_count == 0) throw ContractError("nhop-stats needs a non-empty graph");
  const std::vector<int> hop_values = parse_int_list_arg(hops_arg, "--hops");
  Rng rng = Rng(seed).derive("nhop-stats");

  std::string csv = "n,trials,accept_rate,exact_rate,mean_distance\n";
  for (int hops : hop_values) {
    if (hops < 1) throw ContractError("--hops entries must be >= 1");
    long long accepted = 0;
    long long exact = 0;
    double distance_total = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      const int start = static_cast<int>(rng.uniform_index(
          static_cast<std::size_t>(graph.node_count)));
      const NhopResult sample = nhop_sample(graph, start, hops, rng);
      if (!sample.accepted) continue;
      ++accepted;
      const std::optional<int> distance = bfs_distance(graph, start, sample.endpoint);
      if (!distance) throw ContractError("accepted walk endpoint is unreachable");
      distance_total += *distance;
      if (*distance == hops) ++exact;
    }
    const double accept_rate = static_cast<double>(accepted) / trials;
    const double exact_rate =
        accepted > 0 ? static_cast<double>(exact) / static_cast<double>(accepted) : 0.0;
    const double mean_distance = accepted > 0 ? distance_total / static_cast<double>(accepted)
                                              : 0.0;
    csv += std::to_string(hops) + "," + std::to_string(trials) + "," +
           format_double(accept_rate) + "," + format_double(exact_rate) + "," +
           format_double(mean_distance) + "\n";
  }
  std::filesystem::create_directories(out);
  write_text_file(out + "/nhop_stats.csv", csv);
  write_manifest(out, "nhop-stats", {{"hops", hops_arg}, {"trials", std::to_string(trials)}},
                 {seed}, {nodes_path, edges_path}, {"nhop_stats.csv"}, {});
  return 0;
}

ordered_json instance_to_json(const BoundInstance& inst) {
  ordered_json j;
  j["z_support"] = inst.z_support;
  j["z_given_a0"] = inst.z_given_a0;
  j["z_given_a1"] = inst.z_given_a1;
  j["joint_ya"] = {{inst.joint_ya[0][0], inst.joint_ya[0][1]},
                   {inst.joint_ya[1][0], inst.joint_ya[1][1]}};
  j["lipschitz"] = inst.lipschitz;
  j["radius"] = inst.radius;
  return j;
}

int cmd_verify_bounds(int count, std::uint64_t seed, const std::string& out) {
  if (count < 1) throw ContractError("verify-bounds needs count >= 1");
  Rng rng = Rng(seed).derive("verify-bounds");

  int tradeoff_passes = 0, leakage_passes = 0, decomposition_passes = 0;
  double min_slack_w1 = std::numeric_limits<double>::infinity();
  double min_slack_chain = std::numeric_limits<double>::infinity();
  double min_slack_entropy = std::numeric_limits<double>::infinity();
  double min_slack_leak_w1 = std::numeric_limits<double>::infinity();
  ordered_json counterexample = nullptr;

  for (int i = 0; i < count; ++i) {
    const std::size_t support = 2 + rng.uniform_index(11);  // 2..12 points
    const BoundInstance inst = random_bound_instance(rng, support);
    const std::vector<double> h = random_lipschitz_classifier(inst, rng);
    const TradeoffReport tradeoff = check_tradeoff_bound(inst, h);
    const LeakageReport leakage = check_leakage_bound(inst);
    const bool decomposed = check_error_decomposition({inst.z_support, inst.z_given_a0},
                                                      {inst.z_support, inst.z_given_a1});
    tradeoff_passes += tradeoff.holds ? 1 : 0;
    leakage_passes += leakage.holds ? 1 : 0;
    decomposition_passes += decomposed ? 1 : 0;
    min_slack_w1 = std::min(min_slack_w1, tradeoff.slack_w1);
    min_slack_chain = std::min(min_slack_chain, tradeoff.slack_chain);
    min_slack_entropy = std::min(min_slack_entropy, leakage.slack_entropy);
    min_slack_leak_w1 = std::min(min_slack_leak_w1, leakage.slack_w1);
    if ((!tradeoff.holds || !leakage.holds || !decomposed) && counterexample.is_null()) {
      counterexample = instance_to_json(inst);
      counterexample["index"] = i;
      counterexample["classifier"] = h;
      counterexample["tradeoff"] = {{"eps_a0", tradeoff.eps_a0},
                                    {"eps_a1", tradeoff.eps_a1},
                                    {"lhs", tradeoff.lhs},
                                    {"rhs_w1", tradeoff.rhs_w1},
                                    {"rhs_adv", tradeoff.rhs_adv},
                                    {"holds", tradeoff.holds}};
      counterexample["leakage"] = {{"min_error_all", leakage.min_error_all},
                                   {"bound_entropy", leakage.bound_entropy},
                                   {"min_error_lipschitz", leakage.min_error_lipschitz},
                                   {"bound_w1", leakage.bound_w1},
                                   {"holds", leakage.holds}};
      counterexample["decomposition_holds"] = decomposed;
    }
  }

  ordered_json summary;
  summary["instances"] = count;
  summary["tolerance"] = 1e-9;
  summary["tradeoff"] = {{"passes", tradeoff_passes},
                         {"min_slack_w1", min_slack_w1},
                         {"min_slack_chain", min_slack_chain}};
  summary["leakage"] = {{"passes", leakage_passes},
                        {"min_slack_entropy", min_slack_entropy},
                        {"min_slack_w1", min_slack_leak_w1}};
  summary["decomposition"] = {{"passes", decomposition_passes}};
  summary["counterexample"] = counterexample;
  std::filesystem::create_directories(out);
  write_text_file(out + "/bounds.json", summary.dump(2) + "\n");
  write_manifest(out, "verify-bounds", {{"count", std::to_string(count)}}, {seed}, {},
                 {"bounds.json"}, {});

  const bool all_pass = tradeoff_passes == count && leakage_passes == count &&
                        decomposition_passes == count;
  if (!all_pass) {
    std::cerr << "counterexample found; see " << out << "/bounds.json\n";
    return 3;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Graph embedding obfuscation: training, attacks, and bound verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string nodes_path, edges_path, checkpoint_path;
  std::string lambdas_arg, seeds_arg, hops_arg = "1,2,3";
  int trials = 1000;
  int count = 1000;
  int workers = 4;
  std::uint64_t plain_seed = 0;

  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic two-community graph");
  generate->add_option("--config", config_path, "key = value config file");
  generate->add_option("--out", out_dir, "output directory");
  generate->add_option("--seed", seed, "seed override");

  CLI::App* train_cmd = app.add_subcommand("train", "Train an obfuscated encoder");
  train_cmd->add_option("--nodes", nodes_path, "node table CSV")->required();
  train_cmd->add_option("--edges", edges_path, "edge list CSV")->required();
  train_cmd->add_option("--config", config_path, "key = value config file");
  train_cmd->add_option("--out", out_dir, "output directory");
  train_cmd->add_option("--seed", seed, "seed override");

  CLI::App* probe = app.add_subcommand("probe", "Attack frozen embeddings with a fresh probe");
  probe->add_option("--nodes", nodes_path, "node table CSV")->required();
  probe->add_option("--edges", edges_path, "edge list CSV")->required();
  probe->add_option("--checkpoint", checkpoint_path, "checkpoint.csv from train")->required();
  probe->add_option("--config", config_path, "key = value config file");
  probe->add_option("--out", out_dir, "output directory");
  probe->add_option("--seed", seed, "seed override");

  CLI::App* sweep = app.add_subcommand("sweep", "Train + probe over a lambda/seed grid");
  sweep->add_option("--nodes", nodes_path, "node table CSV")->required();
  sweep->add_option("--edges", edges_path, "edge list CSV")->required();
  sweep->add_option("--config", config_path, "key = value config file");
  sweep->add_option("--lambdas", lambdas_arg, "comma-separated lambda values")->required();
  sweep->add_option("--seeds", seeds_arg, "comma-separated seeds")->required();
  sweep->add_option("--workers", workers, "parallel workers");
  sweep->add_option("--out", out_dir, "output directory");

  CLI::App* nhop = app.add_subcommand("nhop-stats", "Walk-sampler acceptance and distance stats");
  nhop->add_option("--nodes", nodes_path, "node table CSV")->required();
  nhop->add_option("--edges", edges_path, "edge list CSV")->required();
  nhop->add_option("--hops", hops_arg, "comma-separated hop counts");
  nhop->add_option("--trials", trials, "samples per hop count");
  nhop->add_option("--seed", plain_seed, "sampler seed");
  nhop->add_option("--out", out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify-bounds", "Check the trade-off and leakage floors");
  verify->add_option("--count", count, "random instances to check");
  verify->add_option("--seed", plain_seed, "instance stream seed");
  verify->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(config_path, out_dir, seed);
    if (train_cmd->parsed()) {
      return cmd_train(nodes_path, edges_path, config_path, out_dir, seed);
    }
    if (probe->parsed()) {
      return cmd_probe(nodes_path, edges_path, checkpoint_path, config_path, out_dir, seed);
    }
    if (sweep->parsed()) {
      return cmd_sweep(nodes_path, edges_path, config_path, lambdas_arg, seeds_arg, workers,
                       out_dir);
    }
    if (nhop->parsed()) {
      return cmd_nhop_stats(nodes_path, edges_path, hops_arg, trials, plain_seed, out_dir);
    }
    if (verify->parsed()) return cmd_verify_bounds(count, plain_seed, out_dir);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace gal
