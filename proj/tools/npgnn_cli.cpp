// Command-line front end: train / experiment / gradcheck / synth / inspect.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "npgnn/data_io.hpp"
#include "npgnn/training.hpp"

using namespace npgnn;
namespace fs = std::filesystem;

namespace {

struct DatasetPreset {
  std::string name;
  std::size_t iterations;
  bool long_running;
};

const std::vector<DatasetPreset> kPresets = {
    {"cora", 500, false},
    {"citeseer", 500, false},
    {"pubmed", 4000, true},
};

const DatasetPreset* find_preset(const std::string& name) {
  for (const auto& p : kPresets)
    if (p.name == name) return &p;
  return nullptr;
}

struct DataOpts {
  std::string dataset;       // preset name
  std::string content_path;  // explicit files
  std::string cites_path;
  std::string data_dir;  // overrides NPGNN_DATA_DIR
  std::size_t synth_nodes = 0;
  std::size_t synth_blocks = 2;
  double synth_p_in = 0.5;
  double synth_p_out = 0.02;
  std::size_t synth_features = 2;
  std::uint64_t synth_seed = 0;
};

void add_data_options(CLI::App* app, DataOpts& d) {
  app->add_option("--dataset", d.dataset, "Dataset preset: cora, citeseer, pubmed")
      ->check(CLI::IsMember({"cora", "citeseer", "pubmed"}));
  app->add_option("--content", d.content_path, "Explicit content file");
  app->add_option("--cites", d.cites_path, "Explicit cites file");
  app->add_option("--data-dir", d.data_dir,
                  "Directory with <dataset>.content/<dataset>.cites (default: $NPGNN_DATA_DIR)");
  app->add_option("--synth-nodes", d.synth_nodes, "Generate a synthetic block-model graph");
  app->add_option("--synth-blocks", d.synth_blocks, "Synthetic: number of blocks");
  app->add_option("--synth-p-in", d.synth_p_in, "Synthetic: within-block edge probability");
  app->add_option("--synth-p-out", d.synth_p_out, "Synthetic: cross-block edge probability");
  app->add_option("--synth-features", d.synth_features, "Synthetic: feature dimension");
  app->add_option("--synth-seed", d.synth_seed, "Synthetic: generator seed");
}

std::string dataset_label(const DataOpts& d) {
  if (!d.dataset.empty()) return d.dataset;
  if (!d.content_path.empty()) return fs::path(d.content_path).stem().string();
  return "synthetic";
}

Graph load_graph(const DataOpts& d, LoadAudit* audit = nullptr) {
  if (!d.dataset.empty()) {
    std::string dir = d.data_dir;
    if (dir.empty()) {
      const char* env = std::getenv("NPGNN_DATA_DIR");
      if (!env || !*env)
        throw InputError("dataset preset '" + d.dataset +
                         "' needs --data-dir or NPGNN_DATA_DIR");
      dir = env;
    }
    fs::path base = fs::path(dir) / d.dataset;
    return load_content_cites((base.string() + ".content"), (base.string() + ".cites"), audit);
  }
  if (!d.content_path.empty()) {
    if (d.cites_path.empty()) throw InputError("--content requires --cites");
    return load_content_cites(d.content_path, d.cites_path, audit);
  }
  if (d.synth_nodes > 0) {
    Rng rng(d.synth_seed);
    return generate_sbm(d.synth_nodes, d.synth_blocks, d.synth_p_in, d.synth_p_out,
                        d.synth_features, rng);
  }
  throw InputError("no data source: pass --dataset, --content/--cites, or --synth-nodes");
}

struct TaskOpts {
  std::string task = "transductive";
  double test_frac = 0.10;
  double val_frac = 0.05;
  double test_node_frac = 0.05;
  double val_node_frac = 0.025;
  double train_frac = 0.30;
};

void add_task_options(CLI::App* app, TaskOpts& t) {
  app->add_option("--task", t.task, "transductive, inductive, or fewshot")
      ->check(CLI::IsMember({"transductive", "inductive", "fewshot"}));
  app->add_option("--test-frac", t.test_frac, "Transductive: test edge fraction");
  app->add_option("--val-frac", t.val_frac, "Transductive: validation edge fraction");
  app->add_option("--test-node-frac", t.test_node_frac, "Inductive: held-out test node fraction");
  app->add_option("--val-node-frac", t.val_node_frac, "Inductive: held-out val node fraction");
  app->add_option("--train-frac", t.train_frac, "Few-shot: observed node fraction");
}

SplitBundle make_split(const Graph& g, const TaskOpts& t, Rng& rng) {
  if (t.task == "transductive") return make_transductive_split(g, t.test_frac, t.val_frac, rng);
  if (t.task == "inductive")
    return make_inductive_split(g, t.test_node_frac, t.val_node_frac, rng);
  return make_fewshot_split(g, t.train_frac, rng);
}

struct ModelOpts {
  std::string model = "npgnn";
  std::optional<std::size_t> iterations;
  double lr = 0.01;
  std::size_t mc_samples = 1;
  double context_fraction = 0.10;
  std::uint64_t seed = 0;
  std::size_t eval_every = 50;
  std::size_t hidden1 = 32, latent = 32, hidden2 = 64, embed = 32;
  std::string encoder_activation = "relu";
  std::string config_path;
};

void add_model_options(CLI::App* app, ModelOpts& m) {
  app->add_option("--model", m.model, "npgnn or vgae")
      ->check(CLI::IsMember({"npgnn", "vgae"}));
  app->add_option("--iterations", m.iterations, "Training iterations (default: dataset preset)");
  app->add_option("--lr", m.lr, "Adam learning rate");
  app->add_option("--mc-samples", m.mc_samples, "Monte Carlo samples per iteration");
  app->add_option("--context-fraction", m.context_fraction, "Context subsample fraction");
  app->add_option("--seed", m.seed, "Training seed");
  app->add_option("--eval-every", m.eval_every, "Evaluation interval in iterations");
  app->add_option("--hidden1", m.hidden1, "Encoder hidden width");
  app->add_option("--latent", m.latent, "Latent dimension");
  app->add_option("--hidden2", m.hidden2, "Decoder hidden width");
  app->add_option("--embed", m.embed, "Decoder embedding width");
  app->add_option("--encoder-activation", m.encoder_activation,
                  "Encoder output activation: relu or linear")
      ->check(CLI::IsMember({"relu", "linear"}));
  app->add_option("--config", m.config_path, "JSON config file (flags override its values)");
}

TrainConfig build_config(const ModelOpts& m, const DataOpts& d) {
  TrainConfig cfg;
  if (!m.config_path.empty()) cfg = read_config(m.config_path);
  cfg.model_kind = model_kind_from_string(m.model);
  cfg.learning_rate = m.lr;
  cfg.mc_samples = m.mc_samples;
  cfg.context_fraction = m.context_fraction;
  cfg.seed = m.seed;
  cfg.eval_every = m.eval_every;
  cfg.model.hidden1 = m.hidden1;
  cfg.model.latent = m.latent;
  cfg.model.hidden2 = m.hidden2;
  cfg.model.embed = m.embed;
  cfg.model.encoder_output_activation = output_activation_from_string(m.encoder_activation);
  if (m.iterations) {
    cfg.iterations = *m.iterations;
  } else if (const DatasetPreset* p = find_preset(d.dataset)) {
    cfg.iterations = p->iterations;
    if (p->long_running)
      std::cerr << "note: " << p->name << " preset runs " << p->iterations
                << " iterations; expect a long wall time\n";
  }
  cfg.validate();
  return cfg;
}

int cmd_train(const DataOpts& d, const TaskOpts& t, const ModelOpts& m,
              const std::string& out_path, const std::string& history_path,
              const std::string& params_path) {
  Graph g = load_graph(d);
  Rng split_rng(m.seed);
  SplitBundle split = make_split(g, t, split_rng);
  TrainConfig cfg = build_config(m, d);

  auto t0 = std::chrono::steady_clock::now();
  TrainRun run = train(split, cfg);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::printf("dataset=%s task=%s model=%s seed=%llu iterations=%zu (%.1fs)\n",
              dataset_label(d).c_str(), t.task.c_str(), to_string(cfg.model_kind).c_str(),
              static_cast<unsigned long long>(cfg.seed), cfg.iterations, secs);
  std::printf("test  AUC %.4f  AP %.4f\n", run.test_auc, run.test_ap);
  if (run.val_auc >= 0.0) std::printf("val   AUC %.4f  AP %.4f\n", run.val_auc, run.val_ap);

  if (!out_path.empty()) {
    ExperimentResult res;
    res.config = cfg;
    res.dataset = dataset_label(d);
    res.task = t.task;
    SeedResult sr;
    sr.seed = cfg.seed;
    sr.auc = run.test_auc;
    sr.ap = run.test_ap;
    sr.val_auc = run.val_auc;
    sr.val_ap = run.val_ap;
    sr.wall_seconds = secs;
    res.seeds.push_back(sr);
    res.metrics = MetricsReport::aggregate({run.test_auc}, {run.test_ap});
    write_result(res, out_path);
  }
  if (!history_path.empty()) write_history_jsonl(run.history, history_path);
  if (!params_path.empty()) save_params(run.params, cfg.model, params_path);
  return 0;
}

int cmd_experiment(const DataOpts& d, const TaskOpts& t, const ModelOpts& m, std::size_t num_seeds,
                   const std::string& out_path) {
  if (d.dataset == "pubmed" && t.task == "fewshot")
    throw InputError("the pubmed preset does not support the fewshot task");
  Graph g = load_graph(d);
  TrainConfig cfg = build_config(m, d);

  ExperimentResult res;
  res.config = cfg;
  res.dataset = dataset_label(d);
  res.task = t.task;
  std::vector<double> auc, ap;
  for (std::size_t i = 0; i < num_seeds; ++i) {
    SeedResult sr;
    sr.seed = m.seed + i;
    auto t0 = std::chrono::steady_clock::now();
    try {
      Rng split_rng(sr.seed);
      SplitBundle split = make_split(g, t, split_rng);
      TrainConfig seed_cfg = cfg;
      seed_cfg.seed = sr.seed;
      TrainRun run = train(split, seed_cfg);
      sr.auc = run.test_auc;
      sr.ap = run.test_ap;
      sr.val_auc = run.val_auc;
      sr.val_ap = run.val_ap;
      auc.push_back(run.test_auc);
      ap.push_back(run.test_ap);
    } catch (const std::exception& e) {
      sr.ok = false;
      sr.error = e.what();
      std::cerr << "seed " << sr.seed << " failed: " << e.what() << "\n";
    }
    sr.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("seed %-4llu  %s", static_cast<unsigned long long>(sr.seed),
                sr.ok ? "" : "FAILED\n");
    if (sr.ok) std::printf("AUC %.4f  AP %.4f  (%.1fs)\n", sr.auc, sr.ap, sr.wall_seconds);
    std::fflush(stdout);
    res.seeds.push_back(sr);
  }
  if (auc.empty()) {
    std::cerr << "all seeds failed\n";
    return 1;
  }
  res.metrics = MetricsReport::aggregate(auc, ap);
  std::printf("\n%s / %s / %s over %zu seed(s):\n", res.dataset.c_str(), res.task.c_str(),
              to_string(cfg.model_kind).c_str(), auc.size());
  std::printf("  AUC %.1f +/- %.1f   AP %.1f +/- %.1f   (x100)\n",
              100.0 * res.metrics.auc_mean, 100.0 * res.metrics.auc_se,
              100.0 * res.metrics.ap_mean, 100.0 * res.metrics.ap_se);
  if (!out_path.empty()) write_result(res, out_path);
  return res.seeds.size() == auc.size() ? 0 : 1;
}

int cmd_gradcheck(std::uint64_t seed, double tol) {
  Rng rng(seed);
  const std::size_t n = 6, f = 3;
  Graph g;
  g.num_nodes = n;
  {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    g.features = DenseMatrix(n, f);
    for (std::size_t i = 0; i < g.features.size(); ++i) g.features.data()[i] = u(rng);
    for (std::size_t i = 0; i + 1 < n; ++i) g.edges.push_back(Edge{i, i + 1});
    g.edges.push_back(Edge{0, n - 1});
  }
  ModelConfig cfg;
  cfg.hidden1 = 4;
  cfg.latent = 3;
  cfg.hidden2 = 5;
  cfg.embed = 4;
  ModelParams params = ModelParams::init(f, cfg, rng);
  SubgraphRef ctx = induce_subgraph(g, {0, 1, 2, 3});
  DenseMatrix eps(1, cfg.latent);
  {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < eps.size(); ++i) eps.data()[i] = u(rng);
  }

  Rng dummy(0);
  ElboResult res = elbo_with_node_context(g, ctx, params, cfg, 1, dummy, true, &eps);
  auto f_eval = [&](const std::vector<DenseMatrix>& p) {
    ModelParams pp = params;
    auto blocks = pp.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) *blocks[i] = p[i];
    Rng dr(0);
    return elbo_with_node_context(g, ctx, pp, cfg, 1, dr, false, &eps).elbo;
  };
  std::vector<DenseMatrix> p0;
  for (auto* b : params.blocks()) p0.push_back(*b);
  auto report = ad::gradient_check(f_eval, p0, res.grads, ModelParams::block_names(), 1e-6);
  for (const auto& e : report.entries)
    std::printf("%-8s max rel err %.3e\n", e.name.c_str(), e.max_rel_err);
  std::printf("overall  max rel err %.3e (tol %.1e): %s\n", report.max_rel_err, tol,
              report.pass(tol) ? "PASS" : "FAIL");
  return report.pass(tol) ? 0 : 1;
}

int cmd_synth(const DataOpts& d, const std::string& out_content, const std::string& out_cites) {
  if (d.synth_nodes == 0) throw InputError("synth: --synth-nodes must be positive");
  Rng rng(d.synth_seed);
  Graph g = generate_sbm(d.synth_nodes, d.synth_blocks, d.synth_p_in, d.synth_p_out,
                         d.synth_features, rng);
  write_content_cites(g, out_content, out_cites);
  std::printf("wrote %zu nodes, %zu edges to %s / %s\n", g.num_nodes, g.edges.size(),
              out_content.c_str(), out_cites.c_str());
  return 0;
}

int cmd_inspect(const DataOpts& d) {
  LoadAudit audit;
  Graph g = load_graph(d, &audit);
  g.validate();
  double density =
      g.num_nodes > 1
          ? static_cast<double>(g.edges.size()) / (0.5 * g.num_nodes * (g.num_nodes - 1))
          : 0.0;
  std::printf("dataset:    %s\n", dataset_label(d).c_str());
  std::printf("nodes:      %zu\n", g.num_nodes);
  std::printf("edges:      %zu (density %.5f)\n", g.edges.size(), density);
  std::printf("features:   %zu\n", g.feature_dim());
  std::printf("citations:  %zu raw, %zu self, %zu unresolved, %zu duplicate/reciprocal\n",
              audit.raw_citations, audit.self_citations, audit.unresolved_endpoints,
              audit.duplicate_citations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link prediction with latent-variable graph models"};
  app.require_subcommand(1);

  DataOpts data;
  TaskOpts task;
  ModelOpts model;

  auto* train_cmd = app.add_subcommand("train", "Train one model on one split");
  add_data_options(train_cmd, data);
  add_task_options(train_cmd, task);
  add_model_options(train_cmd, model);
  std::string out_path, history_path, params_path;
  train_cmd->add_option("--out", out_path, "Write the result summary JSON here");
  train_cmd->add_option("--history", history_path, "Write the evaluation history JSONL here");
  train_cmd->add_option("--save-params", params_path, "Write the trained parameters here");

  auto* exp_cmd = app.add_subcommand("experiment", "Train across several seeds and aggregate");
  add_data_options(exp_cmd, data);
  add_task_options(exp_cmd, task);
  add_model_options(exp_cmd, model);
  std::size_t num_seeds = 10;
  std::string exp_out;
  exp_cmd->add_option("--seeds", num_seeds, "Number of seeds (starting at --seed)");
  exp_cmd->add_option("--out", exp_out, "Write the aggregated result JSON here");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  std::uint64_t grad_seed = 1;
  double grad_tol = 1e-5;
  grad_cmd->add_option("--seed", grad_seed, "Instance seed");
  grad_cmd->add_option("--tol", grad_tol, "Maximum allowed relative error");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset on disk");
  add_data_options(synth_cmd, data);
  std::string out_content = "synthetic.content", out_cites = "synthetic.cites";
  synth_cmd->add_option("--out-content", out_content, "Output content file");
  synth_cmd->add_option("--out-cites", out_cites, "Output cites file");

  auto* inspect_cmd = app.add_subcommand("inspect", "Print dataset statistics");
  add_data_options(inspect_cmd, data);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(data, task, model, out_path, history_path, params_path);
    if (exp_cmd->parsed()) return cmd_experiment(data, task, model, num_seeds, exp_out);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed, grad_tol);
    if (synth_cmd->parsed()) return cmd_synth(data, out_content, out_cites);
    if (inspect_cmd->parsed()) return cmd_inspect(data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
