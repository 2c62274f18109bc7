#include "npgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npgnn/kernels.hpp"

namespace npgnn {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "npgnn") return ModelKind::npgnn;
  if (s == "vgae") return ModelKind::vgae;
  throw InputError("unknown model kind: " + s);
}

std::string to_string(ModelKind k) { return k == ModelKind::npgnn ? "npgnn" : "vgae"; }

void TrainConfig::validate() const {
  if (iterations == 0 || mc_samples == 0 || eval_every == 0)
    throw InputError("TrainConfig: counts must be positive");
  if (learning_rate <= 0.0) throw InputError("TrainConfig: learning_rate must be positive");
  if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
    throw InputError("TrainConfig: betas must be in (0, 1)");
  if (context_fraction <= 0.0 || context_fraction > 1.0)
    throw InputError("TrainConfig: context_fraction must be in (0, 1]");
}

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw InputError("glorot_init: dimensions must be positive");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uniform(-a, a);
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
  return m;
}

AdamState AdamState::like(const std::vector<DenseMatrix*>& blocks) {
  AdamState s;
  for (const auto* b : blocks) {
    s.m.emplace_back(b->rows(), b->cols());
    s.v.emplace_back(b->rows(), b->cols());
  }
  return s;
}

void adam_step(std::vector<DenseMatrix*> params, const std::vector<DenseMatrix>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: block count mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    DenseMatrix& w = *params[p];
    const DenseMatrix& g = grads[p];
    if (!w.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      double gi = g.data()[i];
      if (!std::isfinite(gi))
        throw NumericError("adam_step: non-finite gradient in block " +
                           std::to_string(p) + " at entry " + std::to_string(i));
      double& mi = state.m[p].data()[i];
      double& vi = state.v[p].data()[i];
      mi = beta1 * mi + (1.0 - beta1) * gi;
      vi = beta2 * vi + (1.0 - beta2) * gi * gi;
      w.data()[i] -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
    }
  }
}

double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw InputError("roc_auc: size mismatch");
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InputError("roc_auc: both classes required");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // rank-sum with average ranks over tied scores
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw InputError("average_precision: size mismatch");
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  if (n_pos == 0) throw InputError("average_precision: at least one positive required");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] != 0) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(n_pos);
}

MetricsReport MetricsReport::aggregate(std::vector<double> auc, std::vector<double> ap) {
  if (auc.size() != ap.size() || auc.empty())
    throw InputError("MetricsReport: per-seed vectors must be non-empty and equal length");
  MetricsReport r;
  r.auc = std::move(auc);
  r.ap = std::move(ap);
  auto stats = [](const std::vector<double>& xs, double& mean, double& se) {
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() < 2) {
      se = 0.0;
      return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
         std::sqrt(static_cast<double>(xs.size()));
  };
  stats(r.auc, r.auc_mean, r.auc_se);
  stats(r.ap, r.ap_mean, r.ap_se);
  return r;
}

namespace {

// training edges mapped back to full-graph indices
EdgeList train_edges_in_full_ids(const SplitBundle& split) {
  EdgeList out;
  out.reserve(split.train_graph.edges.size());
  for (const auto& e : split.train_graph.edges)
    out.push_back(make_edge(split.train_nodes[e.u], split.train_nodes[e.v]));
  return out;
}

std::pair<double, double> eval_pairs(const ModelParams& params, const TrainConfig& config,
                                     const SplitBundle& split, const EdgeList& pos,
                                     const EdgeList& neg) {
  EdgeList pairs(pos);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  std::vector<int> labels(pos.size(), 1);
  labels.resize(pairs.size(), 0);
  auto scores = predict_scores(params, config, split, pairs);
  return {roc_auc(labels, scores), average_precision(labels, scores)};
}

}  // namespace

std::vector<double> predict_scores(const ModelParams& params, const TrainConfig& config,
                                   const SplitBundle& split, const EdgeList& pairs) {
  const Graph& tg = split.train_graph;
  const ModelConfig& mc = config.model;

  DecoderOutput dec;        // npgnn path
  NodeGaussianStats stats;  // vgae path: per-node latent means over all nodes
  if (config.model_kind == ModelKind::npgnn) {
    SparseMatrix a_ctx = normalize_adjacency(tg.edges, tg.num_nodes);
    LatentGaussian lg = aggregate(encode(a_ctx, tg.features, params, mc));
    dec = decode(split.full_graph.features, lg.mu, params, mc);
  } else {
    // unseen nodes enter with self-loops only: adjacency holds training edges
    SparseMatrix a_full =
        normalize_adjacency(train_edges_in_full_ids(split), split.full_graph.num_nodes);
    stats = vgae_encode(a_full, split.full_graph.features, params, mc);
  }

  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& e : pairs) {
    if (e.v >= split.full_graph.num_nodes) throw InputError("predict_scores: index out of range");
    if (config.model_kind == ModelKind::npgnn) {
      scores.push_back(edge_probability(dec, e.u, e.v));
    } else {
      double logit = kernels::active().dot(stats.mu.row(e.u), stats.mu.row(e.v), mc.latent);
      scores.push_back(stable_sigmoid(logit));
    }
  }
  return scores;
}

TrainRun train(const SplitBundle& split, const TrainConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Graph& tg = split.train_graph;
  if (tg.num_nodes == 0) throw InputError("train: empty training graph");

  TrainRun run;
  run.params = ModelParams::init(tg.feature_dim(), config.model, rng);
  auto blocks = run.params.blocks();
  AdamState adam = AdamState::like(blocks);

  SparseMatrix a_full = normalize_adjacency(tg.edges, tg.num_nodes);
  DenseMatrix target = recon_target(tg.edges, tg.num_nodes, config.model.diag_positive);
  const double pw = recon_pos_weight(tg.num_nodes, tg.edges.size());
  const double norm = recon_norm(tg.num_nodes, tg.edges.size());

  const bool has_val = !split.val_pos.empty() && !split.val_neg.empty();

  for (std::size_t it = 0; it < config.iterations; ++it) {
    ElboResult step;
    if (config.model_kind == ModelKind::vgae) {
      VgaeInputs in;
      in.a_bar = &a_full;
      in.x = &tg.features;
      in.target = &target;
      in.pos_weight = pw;
      in.norm = norm;
      step = vgae_elbo(in, run.params, config.model, config.mc_samples, rng, true);
    } else if (split.task == Task::transductive) {
      EdgeList ctx_edges = sample_context_edges(tg.edges, config.context_fraction, rng);
      SparseMatrix a_ctx = normalize_adjacency(ctx_edges, tg.num_nodes);
      ElboInputs in;
      in.a_bar_full = &a_full;
      in.x_full = &tg.features;
      in.a_bar_ctx = &a_ctx;
      in.x_ctx = &tg.features;  // context keeps all node features
      in.target = &target;
      in.pos_weight = pw;
      in.norm = norm;
      step = elbo(in, run.params, config.model, config.mc_samples, rng, true);
    } else {
      SubgraphRef ctx = sample_context_nodes(tg, config.context_fraction, rng);
      SparseMatrix a_ctx = normalize_adjacency(ctx.induced_edges, ctx.num_nodes());
      DenseMatrix x_ctx = ctx.features();
      ElboInputs in;
      in.a_bar_full = &a_full;
      in.x_full = &tg.features;
      in.a_bar_ctx = &a_ctx;
      in.x_ctx = &x_ctx;
      in.target = &target;
      in.pos_weight = pw;
      in.norm = norm;
      step = elbo(in, run.params, config.model, config.mc_samples, rng, true);
    }

    if (!std::isfinite(step.elbo))
      throw NumericError("train: non-finite loss at iteration " + std::to_string(it));
    run.loss_history.push_back(step.elbo);

    // maximize the bound: descend on its negation
    for (auto& g : step.grads)
      kernels::active().scale(-1.0, g.data(), g.data(), g.size());
    adam_step(blocks, step.grads, adam, config.learning_rate, config.adam_beta1,
              config.adam_beta2, config.adam_eps);

    if ((it + 1) % config.eval_every == 0 || it + 1 == config.iterations) {
      EvalPoint pt;
      pt.iteration = it + 1;
      pt.elbo = step.elbo;
      pt.recon = step.recon;
      pt.kl = step.kl;
      if (has_val) {
        auto [auc, ap] = eval_pairs(run.params, config, split, split.val_pos, split.val_neg);
        pt.val_auc = auc;
        pt.val_ap = ap;
      }
      run.history.push_back(pt);
    }
  }

  if (has_val) {
    auto [auc, ap] = eval_pairs(run.params, config, split, split.val_pos, split.val_neg);
    run.val_auc = auc;
    run.val_ap = ap;
  }
  if (!split.test_pos.empty() && !split.test_neg.empty()) {
    auto [auc, ap] = eval_pairs(run.params, config, split, split.test_pos, split.test_neg);
    run.test_auc = auc;
    run.test_ap = ap;
  }
  return run;
}

}  // namespace npgnn
