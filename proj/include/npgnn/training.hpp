#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npgnn/graph.hpp"
#include "npgnn/init.hpp"
#include "npgnn/model.hpp"

namespace npgnn {

enum class ModelKind { npgnn, vgae };
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

struct TrainConfig {
  std::size_t iterations = 500;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t mc_samples = 1;
  double context_fraction = 0.10;
  std::uint64_t seed = 0;
  std::size_t eval_every = 50;
  ModelKind model_kind = ModelKind::npgnn;
  ModelConfig model;

  void validate() const;
};

struct AdamState {
  std::vector<DenseMatrix> m, v;  // first/second moments per block
  std::size_t t = 0;

  static AdamState like(const std::vector<DenseMatrix*>& blocks);
};

// Bias-corrected Adam descent step (in place).
void adam_step(std::vector<DenseMatrix*> params, const std::vector<DenseMatrix>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps);

struct EvalPoint {
  std::size_t iteration = 0;
  double elbo = 0.0, recon = 0.0, kl = 0.0;
  double val_auc = -1.0, val_ap = -1.0;  // -1 when no validation set
};

struct TrainRun {
  ModelParams params;
  std::vector<double> loss_history;  // ELBO per iteration
  std::vector<EvalPoint> history;
  double test_auc = -1.0, test_ap = -1.0;
  double val_auc = -1.0, val_ap = -1.0;
};

TrainRun train(const SplitBundle& split, const TrainConfig& config);

// Scores (edge probabilities) for pairs in full-graph indices. The training
// graph serves as the prediction-time context; z is the posterior mean.
std::vector<double> predict_scores(const ModelParams& params, const TrainConfig& config,
                                   const SplitBundle& split, const EdgeList& pairs);

// Exact tie-aware AUC: P(score+ > score-) + 0.5 P(tie).
double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores);
// Score-descending ranking, ties broken by stable input order.
double average_precision(const std::vector<int>& labels, const std::vector<double>& scores);

struct MetricsReport {
  std::vector<double> auc, ap;
  double auc_mean = 0.0, auc_se = 0.0;
  double ap_mean = 0.0, ap_se = 0.0;

  static MetricsReport aggregate(std::vector<double> auc, std::vector<double> ap);
};

}  // namespace npgnn
