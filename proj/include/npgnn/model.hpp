#pragma once

#include <optional>
#include <string>
#include <vector>

#include "npgnn/autodiff.hpp"
#include "npgnn/graph.hpp"
#include "npgnn/matrix.hpp"

namespace npgnn {

enum class OutputActivation { relu, linear };

struct ModelConfig {
  std::size_t hidden1 = 32;  // GCN hidden width
  std::size_t latent = 32;   // latent dimension d
  std::size_t hidden2 = 64;  // MLP hidden width
  std::size_t embed = 32;    // decoder embedding width
  OutputActivation encoder_output_activation = OutputActivation::relu;
  bool diag_positive = true;  // reconstruction target includes self-loops
};

OutputActivation output_activation_from_string(const std::string& s);
std::string to_string(OutputActivation a);

// Trainable blocks: encoder W1, Wmu, Wsigma; decoder W2, b1, W3, b2.
struct ModelParams {
  DenseMatrix w1;       // f x hidden1
  DenseMatrix w_mu;     // hidden1 x latent
  DenseMatrix w_sigma;  // hidden1 x latent
  DenseMatrix w2;       // (f + latent) x hidden2
  DenseMatrix b1;       // 1 x hidden2
  DenseMatrix w3;       // hidden2 x embed
  DenseMatrix b2;       // 1 x embed

  static ModelParams init(std::size_t feature_dim, const ModelConfig& cfg, Rng& rng);
  static ModelParams zeros(std::size_t feature_dim, const ModelConfig& cfg);

  std::vector<DenseMatrix*> blocks();
  std::vector<const DenseMatrix*> blocks() const;
  static const std::vector<std::string>& block_names();
};

struct NodeGaussianStats {
  DenseMatrix mu;         // m x d
  DenseMatrix log_sigma;  // m x d
};

struct LatentGaussian {
  DenseMatrix mu;         // 1 x d
  DenseMatrix log_sigma;  // 1 x d
};

struct DecoderOutput {
  DenseMatrix embeddings;  // n x embed, entries in (0, 1)
  double logit(std::size_t i, std::size_t j) const;
};

NodeGaussianStats encode(const SparseMatrix& a_bar, const DenseMatrix& x,
                         const ModelParams& params, const ModelConfig& cfg);
LatentGaussian aggregate(const NodeGaussianStats& stats);
// z = mu + exp(log_sigma) .* eps
DenseMatrix sample_latent(const LatentGaussian& lg, const DenseMatrix& epsilon);
DecoderOutput decode(const DenseMatrix& x_full, const DenseMatrix& z,
                     const ModelParams& params, const ModelConfig& cfg);
double edge_probability(const DecoderOutput& dec, std::size_t i, std::size_t j);

// Dense reconstruction target: adjacency (optionally with unit diagonal).
DenseMatrix recon_target(const EdgeList& edges, std::size_t n, bool diag_positive);
// Class-imbalance weights from the training adjacency (2|E| positives off-diagonal).
double recon_pos_weight(std::size_t n, std::size_t num_edges);
double recon_norm(std::size_t n, std::size_t num_edges);

double recon_loglik(const DecoderOutput& dec, const DenseMatrix& target, double pos_weight,
                    double norm);

double kl_diag_gaussian(const LatentGaussian& q, const LatentGaussian& p);

// Prebuilt operands for one ELBO evaluation. Targets/matrices must outlive
// the call (they are referenced by the tape).
struct ElboInputs {
  const SparseMatrix* a_bar_full = nullptr;  // training-graph normalized adjacency
  const DenseMatrix* x_full = nullptr;       // features fed to the full encoder + decoder
  const SparseMatrix* a_bar_ctx = nullptr;
  const DenseMatrix* x_ctx = nullptr;
  const DenseMatrix* target = nullptr;  // recon target over the training graph
  double pos_weight = 1.0;
  double norm = 1.0;
};

struct ElboResult {
  double elbo = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  std::vector<DenseMatrix> grads;  // d(elbo)/d(block), in block order; empty if skipped
};

// Monte Carlo ELBO with L reparameterized samples from the full-graph
// posterior. fixed_eps (L x latent) replays noise for gradient checks.
ElboResult elbo(const ElboInputs& in, const ModelParams& params, const ModelConfig& cfg,
                std::size_t mc_samples, Rng& rng, bool compute_grads,
                const DenseMatrix* fixed_eps = nullptr);

// Convenience wrappers building the operands from graph objects.
ElboResult elbo_with_edge_context(const Graph& train_graph, const EdgeList& context_edges,
                                  const ModelParams& params, const ModelConfig& cfg,
                                  std::size_t mc_samples, Rng& rng, bool compute_grads,
                                  const DenseMatrix* fixed_eps = nullptr);
ElboResult elbo_with_node_context(const Graph& train_graph, const SubgraphRef& context,
                                  const ModelParams& params, const ModelConfig& cfg,
                                  std::size_t mc_samples, Rng& rng, bool compute_grads,
                                  const DenseMatrix* fixed_eps = nullptr);

// VGAE baseline: shared encoder, per-node latents, N(0, I) prior, inner-product
// decoder without the MLP. Only the three encoder blocks receive gradients.
NodeGaussianStats vgae_encode(const SparseMatrix& a_bar, const DenseMatrix& x,
                              const ModelParams& params, const ModelConfig& cfg);
struct VgaeInputs {
  const SparseMatrix* a_bar = nullptr;
  const DenseMatrix* x = nullptr;
  const DenseMatrix* target = nullptr;
  double pos_weight = 1.0;
  double norm = 1.0;
};
// fixed_eps: (L * n) x latent noise for replay.
ElboResult vgae_elbo(const VgaeInputs& in, const ModelParams& params, const ModelConfig& cfg,
                     std::size_t mc_samples, Rng& rng, bool compute_grads,
                     const DenseMatrix* fixed_eps = nullptr);

// Checkpoint: JSON container with config echo, shapes, and row-major values.
void save_params(const ModelParams& params, const ModelConfig& cfg, const std::string& path);
ModelParams load_params(const std::string& path, ModelConfig& cfg_out);

}  // namespace npgnn
