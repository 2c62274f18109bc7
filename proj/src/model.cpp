#include "npgnn/model.hpp"

#include <cmath>
#include <fstream>

#include "npgnn/init.hpp"
#include "npgnn/kernels.hpp"
#include <json.hpp>

namespace npgnn {

OutputActivation output_activation_from_string(const std::string& s) {
  if (s == "relu") return OutputActivation::relu;
  if (s == "linear") return OutputActivation::linear;
  throw InputError("unknown encoder output activation: " + s);
}

std::string to_string(OutputActivation a) {
  return a == OutputActivation::relu ? "relu" : "linear";
}

ModelParams ModelParams::init(std::size_t f, const ModelConfig& cfg, Rng& rng) {
  ModelParams p;
  p.w1 = glorot_init(f, cfg.hidden1, rng);
  p.w_mu = glorot_init(cfg.hidden1, cfg.latent, rng);
  p.w_sigma = glorot_init(cfg.hidden1, cfg.latent, rng);
  p.w2 = glorot_init(f + cfg.latent, cfg.hidden2, rng);
  p.b1 = DenseMatrix(1, cfg.hidden2);
  p.w3 = glorot_init(cfg.hidden2, cfg.embed, rng);
  p.b2 = DenseMatrix(1, cfg.embed);
  return p;
}

ModelParams ModelParams::zeros(std::size_t f, const ModelConfig& cfg) {
  ModelParams p;
  p.w1 = DenseMatrix(f, cfg.hidden1);
  p.w_mu = DenseMatrix(cfg.hidden1, cfg.latent);
  p.w_sigma = DenseMatrix(cfg.hidden1, cfg.latent);
  p.w2 = DenseMatrix(f + cfg.latent, cfg.hidden2);
  p.b1 = DenseMatrix(1, cfg.hidden2);
  p.w3 = DenseMatrix(cfg.hidden2, cfg.embed);
  p.b2 = DenseMatrix(1, cfg.embed);
  return p;
}

std::vector<DenseMatrix*> ModelParams::blocks() {
  return {&w1, &w_mu, &w_sigma, &w2, &b1, &w3, &b2};
}
std::vector<const DenseMatrix*> ModelParams::blocks() const {
  return {&w1, &w_mu, &w_sigma, &w2, &b1, &w3, &b2};
}
const std::vector<std::string>& ModelParams::block_names() {
  static const std::vector<std::string> names{"w1", "w_mu", "w_sigma", "w2",
                                              "b1", "w3", "b2"};
  return names;
}

namespace {

DenseMatrix apply_out_act(DenseMatrix m, OutputActivation act) {
  return act == OutputActivation::relu ? map(m, UnaryOp::relu) : m;
}

}  // namespace

NodeGaussianStats encode(const SparseMatrix& a_bar, const DenseMatrix& x,
                         const ModelParams& params, const ModelConfig& cfg) {
  DenseMatrix h = map(sparse_dense_matmul(a_bar, dense_matmul(x, params.w1)), UnaryOp::relu);
  NodeGaussianStats out;
  out.mu = apply_out_act(sparse_dense_matmul(a_bar, dense_matmul(h, params.w_mu)),
                         cfg.encoder_output_activation);
  out.log_sigma = apply_out_act(sparse_dense_matmul(a_bar, dense_matmul(h, params.w_sigma)),
                                cfg.encoder_output_activation);
  return out;
}

LatentGaussian aggregate(const NodeGaussianStats& stats) {
  if (stats.mu.rows() == 0) throw InputError("aggregate: no nodes");
  LatentGaussian lg;
  lg.mu = reduce(stats.mu, Axis::rows, ReduceOp::mean);
  lg.log_sigma = reduce(stats.log_sigma, Axis::rows, ReduceOp::mean);
  return lg;
}

DenseMatrix sample_latent(const LatentGaussian& lg, const DenseMatrix& epsilon) {
  if (!lg.mu.same_shape(epsilon)) throw ShapeError("sample_latent: epsilon shape mismatch");
  return elementwise(lg.mu, elementwise(map(lg.log_sigma, UnaryOp::exp), epsilon, BinaryOp::mul),
                     BinaryOp::add);
}

namespace {

DenseMatrix concat_rows_with(const DenseMatrix& x, const DenseMatrix& z) {
  DenseMatrix out(x.rows(), x.cols() + z.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double* row = out.row(i);
    std::copy_n(x.row(i), x.cols(), row);
    std::copy_n(z.data(), z.cols(), row + x.cols());
  }
  return out;
}

DenseMatrix add_bias_rows(DenseMatrix m, const DenseMatrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    kernels::active().add(m.row(i), bias.data(), m.row(i), m.cols());
  return m;
}

}  // namespace

DecoderOutput decode(const DenseMatrix& x_full, const DenseMatrix& z,
                     const ModelParams& params, const ModelConfig& cfg) {
  if (z.rows() != 1 || z.cols() != cfg.latent) throw ShapeError("decode: z must be 1 x latent");
  DenseMatrix xt = concat_rows_with(x_full, z);
  DenseMatrix h = map(add_bias_rows(dense_matmul(xt, params.w2), params.b1), UnaryOp::sigmoid);
  DecoderOutput out;
  out.embeddings =
      map(add_bias_rows(dense_matmul(h, params.w3), params.b2), UnaryOp::sigmoid);
  return out;
}

double DecoderOutput::logit(std::size_t i, std::size_t j) const {
  if (i >= embeddings.rows() || j >= embeddings.rows())
    throw InputError("DecoderOutput::logit: index out of range");
  return kernels::active().dot(embeddings.row(i), embeddings.row(j), embeddings.cols());
}

double edge_probability(const DecoderOutput& dec, std::size_t i, std::size_t j) {
  return stable_sigmoid(dec.logit(i, j));
}

DenseMatrix recon_target(const EdgeList& edges, std::size_t n, bool diag_positive) {
  DenseMatrix t(n, n);
  if (diag_positive)
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  for (const auto& e : edges) {
    t(e.u, e.v) = 1.0;
    t(e.v, e.u) = 1.0;
  }
  return t;
}

double recon_pos_weight(std::size_t n, std::size_t num_edges) {
  const double total = static_cast<double>(n) * static_cast<double>(n);
  const double pos = 2.0 * static_cast<double>(num_edges);
  if (pos == 0.0) return 1.0;
  return (total - pos) / pos;
}

double recon_norm(std::size_t n, std::size_t num_edges) {
  const double total = static_cast<double>(n) * static_cast<double>(n);
  const double neg = total - 2.0 * static_cast<double>(num_edges);
  if (neg <= 0.0) return 1.0;
  return total / (2.0 * neg);
}

double recon_loglik(const DecoderOutput& dec, const DenseMatrix& target, double pos_weight,
                    double norm) {
  if (pos_weight <= 0.0) throw InputError("recon_loglik: pos_weight must be positive");
  const std::size_t n = dec.embeddings.rows();
  if (target.rows() != n || target.cols() != n)
    throw ShapeError("recon_loglik: target shape mismatch");
  DenseMatrix logits = dense_matmul_nt(dec.embeddings, dec.embeddings);
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double x = logits.data()[i];
    if (!std::isfinite(x)) throw NumericError("recon_loglik: non-finite logit");
    double y = target.data()[i];
    acc += pos_weight * y * (-softplus(-x)) + (1.0 - y) * (-softplus(x));
  }
  return norm * acc / static_cast<double>(logits.size());
}

double kl_diag_gaussian(const LatentGaussian& q, const LatentGaussian& p) {
  if (!q.mu.same_shape(p.mu) || !q.log_sigma.same_shape(p.log_sigma) ||
      !q.mu.same_shape(q.log_sigma))
    throw ShapeError("kl_diag_gaussian: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.mu.size(); ++i) {
    double lsq = q.log_sigma.data()[i];
    double lsp = p.log_sigma.data()[i];
    double dmu = q.mu.data()[i] - p.mu.data()[i];
    acc += lsp - lsq + 0.5 * std::exp(2.0 * (lsq - lsp)) +
           0.5 * dmu * dmu * std::exp(-2.0 * lsp) - 0.5;
  }
  return acc;
}

namespace {

struct EncodedOnTape {
  ad::NodeRef mu, log_sigma;
};

struct ParamNodes {
  ad::NodeRef w1, w_mu, w_sigma, w2, b1, w3, b2;
  std::vector<ad::NodeRef> all() const { return {w1, w_mu, w_sigma, w2, b1, w3, b2}; }
};

ParamNodes push_params(ad::Tape& tape, const ModelParams& p, bool requires_grad) {
  return ParamNodes{tape.input(p.w1, requires_grad),     tape.input(p.w_mu, requires_grad),
                    tape.input(p.w_sigma, requires_grad), tape.input(p.w2, requires_grad),
                    tape.input(p.b1, requires_grad),      tape.input(p.w3, requires_grad),
                    tape.input(p.b2, requires_grad)};
}

EncodedOnTape encode_on_tape(ad::Tape& tape, const SparseMatrix& a_bar, ad::NodeRef x,
                             const ParamNodes& p, OutputActivation act) {
  auto h = tape.relu(tape.sparse_matmul(a_bar, tape.matmul(x, p.w1)));
  auto mu = tape.sparse_matmul(a_bar, tape.matmul(h, p.w_mu));
  auto ls = tape.sparse_matmul(a_bar, tape.matmul(h, p.w_sigma));
  if (act == OutputActivation::relu) {
    mu = tape.relu(mu);
    ls = tape.relu(ls);
  }
  return {mu, ls};
}

// sum_k [ lsp - lsq + 0.5 e^{2(lsq - lsp)} + 0.5 (muq - mup)^2 e^{-2 lsp} - 0.5 ]
ad::NodeRef kl_on_tape(ad::Tape& t, ad::NodeRef mu_q, ad::NodeRef ls_q, ad::NodeRef mu_p,
                       ad::NodeRef ls_p) {
  auto d1 = t.sub(ls_p, ls_q);
  auto ratio = t.exp(t.scalar_scale(t.sub(ls_q, ls_p), 2.0));
  auto dmu = t.sub(mu_q, mu_p);
  auto quad = t.mul(t.mul(dmu, dmu), t.exp(t.scalar_scale(ls_p, -2.0)));
  auto terms = t.add(d1, t.add_scalar(t.scalar_scale(t.add(ratio, quad), 0.5), -0.5));
  return t.sum(terms);
}

ad::NodeRef decode_logits_on_tape(ad::Tape& t, ad::NodeRef x_full, ad::NodeRef z,
                                  const ParamNodes& p) {
  auto xt = t.concat_broadcast_row(x_full, z);
  auto h = t.sigmoid(t.add_row_bias(t.matmul(xt, p.w2), p.b1));
  auto u = t.sigmoid(t.add_row_bias(t.matmul(h, p.w3), p.b2));
  return t.matmul_nt(u, u);
}

std::vector<DenseMatrix> collect_grads(const ad::Tape& tape, const ParamNodes& p,
                                       const ModelParams& params) {
  std::vector<DenseMatrix> grads;
  auto nodes = p.all();
  auto blocks = params.blocks();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    try {
      grads.push_back(tape.grad(nodes[i]));
    } catch (const std::runtime_error&) {
      grads.emplace_back(blocks[i]->rows(), blocks[i]->cols());  // unused block
    }
  }
  return grads;
}

DenseMatrix draw_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

ElboResult elbo(const ElboInputs& in, const ModelParams& params, const ModelConfig& cfg,
                std::size_t mc_samples, Rng& rng, bool compute_grads,
                const DenseMatrix* fixed_eps) {
  if (mc_samples < 1) throw InputError("elbo: mc_samples must be >= 1");
  DenseMatrix eps = fixed_eps ? *fixed_eps : draw_normal(mc_samples, cfg.latent, rng);
  if (eps.rows() != mc_samples || eps.cols() != cfg.latent)
    throw ShapeError("elbo: epsilon shape mismatch");

  ad::Tape tape;
  ParamNodes p = push_params(tape, params, compute_grads);
  auto x_full = tape.constant(*in.x_full);
  auto x_ctx = in.x_ctx == in.x_full ? x_full : tape.constant(*in.x_ctx);

  auto full = encode_on_tape(tape, *in.a_bar_full, x_full, p, cfg.encoder_output_activation);
  auto ctx = encode_on_tape(tape, *in.a_bar_ctx, x_ctx, p, cfg.encoder_output_activation);

  auto mu_q = tape.mean_rows(full.mu);
  auto ls_q = tape.mean_rows(full.log_sigma);
  auto mu_p = tape.mean_rows(ctx.mu);
  auto ls_p = tape.mean_rows(ctx.log_sigma);
  auto kl = kl_on_tape(tape, mu_q, ls_q, mu_p, ls_p);

  auto sigma_q = tape.exp(ls_q);
  ad::NodeRef recon_sum{-1};
  for (std::size_t l = 0; l < mc_samples; ++l) {
    DenseMatrix eps_row(1, cfg.latent);
    std::copy_n(eps.row(l), cfg.latent, eps_row.data());
    auto z = tape.add(mu_q, tape.mul(sigma_q, tape.constant(std::move(eps_row))));
    auto logits = decode_logits_on_tape(tape, x_full, z, p);
    auto recon_l = tape.weighted_bce_with_logits(logits, *in.target, in.pos_weight, in.norm);
    recon_sum = l == 0 ? recon_l : tape.add(recon_sum, recon_l);
  }
  auto recon = tape.scalar_scale(recon_sum, 1.0 / static_cast<double>(mc_samples));
  auto bound = tape.sub(recon, kl);

  ElboResult result;
  result.elbo = tape.scalar_value(bound);
  result.recon = tape.scalar_value(recon);
  result.kl = tape.scalar_value(kl);
  if (compute_grads) {
    tape.backward(bound);
    result.grads = collect_grads(tape, p, params);
  }
  return result;
}

ElboResult elbo_with_edge_context(const Graph& train_graph, const EdgeList& context_edges,
                                  const ModelParams& params, const ModelConfig& cfg,
                                  std::size_t mc_samples, Rng& rng, bool compute_grads,
                                  const DenseMatrix* fixed_eps) {
  SparseMatrix a_full = normalize_adjacency(train_graph.edges, train_graph.num_nodes);
  SparseMatrix a_ctx = normalize_adjacency(context_edges, train_graph.num_nodes);
  DenseMatrix target = recon_target(train_graph.edges, train_graph.num_nodes, cfg.diag_positive);
  ElboInputs in;
  in.a_bar_full = &a_full;
  in.x_full = &train_graph.features;
  in.a_bar_ctx = &a_ctx;
  in.x_ctx = &train_graph.features;
  in.target = &target;
  in.pos_weight = recon_pos_weight(train_graph.num_nodes, train_graph.edges.size());
  in.norm = recon_norm(train_graph.num_nodes, train_graph.edges.size());
  return elbo(in, params, cfg, mc_samples, rng, compute_grads, fixed_eps);
}

ElboResult elbo_with_node_context(const Graph& train_graph, const SubgraphRef& context,
                                  const ModelParams& params, const ModelConfig& cfg,
                                  std::size_t mc_samples, Rng& rng, bool compute_grads,
                                  const DenseMatrix* fixed_eps) {
  SparseMatrix a_full = normalize_adjacency(train_graph.edges, train_graph.num_nodes);
  SparseMatrix a_ctx = normalize_adjacency(context.induced_edges, context.num_nodes());
  DenseMatrix x_ctx = context.features();
  DenseMatrix target = recon_target(train_graph.edges, train_graph.num_nodes, cfg.diag_positive);
  ElboInputs in;
  in.a_bar_full = &a_full;
  in.x_full = &train_graph.features;
  in.a_bar_ctx = &a_ctx;
  in.x_ctx = &x_ctx;
  in.target = &target;
  in.pos_weight = recon_pos_weight(train_graph.num_nodes, train_graph.edges.size());
  in.norm = recon_norm(train_graph.num_nodes, train_graph.edges.size());
  return elbo(in, params, cfg, mc_samples, rng, compute_grads, fixed_eps);
}

NodeGaussianStats vgae_encode(const SparseMatrix& a_bar, const DenseMatrix& x,
                              const ModelParams& params, const ModelConfig& cfg) {
  return encode(a_bar, x, params, cfg);
}

ElboResult vgae_elbo(const VgaeInputs& in, const ModelParams& params, const ModelConfig& cfg,
                     std::size_t mc_samples, Rng& rng, bool compute_grads,
                     const DenseMatrix* fixed_eps) {
  if (mc_samples < 1) throw InputError("vgae_elbo: mc_samples must be >= 1");
  const std::size_t n = in.x->rows();
  DenseMatrix eps = fixed_eps ? *fixed_eps : draw_normal(mc_samples * n, cfg.latent, rng);
  if (eps.rows() != mc_samples * n || eps.cols() != cfg.latent)
    throw ShapeError("vgae_elbo: epsilon shape mismatch");

  ad::Tape tape;
  ParamNodes p = push_params(tape, params, compute_grads);
  auto x = tape.constant(*in.x);
  auto enc = encode_on_tape(tape, *in.a_bar, x, p, cfg.encoder_output_activation);

  // KL(N(mu, sigma^2) || N(0, I)) summed over nodes and dims, / n
  auto two_ls = tape.scalar_scale(enc.log_sigma, 2.0);
  auto kl_terms = tape.add_scalar(
      tape.sub(tape.add(tape.mul(enc.mu, enc.mu), tape.exp(two_ls)), two_ls), -1.0);
  auto kl = tape.scalar_scale(tape.sum(kl_terms), 0.5 / static_cast<double>(n));

  auto sigma = tape.exp(enc.log_sigma);
  ad::NodeRef recon_sum{-1};
  for (std::size_t l = 0; l < mc_samples; ++l) {
    DenseMatrix eps_l(n, cfg.latent);
    std::copy_n(eps.row(l * n), n * cfg.latent, eps_l.data());
    auto z = tape.add(enc.mu, tape.mul(sigma, tape.constant(std::move(eps_l))));
    auto logits = tape.matmul_nt(z, z);
    auto recon_l = tape.weighted_bce_with_logits(logits, *in.target, in.pos_weight, in.norm);
    recon_sum = l == 0 ? recon_l : tape.add(recon_sum, recon_l);
  }
  auto recon = tape.scalar_scale(recon_sum, 1.0 / static_cast<double>(mc_samples));
  auto bound = tape.sub(recon, kl);

  ElboResult result;
  result.elbo = tape.scalar_value(bound);
  result.recon = tape.scalar_value(recon);
  result.kl = tape.scalar_value(kl);
  if (compute_grads) {
    tape.backward(bound);
    result.grads = collect_grads(tape, p, params);
  }
  return result;
}

namespace {

nlohmann::json matrix_to_json(const DenseMatrix& m) {
  return nlohmann::json{{"rows", m.rows()},
                        {"cols", m.cols()},
                        {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

DenseMatrix matrix_from_json(const nlohmann::json& j) {
  return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                     j.at("data").get<std::vector<double>>());
}

}  // namespace

void save_params(const ModelParams& params, const ModelConfig& cfg, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = {{"hidden1", cfg.hidden1},
                 {"latent", cfg.latent},
                 {"hidden2", cfg.hidden2},
                 {"embed", cfg.embed},
                 {"encoder_output_activation", to_string(cfg.encoder_output_activation)},
                 {"diag_positive", cfg.diag_positive}};
  auto blocks = params.blocks();
  const auto& names = ModelParams::block_names();
  for (std::size_t i = 0; i < blocks.size(); ++i) j["params"][names[i]] = matrix_to_json(*blocks[i]);
  std::ofstream out(path);
  if (!out) throw InputError("save_params: cannot open " + path);
  out << j.dump(2) << "\n";
}

ModelParams load_params(const std::string& path, ModelConfig& cfg_out) {
  std::ifstream in(path);
  if (!in) throw InputError("load_params: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("schema_version").get<int>() != 1)
    throw InputError("load_params: unsupported schema version");
  const auto& c = j.at("config");
  cfg_out.hidden1 = c.at("hidden1").get<std::size_t>();
  cfg_out.latent = c.at("latent").get<std::size_t>();
  cfg_out.hidden2 = c.at("hidden2").get<std::size_t>();
  cfg_out.embed = c.at("embed").get<std::size_t>();
  cfg_out.encoder_output_activation =
      output_activation_from_string(c.at("encoder_output_activation").get<std::string>());
  cfg_out.diag_positive = c.at("diag_positive").get<bool>();
  ModelParams p;
  auto blocks = p.blocks();
  const auto& names = ModelParams::block_names();
  for (std::size_t i = 0; i < blocks.size(); ++i)
    *blocks[i] = matrix_from_json(j.at("params").at(names[i]));
  return p;
}

}  // namespace npgnn
