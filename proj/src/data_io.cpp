#include "npgnn/data_io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace npgnn {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

Graph load_content_cites(const std::string& content_path, const std::string& cites_path,
                         LoadAudit* audit) {
  std::ifstream content(content_path);
  if (!content) throw InputError("load_content_cites: cannot open " + content_path);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> feats;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(content, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() < 3)
      throw ParseError("content line " + std::to_string(line_no) +
                       ": expected <id> <features...> <label>");
    std::vector<double> row;
    row.reserve(tokens.size() - 2);
    for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
      try {
        row.push_back(std::stod(tokens[i]));
      } catch (const std::exception&) {
        throw ParseError("content line " + std::to_string(line_no) +
                         ": bad feature value '" + tokens[i] + "'");
      }
    }
    if (!feats.empty() && row.size() != feats.front().size())
      throw ParseError("content line " + std::to_string(line_no) +
                       ": inconsistent feature width");
    if (!index.emplace(tokens.front(), ids.size()).second)
      throw ParseError("content line " + std::to_string(line_no) + ": duplicate id '" +
                       tokens.front() + "'");
    ids.push_back(tokens.front());
    feats.push_back(std::move(row));
  }
  if (ids.empty()) throw ParseError("load_content_cites: no content lines");

  Graph g;
  g.num_nodes = ids.size();
  g.node_ids = ids;
  g.features = DenseMatrix(ids.size(), feats.front().size());
  for (std::size_t i = 0; i < feats.size(); ++i)
    std::copy(feats[i].begin(), feats[i].end(), g.features.row(i));

  std::ifstream cites(cites_path);
  if (!cites) throw InputError("load_content_cites: cannot open " + cites_path);
  LoadAudit local;
  EdgeSet seen(g.num_nodes);
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2)
      throw ParseError("cites line " + std::to_string(line_no) +
                       ": expected <cited_id> <citing_id>");
    ++local.raw_citations;
    auto a = index.find(tokens[0]);
    auto b = index.find(tokens[1]);
    if (a == index.end() || b == index.end()) {
      ++local.unresolved_endpoints;
      continue;
    }
    if (a->second == b->second) {
      ++local.self_citations;
      continue;
    }
    Edge e = make_edge(a->second, b->second);
    if (seen.contains(e)) {
      ++local.duplicate_citations;
      continue;
    }
    seen.insert(e);
    g.edges.push_back(e);
  }
  // canonical sorted edge list, independent of cites-line order
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
  if (audit) *audit = local;
  return g;
}

Graph generate_sbm(std::size_t n, std::size_t num_blocks, double p_in, double p_out,
                   std::size_t feature_dim, Rng& rng) {
  if (num_blocks == 0 || feature_dim == 0) throw InputError("generate_sbm: bad dimensions");
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0)
    throw InputError("generate_sbm: probabilities must be in [0, 1]");
  Graph g;
  g.num_nodes = n;
  g.features = DenseMatrix(n, feature_dim);
  auto block_of = [&](std::size_t i) { return i * num_blocks / n; };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> noise(0.0, 0.01);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < feature_dim; ++k) g.features(i, k) = noise(rng);
    g.features(i, block_of(i) % feature_dim) += 1.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double p = block_of(i) == block_of(j) ? p_in : p_out;
      if (unit(rng) < p) g.edges.push_back(Edge{i, j});
    }
  return g;
}

namespace {

constexpr int kConfigSchema = 1;
constexpr int kResultSchema = 1;

nlohmann::json config_to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"schema_version", kConfigSchema},
      {"iterations", c.iterations},
      {"learning_rate", c.learning_rate},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_eps", c.adam_eps},
      {"mc_samples", c.mc_samples},
      {"context_fraction", c.context_fraction},
      {"seed", c.seed},
      {"eval_every", c.eval_every},
      {"model_kind", to_string(c.model_kind)},
      {"model",
       {{"hidden1", c.model.hidden1},
        {"latent", c.model.latent},
        {"hidden2", c.model.hidden2},
        {"embed", c.model.embed},
        {"encoder_output_activation", to_string(c.model.encoder_output_activation)},
        {"diag_positive", c.model.diag_positive}}}};
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();  // missing keys keep defaults
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchema)
    throw ParseError("config: unsupported schema version");
  TrainConfig c;
  read_key(j, "iterations", c.iterations);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "adam_beta1", c.adam_beta1);
  read_key(j, "adam_beta2", c.adam_beta2);
  read_key(j, "adam_eps", c.adam_eps);
  read_key(j, "mc_samples", c.mc_samples);
  read_key(j, "context_fraction", c.context_fraction);
  read_key(j, "seed", c.seed);
  read_key(j, "eval_every", c.eval_every);
  if (j.contains("model_kind"))
    c.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
  if (j.contains("model")) {
    const auto& m = j.at("model");
    read_key(m, "hidden1", c.model.hidden1);
    read_key(m, "latent", c.model.latent);
    read_key(m, "hidden2", c.model.hidden2);
    read_key(m, "embed", c.model.embed);
    if (m.contains("encoder_output_activation"))
      c.model.encoder_output_activation =
          output_activation_from_string(m.at("encoder_output_activation").get<std::string>());
    read_key(m, "diag_positive", c.model.diag_positive);
  }
  c.validate();
  return c;
}

}  // namespace

std::string config_to_json_text(const TrainConfig& config) {
  return config_to_json(config).dump(2);
}

TrainConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

TrainConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("read_config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

void write_config(const TrainConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_config: cannot open " + path);
  out << config_to_json_text(config) << "\n";
}

void write_result(const ExperimentResult& result, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = kResultSchema;
  j["config"] = config_to_json(result.config);
  j["dataset"] = result.dataset;
  j["task"] = result.task;
  for (const auto& s : result.seeds) {
    j["seeds"].push_back({{"seed", s.seed},
                          {"ok", s.ok},
                          {"error", s.error},
                          {"auc", s.auc},
                          {"ap", s.ap},
                          {"val_auc", s.val_auc},
                          {"val_ap", s.val_ap},
                          {"wall_seconds", s.wall_seconds}});
  }
  j["metrics"] = {{"auc", result.metrics.auc},     {"ap", result.metrics.ap},
                  {"auc_mean", result.metrics.auc_mean}, {"auc_se", result.metrics.auc_se},
                  {"ap_mean", result.metrics.ap_mean},   {"ap_se", result.metrics.ap_se}};
  std::ofstream out(path);
  if (!out) throw InputError("write_result: cannot open " + path);
  out << j.dump(2) << "\n";
}

ExperimentResult read_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("read_result: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("schema_version").get<int>() != kResultSchema)
    throw InputError("read_result: unsupported schema version");
  ExperimentResult r;
  r.config = config_from_json(j.at("config"));
  r.dataset = j.at("dataset").get<std::string>();
  r.task = j.at("task").get<std::string>();
  for (const auto& s : j.value("seeds", nlohmann::json::array())) {
    SeedResult sr;
    sr.seed = s.at("seed").get<std::uint64_t>();
    sr.ok = s.at("ok").get<bool>();
    sr.error = s.at("error").get<std::string>();
    sr.auc = s.at("auc").get<double>();
    sr.ap = s.at("ap").get<double>();
    sr.val_auc = s.at("val_auc").get<double>();
    sr.val_ap = s.at("val_ap").get<double>();
    sr.wall_seconds = s.at("wall_seconds").get<double>();
    r.seeds.push_back(sr);
  }
  const auto& m = j.at("metrics");
  r.metrics.auc = m.at("auc").get<std::vector<double>>();
  r.metrics.ap = m.at("ap").get<std::vector<double>>();
  r.metrics.auc_mean = m.at("auc_mean").get<double>();
  r.metrics.auc_se = m.at("auc_se").get<double>();
  r.metrics.ap_mean = m.at("ap_mean").get<double>();
  r.metrics.ap_se = m.at("ap_se").get<double>();
  return r;
}

void write_history_jsonl(const std::vector<EvalPoint>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_history_jsonl: cannot open " + path);
  for (const auto& pt : history) {
    nlohmann::json j{{"iteration", pt.iteration}, {"elbo", pt.elbo},
                     {"recon", pt.recon},         {"kl", pt.kl},
                     {"val_auc", pt.val_auc},     {"val_ap", pt.val_ap}};
    out << j.dump() << "\n";
  }
}

void write_content_cites(const Graph& g, const std::string& content_path,
                         const std::string& cites_path) {
  std::ofstream content(content_path);
  if (!content) throw InputError("write_content_cites: cannot open " + content_path);
  content.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    content << (g.node_ids.empty() ? "n" + std::to_string(i) : g.node_ids[i]);
    for (std::size_t k = 0; k < g.features.cols(); ++k) content << "\t" << g.features(i, k);
    content << "\tnode\n";
  }
  std::ofstream cites(cites_path);
  if (!cites) throw InputError("write_content_cites: cannot open " + cites_path);
  for (const auto& e : g.edges) {
    auto name = [&](std::size_t id) {
      return g.node_ids.empty() ? "n" + std::to_string(id) : g.node_ids[id];
    };
    cites << name(e.u) << "\t" << name(e.v) << "\n";
  }
}

}  // namespace npgnn
