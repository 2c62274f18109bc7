#pragma once

#include <string>
#include <vector>

#include "npgnn/graph.hpp"
#include "npgnn/training.hpp"

namespace npgnn {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadAudit {
  std::size_t raw_citations = 0;        // cites lines read
  std::size_t self_citations = 0;       // dropped (a cites a)
  std::size_t unresolved_endpoints = 0; // dropped (id not in content)
  std::size_t duplicate_citations = 0;  // merged duplicates/reciprocals
};

// Citation-network text format. Content lines: <id> <f1..fk> <label>;
// cites lines: <cited_id> <citing_id>. Whitespace separated. Produces an
// undirected simple graph with nodes in content-line order.
Graph load_content_cites(const std::string& content_path, const std::string& cites_path,
                         LoadAudit* audit = nullptr);

// Two-level stochastic block model; features are the block one-hot plus
// uniform noise on [0, 0.01).
Graph generate_sbm(std::size_t n, std::size_t num_blocks, double p_in, double p_out,
                   std::size_t feature_dim, Rng& rng);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  double auc = -1.0, ap = -1.0;
  double val_auc = -1.0, val_ap = -1.0;
  double wall_seconds = 0.0;
};

struct ExperimentResult {
  TrainConfig config;
  std::string dataset;
  std::string task;
  std::vector<SeedResult> seeds;
  MetricsReport metrics;  // over successful seeds
};

void write_result(const ExperimentResult& result, const std::string& path);
ExperimentResult read_result(const std::string& path);

TrainConfig read_config(const std::string& path);
void write_config(const TrainConfig& config, const std::string& path);
TrainConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const TrainConfig& config);

void write_history_jsonl(const std::vector<EvalPoint>& history, const std::string& path);

// Writes a graph in content/cites format (synthetic data utility).
void write_content_cites(const Graph& g, const std::string& content_path,
                         const std::string& cites_path);

}  // namespace npgnn
