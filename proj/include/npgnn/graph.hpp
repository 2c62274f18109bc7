#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "npgnn/matrix.hpp"

namespace npgnn {

using Rng = std::mt19937_64;

struct Edge {
  std::size_t u, v;  // u < v
  bool operator==(const Edge&) const = default;
};

using EdgeList = std::vector<Edge>;

// Canonical undirected edge: (min, max), rejects self-loops.
Edge make_edge(std::size_t a, std::size_t b);

// Undirected simple graph with node features. Immutable after construction.
struct Graph {
  std::size_t num_nodes = 0;
  DenseMatrix features;  // num_nodes x f
  EdgeList edges;        // i < j, unique, no self-loops
  std::vector<std::string> node_ids;  // optional original identifiers

  void validate() const;
  std::size_t feature_dim() const { return features.cols(); }
};

// View of a node-induced subgraph; edges re-indexed into node_ids order.
struct SubgraphRef {
  const Graph* parent = nullptr;
  std::vector<std::size_t> node_ids;  // sorted parent indices
  EdgeList induced_edges;             // local indices

  std::size_t num_nodes() const { return node_ids.size(); }
  DenseMatrix features() const;  // rows selected from parent in node_ids order
};

enum class Task { transductive, inductive, fewshot };

struct SplitBundle {
  Task task = Task::transductive;
  Graph full_graph;
  Graph train_graph;                     // transductive: all nodes + train edges
  std::vector<std::size_t> train_nodes;  // full-graph ids of train_graph rows
  EdgeList val_pos, val_neg, test_pos, test_neg;  // full-graph indices
};

// Edge-set membership helper.
class EdgeSet {
 public:
  explicit EdgeSet(std::size_t n) : n_(n) {}
  EdgeSet(std::size_t n, const EdgeList& edges) : n_(n) {
    for (const auto& e : edges) insert(e);
  }
  void insert(const Edge& e) { keys_.insert(key(e)); }
  bool contains(const Edge& e) const { return keys_.count(key(e)) != 0; }
  bool contains(std::size_t a, std::size_t b) const {
    return a != b && contains(make_edge(a, b));
  }
  std::size_t size() const { return keys_.size(); }

 private:
  std::uint64_t key(const Edge& e) const {
    return static_cast<std::uint64_t>(e.u) * n_ + e.v;
  }
  std::size_t n_;
  std::unordered_set<std::uint64_t> keys_;
};

// D~^{-1/2} (A + I) D~^{-1/2}; self-loops keep isolated nodes well-defined.
SparseMatrix normalize_adjacency(const EdgeList& edges, std::size_t n);

SubgraphRef induce_subgraph(const Graph& g, std::vector<std::size_t> node_ids);

// ceil(fraction * |train_edges|) distinct edges, uniform without replacement.
EdgeList sample_context_edges(const EdgeList& train_edges, double fraction, Rng& rng);

// ceil(fraction * n) nodes with their induced edges.
SubgraphRef sample_context_nodes(const Graph& g, double fraction, Rng& rng);

// Distinct non-edges; with a constraint set, each pair has >= 1 endpoint in it.
// Pairs in `exclude` are never returned (used to keep negative pools disjoint).
EdgeList sample_negative_edges(const Graph& g, std::size_t count,
                               const std::optional<std::vector<std::size_t>>& constraint,
                               Rng& rng, const EdgeList* exclude = nullptr);

SplitBundle make_transductive_split(const Graph& g, double test_frac, double val_frac, Rng& rng);
SplitBundle make_inductive_split(const Graph& g, double test_node_frac, double val_node_frac,
                                 Rng& rng);
// No validation set; test positives are all edges outside the induced train graph.
SplitBundle make_fewshot_split(const Graph& g, double train_node_frac, Rng& rng);

}  // namespace npgnn
