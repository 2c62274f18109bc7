#include "npgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace npgnn {

Edge make_edge(std::size_t a, std::size_t b) {
  if (a == b) throw InputError("make_edge: self-loop");
  return a < b ? Edge{a, b} : Edge{b, a};
}

void Graph::validate() const {
  if (features.rows() != num_nodes)
    throw InputError("Graph: feature row count does not match num_nodes");
  EdgeSet seen(num_nodes);
  for (const auto& e : edges) {
    if (e.u >= e.v || e.v >= num_nodes) throw InputError("Graph: bad edge");
    if (seen.contains(e)) throw InputError("Graph: duplicate edge");
    seen.insert(e);
  }
}

DenseMatrix SubgraphRef::features() const {
  const std::size_t f = parent->features.cols();
  DenseMatrix out(node_ids.size(), f);
  for (std::size_t i = 0; i < node_ids.size(); ++i)
    std::copy_n(parent->features.row(node_ids[i]), f, out.row(i));
  return out;
}

SparseMatrix normalize_adjacency(const EdgeList& edges, std::size_t n) {
  std::vector<double> deg(n, 1.0);  // A + I: every node starts at degree 1
  EdgeSet seen(n);
  for (const auto& e : edges) {
    if (e.u >= e.v || e.v >= n) throw InputError("normalize_adjacency: index out of range");
    if (seen.contains(e)) throw InputError("normalize_adjacency: duplicate edge");
    seen.insert(e);
    deg[e.u] += 1.0;
    deg[e.v] += 1.0;
  }
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(deg[i]);

  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  triplets.reserve(2 * edges.size() + n);
  for (std::size_t i = 0; i < n; ++i) triplets.emplace_back(i, i, dinv[i] * dinv[i]);
  for (const auto& e : edges) {
    double w = dinv[e.u] * dinv[e.v];
    triplets.emplace_back(e.u, e.v, w);
    triplets.emplace_back(e.v, e.u, w);
  }
  return SparseMatrix::from_triplets(n, n, triplets);
}

SubgraphRef induce_subgraph(const Graph& g, std::vector<std::size_t> node_ids) {
  std::unordered_map<std::size_t, std::size_t> local;
  for (std::size_t id : node_ids) {
    if (id >= g.num_nodes) throw InputError("induce_subgraph: index out of range");
    if (!local.emplace(id, 0).second) throw InputError("induce_subgraph: duplicate index");
  }
  std::sort(node_ids.begin(), node_ids.end());
  for (std::size_t i = 0; i < node_ids.size(); ++i) local[node_ids[i]] = i;

  SubgraphRef ref;
  ref.parent = &g;
  ref.node_ids = std::move(node_ids);
  for (const auto& e : g.edges) {
    auto iu = local.find(e.u);
    auto iv = local.find(e.v);
    if (iu != local.end() && iv != local.end())
      ref.induced_edges.push_back(make_edge(iu->second, iv->second));
  }
  return ref;
}

namespace {

std::size_t ceil_count(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total)));
}

// k distinct values from [0, n), uniform without replacement
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

EdgeList sample_context_edges(const EdgeList& train_edges, double fraction, Rng& rng) {
  if (train_edges.empty()) throw InputError("sample_context_edges: empty edge list");
  if (fraction <= 0.0 || fraction > 1.0)
    throw InputError("sample_context_edges: fraction out of (0, 1]");
  std::size_t k = ceil_count(fraction, train_edges.size());
  auto idx = sample_indices(train_edges.size(), k, rng);
  EdgeList out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(train_edges[i]);
  return out;
}

SubgraphRef sample_context_nodes(const Graph& g, double fraction, Rng& rng) {
  if (g.num_nodes == 0) throw InputError("sample_context_nodes: empty graph");
  if (fraction <= 0.0 || fraction > 1.0)
    throw InputError("sample_context_nodes: fraction out of (0, 1]");
  std::size_t k = ceil_count(fraction, g.num_nodes);
  return induce_subgraph(g, sample_indices(g.num_nodes, k, rng));
}

EdgeList sample_negative_edges(const Graph& g, std::size_t count,
                               const std::optional<std::vector<std::size_t>>& constraint,
                               Rng& rng, const EdgeList* exclude) {
  const std::size_t n = g.num_nodes;
  EdgeSet edges(n, g.edges);
  EdgeSet excluded(n);
  if (exclude)
    for (const auto& e : *exclude) excluded.insert(e);

  std::vector<std::size_t> cset;
  std::vector<char> in_c(n, 0);
  if (constraint) {
    cset = *constraint;
    for (std::size_t id : cset) {
      if (id >= n) throw InputError("sample_negative_edges: constraint index out of range");
      in_c[id] = 1;
    }
  }

  auto pair_allowed = [&](const Edge& e) {
    return !constraint || in_c[e.u] || in_c[e.v];
  };

  // feasibility: count non-edges in the allowed universe
  std::size_t universe;
  if (!constraint) {
    universe = n * (n - 1) / 2;
  } else {
    std::size_t c = cset.size();
    universe = c * (n - c) + c * (c - 1) / 2;
  }
  std::size_t blocked = 0;
  for (const auto& e : g.edges)
    if (pair_allowed(e)) ++blocked;
  if (exclude)
    for (const auto& e : *exclude)
      if (pair_allowed(e) && !edges.contains(e)) ++blocked;
  if (universe - blocked < count)
    throw InputError("sample_negative_edges: not enough non-edges available");

  EdgeSet chosen(n);
  EdgeList out;
  out.reserve(count);

  std::size_t available = universe - blocked;
  if (count * 20 > available) {
    // dense case: enumerate the allowed non-edges and shuffle
    EdgeList candidates;
    candidates.reserve(available);
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        Edge e{i, j};
        if (pair_allowed(e) && !edges.contains(e) && !excluded.contains(e))
          candidates.push_back(e);
      }
    auto idx = sample_indices(candidates.size(), count, rng);
    for (std::size_t i : idx) out.push_back(candidates[i]);
    return out;
  }

  std::uniform_int_distribution<std::size_t> any_node(0, n - 1);
  std::bernoulli_distribution coin(0.5);
  while (out.size() < count) {
    std::size_t a, b;
    if (!constraint) {
      a = any_node(rng);
      b = any_node(rng);
    } else {
      std::uniform_int_distribution<std::size_t> c_node(0, cset.size() - 1);
      a = cset[c_node(rng)];
      b = any_node(rng);
      // both-endpoint-in-constraint pairs are generated twice as often
      if (a != b && in_c[a] && in_c[b] && coin(rng)) continue;
    }
    if (a == b) continue;
    Edge e = make_edge(a, b);
    if (edges.contains(e) || chosen.contains(e) || excluded.contains(e)) continue;
    chosen.insert(e);
    out.push_back(e);
  }
  return out;
}

namespace {

std::size_t floor_count(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total)));
}

}  // namespace

SplitBundle make_transductive_split(const Graph& g, double test_frac, double val_frac, Rng& rng) {
  if (test_frac <= 0.0 || val_frac <= 0.0 || test_frac + val_frac >= 1.0)
    throw InputError("make_transductive_split: bad fractions");
  const std::size_t n_test = floor_count(test_frac, g.edges.size());
  const std::size_t n_val = floor_count(val_frac, g.edges.size());
  if (n_test == 0 || n_val == 0)
    throw InputError("make_transductive_split: graph too small for requested fractions");

  auto order = sample_indices(g.edges.size(), g.edges.size(), rng);
  SplitBundle split;
  split.task = Task::transductive;
  split.full_graph = g;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Edge& e = g.edges[order[i]];
    if (i < n_test)
      split.test_pos.push_back(e);
    else if (i < n_test + n_val)
      split.val_pos.push_back(e);
    else
      split.train_graph.edges.push_back(e);
  }
  split.train_graph.num_nodes = g.num_nodes;
  split.train_graph.features = g.features;
  split.train_nodes.resize(g.num_nodes);
  std::iota(split.train_nodes.begin(), split.train_nodes.end(), 0);

  auto negs = sample_negative_edges(g, n_test + n_val, std::nullopt, rng);
  split.test_neg.assign(negs.begin(), negs.begin() + n_test);
  split.val_neg.assign(negs.begin() + n_test, negs.end());
  return split;
}

namespace {

// Builds train_graph induced on train_nodes (sorted) and fills local edges.
void build_train_graph(const Graph& g, const std::vector<std::size_t>& train_nodes,
                       SplitBundle& split) {
  SubgraphRef ref = induce_subgraph(g, train_nodes);
  split.train_nodes = ref.node_ids;
  split.train_graph.num_nodes = ref.node_ids.size();
  split.train_graph.features = ref.features();
  split.train_graph.edges = ref.induced_edges;
  if (!g.node_ids.empty())
    for (std::size_t id : ref.node_ids) split.train_graph.node_ids.push_back(g.node_ids[id]);
}

}  // namespace

SplitBundle make_inductive_split(const Graph& g, double test_node_frac, double val_node_frac,
                                 Rng& rng) {
  if (test_node_frac < 0.0 || val_node_frac < 0.0 || test_node_frac + val_node_frac >= 1.0)
    throw InputError("make_inductive_split: bad fractions");
  const std::size_t k_test = floor_count(test_node_frac, g.num_nodes);
  const std::size_t k_val = floor_count(val_node_frac, g.num_nodes);

  auto order = sample_indices(g.num_nodes, g.num_nodes, rng);
  std::vector<char> is_test(g.num_nodes, 0), is_val(g.num_nodes, 0);
  std::vector<std::size_t> test_nodes(order.begin(), order.begin() + k_test);
  std::vector<std::size_t> val_nodes(order.begin() + k_test, order.begin() + k_test + k_val);
  std::vector<std::size_t> train_nodes(order.begin() + k_test + k_val, order.end());
  for (std::size_t id : test_nodes) is_test[id] = 1;
  for (std::size_t id : val_nodes) is_val[id] = 1;

  SplitBundle split;
  split.task = Task::inductive;
  split.full_graph = g;
  for (const auto& e : g.edges) {
    if (is_test[e.u] || is_test[e.v])
      split.test_pos.push_back(e);
    else if (is_val[e.u] || is_val[e.v])
      split.val_pos.push_back(e);
  }
  build_train_graph(g, train_nodes, split);

  if (!split.test_pos.empty())
    split.test_neg = sample_negative_edges(g, split.test_pos.size(), test_nodes, rng);
  if (!split.val_pos.empty())
    split.val_neg =
        sample_negative_edges(g, split.val_pos.size(), val_nodes, rng, &split.test_neg);
  return split;
}

SplitBundle make_fewshot_split(const Graph& g, double train_node_frac, Rng& rng) {
  if (train_node_frac <= 0.0 || train_node_frac >= 1.0)
    throw InputError("make_fewshot_split: train_node_frac out of (0, 1)");
  const std::size_t k_train = floor_count(train_node_frac, g.num_nodes);
  if (k_train == 0) throw InputError("make_fewshot_split: graph too small");

  auto order = sample_indices(g.num_nodes, g.num_nodes, rng);
  std::vector<std::size_t> train_nodes(order.begin(), order.begin() + k_train);
  std::vector<std::size_t> unseen_nodes(order.begin() + k_train, order.end());
  std::vector<char> in_train(g.num_nodes, 0);
  for (std::size_t id : train_nodes) in_train[id] = 1;

  SplitBundle split;
  split.task = Task::fewshot;
  split.full_graph = g;
  build_train_graph(g, train_nodes, split);
  for (const auto& e : g.edges)
    if (!in_train[e.u] || !in_train[e.v]) split.test_pos.push_back(e);

  if (!split.test_pos.empty())
    split.test_neg = sample_negative_edges(g, split.test_pos.size(), unseen_nodes, rng);
  return split;
}

}  // namespace npgnn
