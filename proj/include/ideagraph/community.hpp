#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ideagraph/graph.hpp"

namespace ideagraph {

namespace community {

// Undirected weighted graph. `adj` holds no self-loops; `self_loop[i]` is
// the weight of edges internal to aggregated node i.
struct WeightedGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;
  std::vector<double> self_loop;

  explicit WeightedGraph(std::size_t n = 0) : adj(n), self_loop(n, 0.0) {}

  std::size_t size() const { return adj.size(); }

  void add_edge(std::size_t a, std::size_t b, double w = 1.0) {
    if (a == b) {
      self_loop[a] += w;
      return;
    }
    for (auto& [nb, wt] : adj[a])
      if (nb == b) {
        wt += w;
        for (auto& [nb2, wt2] : adj[b])
          if (nb2 == a) wt2 += w;
        return;
      }
    adj[a].emplace_back(b, w);
    adj[b].emplace_back(a, w);
  }

  double degree(std::size_t i) const {
    double k = 2.0 * self_loop[i];
    for (const auto& [_, w] : adj[i]) k += w;
    return k;
  }

  double total_weight() const {
    double s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += degree(i);
    return s / 2.0;
  }
};

// Modularity with resolution gamma: sum over communities of
// in_c / m - gamma * (tot_c / 2m)^2.
inline double modularity(const WeightedGraph& g, const std::vector<std::size_t>& part,
                         double gamma = 1.0) {
  double m = g.total_weight();
  if (m <= 0) return 0.0;
  std::map<std::size_t, double> in, tot;
  for (std::size_t i = 0; i < g.size(); ++i) {
    tot[part[i]] += g.degree(i);
    in[part[i]] += g.self_loop[i];
    for (const auto& [j, w] : g.adj[i])
      if (part[j] == part[i] && i < j) in[part[i]] += w;
  }
  double q = 0;
  for (const auto& [c, t] : tot) q += in[c] / m - gamma * (t / (2 * m)) * (t / (2 * m));
  return q;
}

namespace detail {

inline std::vector<std::size_t> relabel(const std::vector<std::size_t>& part) {
  std::map<std::size_t, std::size_t> ids;
  std::vector<std::size_t> out(part.size());
  for (std::size_t i = 0; i < part.size(); ++i)
    out[i] = ids.try_emplace(part[i], ids.size()).first->second;
  return out;
}

// Greedy node moves until no move improves modularity.
inline std::vector<std::size_t> local_moving(const WeightedGraph& g, std::vector<std::size_t> part,
                                             double gamma, std::mt19937_64& rng) {
  const std::size_t n = g.size();
  const double m = g.total_weight();
  if (m <= 0) return part;
  std::vector<double> k(n), tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = g.degree(i);
    tot[part[i]] += k[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> link(n, 0.0);
  std::vector<std::size_t> touched;
  constexpr double kEps = 1e-12;
  bool moved = true;
  while (moved) {
    moved = false;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const std::size_t cur = part[i];
      touched.clear();
      for (const auto& [j, w] : g.adj[i]) {
        if (link[part[j]] == 0.0) touched.push_back(part[j]);
        link[part[j]] += w;
      }
      tot[cur] -= k[i];
      auto gain = [&](std::size_t c) { return link[c] - gamma * k[i] * tot[c] / (2 * m); };
      std::size_t best = cur;
      double best_gain = gain(cur);
      std::sort(touched.begin(), touched.end());
      for (std::size_t c : touched)
        if (gain(c) > best_gain + kEps) {
          best = c;
          best_gain = gain(c);
        }
      tot[best] += k[i];
      if (best != cur) {
        part[i] = best;
        moved = true;
      }
      for (std::size_t c : touched) link[c] = 0.0;
    }
  }
  return part;
}

// Splits every community into its connected components.
inline std::vector<std::size_t> split_connected(const WeightedGraph& g,
                                                const std::vector<std::size_t>& part) {
  const std::size_t n = g.size();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> out(n, kUnset);
  std::size_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (out[s] != kUnset) continue;
    out[s] = next;
    stack.assign(1, s);
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (const auto& [u, _] : g.adj[v])
        if (out[u] == kUnset && part[u] == part[s]) {
          out[u] = next;
          stack.push_back(u);
        }
    }
    ++next;
  }
  return out;
}

inline WeightedGraph aggregate(const WeightedGraph& g, const std::vector<std::size_t>& part,
                               std::size_t count) {
  WeightedGraph agg(count);
  for (std::size_t i = 0; i < g.size(); ++i) {
    agg.self_loop[part[i]] += g.self_loop[i];
    for (const auto& [j, w] : g.adj[i])
      if (i < j) agg.add_edge(part[i], part[j], w);
  }
  return agg;
}

}  // namespace detail

// Modularity-maximizing partition: local moving, then each community is
// split into connected components before aggregation, and the aggregate
// starts from the unrefined partition. Returns community index per node,
// numbered by first member.
inline std::vector<std::size_t> partition(const WeightedGraph& g, double gamma,
                                          std::uint64_t seed) {
  const std::size_t n = g.size();
  if (n == 0) return {};
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> to_agg(n);
  std::iota(to_agg.begin(), to_agg.end(), 0);
  WeightedGraph cur = g;
  std::vector<std::size_t> init(n);
  std::iota(init.begin(), init.end(), 0);
  while (true) {
    auto part = detail::local_moving(cur, init, gamma, rng);
    auto refined = detail::split_connected(cur, part);
    std::size_t count = *std::max_element(refined.begin(), refined.end()) + 1;
    for (auto& a : to_agg) a = refined[a];
    if (count == cur.size()) break;
    std::vector<std::size_t> next_init(count);
    for (std::size_t i = 0; i < cur.size(); ++i) next_init[refined[i]] = part[i];
    cur = detail::aggregate(cur, refined, count);
    init = detail::relabel(next_init);
  }
  return detail::relabel(to_agg);
}

}  // namespace community

// Communities over the undirected projection of the graph, nodes taken in
// node_id order. Isolated nodes come out as singletons.
inline std::vector<Community> detect_communities(const KnowledgeGraph& graph,
                                                 double resolution = 1.0,
                                                 std::uint64_t seed = 0) {
  graph.validate();
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  for (const auto& [id, _] : graph.nodes()) {
    index[id] = ids.size();
    ids.push_back(id);
  }
  community::WeightedGraph g(ids.size());
  for (const auto& [_, e] : graph.edges()) g.add_edge(index.at(e.src), index.at(e.dst), 1.0);
  auto part = community::partition(g, resolution, seed);
  std::vector<Community> out;
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (part[i] >= out.size()) {
      out.resize(part[i] + 1);
      out[part[i]].community_id = "c" + std::to_string(part[i]);
    }
    out[part[i]].member_node_ids.insert(ids[i]);
  }
  return out;
}

}  // namespace ideagraph
