#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ideagraph/error.hpp"
#include "ideagraph/gateway.hpp"
#include "ideagraph/text.hpp"

namespace ideagraph {

enum class GraphKind { paper_graph, citation_graph };
enum class NodeKind { Domain, Problem, Paper, Method };
enum class EdgeKind { has, is_solved_by, uses, cites };

inline const char* to_string(GraphKind k) {
  return k == GraphKind::paper_graph ? "paper_graph" : "citation_graph";
}
inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Domain: return "Domain";
    case NodeKind::Problem: return "Problem";
    case NodeKind::Paper: return "Paper";
    case NodeKind::Method: return "Method";
  }
  return "?";
}
inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::has: return "has";
    case EdgeKind::is_solved_by: return "is_solved_by";
    case EdgeKind::uses: return "uses";
    case EdgeKind::cites: return "cites";
  }
  return "?";
}

inline GraphKind graph_kind_from_string(const std::string& s) {
  if (s == "paper_graph") return GraphKind::paper_graph;
  if (s == "citation_graph") return GraphKind::citation_graph;
  throw ValidationError("unknown graph kind '" + s + "'");
}
inline NodeKind node_kind_from_string(const std::string& s) {
  for (auto k : {NodeKind::Domain, NodeKind::Problem, NodeKind::Paper, NodeKind::Method})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown node kind '" + s + "'");
}
inline EdgeKind edge_kind_from_string(const std::string& s) {
  for (auto k : {EdgeKind::has, EdgeKind::is_solved_by, EdgeKind::uses, EdgeKind::cites})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown edge kind '" + s + "'");
}

inline std::string node_kind_prefix(NodeKind k) {
  std::string s = to_string(k);
  s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

// Endpoint typing for every edge kind.
inline std::pair<NodeKind, NodeKind> edge_endpoints(EdgeKind k) {
  switch (k) {
    case EdgeKind::has: return {NodeKind::Domain, NodeKind::Problem};
    case EdgeKind::is_solved_by: return {NodeKind::Problem, NodeKind::Paper};
    case EdgeKind::uses: return {NodeKind::Paper, NodeKind::Method};
    case EdgeKind::cites: return {NodeKind::Paper, NodeKind::Paper};
  }
  return {NodeKind::Paper, NodeKind::Paper};
}

inline bool node_kind_allowed(GraphKind g, NodeKind k) {
  return g == GraphKind::paper_graph || k == NodeKind::Paper || k == NodeKind::Method;
}
inline bool edge_kind_allowed(GraphKind g, EdgeKind k) {
  if (g == GraphKind::paper_graph) return k != EdgeKind::cites;
  return k == EdgeKind::cites || k == EdgeKind::uses;
}

struct GraphNode {
  std::string node_id;
  NodeKind kind{};
  std::string canonical_name;
  std::set<std::string> aliases;
  std::set<std::string> source_paper_ids;

  json to_json() const {
    return {{"node_id", node_id},
            {"kind", to_string(kind)},
            {"canonical_name", canonical_name},
            {"aliases", aliases},
            {"source_paper_ids", source_paper_ids}};
  }
  static GraphNode from_json(const json& j) {
    GraphNode n;
    n.node_id = j.at("node_id").get<std::string>();
    n.kind = node_kind_from_string(j.at("kind").get<std::string>());
    n.canonical_name = j.at("canonical_name").get<std::string>();
    n.aliases = j.at("aliases").get<std::set<std::string>>();
    n.source_paper_ids = j.at("source_paper_ids").get<std::set<std::string>>();
    return n;
  }
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::string src;
  std::string dst;
  EdgeKind kind{};
  bool synthetic = false;
  std::string provenance;

  auto key() const { return std::make_tuple(src, dst, kind); }

  json to_json() const {
    return {{"src", src},
            {"dst", dst},
            {"kind", to_string(kind)},
            {"synthetic", synthetic},
            {"provenance", provenance}};
  }
  static GraphEdge from_json(const json& j) {
    return {j.at("src").get<std::string>(), j.at("dst").get<std::string>(),
            edge_kind_from_string(j.at("kind").get<std::string>()), j.at("synthetic").get<bool>(),
            j.at("provenance").get<std::string>()};
  }
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct Community {
  std::string community_id;
  std::set<std::string> member_node_ids;
  int level = 0;

  json to_json() const {
    return {{"community_id", community_id}, {"members", member_node_ids}, {"level", level}};
  }
  static Community from_json(const json& j) {
    return {j.at("community_id").get<std::string>(),
            j.at("members").get<std::set<std::string>>(), j.value("level", 0)};
  }
  friend bool operator==(const Community&, const Community&) = default;
};

struct CommunityReport {
  std::string community_id;
  std::string title;
  std::string summary;
  std::vector<std::string> member_methods;
  bool degraded = false;

  json to_json() const {
    return {{"community_id", community_id}, {"title", title},       {"summary", summary},
            {"member_methods", member_methods}, {"degraded", degraded}};
  }
  static CommunityReport from_json(const json& j) {
    return {j.at("community_id").get<std::string>(), j.at("title").get<std::string>(),
            j.at("summary").get<std::string>(),
            j.at("member_methods").get<std::vector<std::string>>(), j.value("degraded", false)};
  }
  friend bool operator==(const CommunityReport&, const CommunityReport&) = default;
};

class KnowledgeGraph {
 public:
  using EdgeKey = std::tuple<std::string, std::string, EdgeKind>;

  explicit KnowledgeGraph(GraphKind kind = GraphKind::paper_graph) : kind_(kind) {}

  GraphKind graph_kind() const { return kind_; }
  const std::map<std::string, GraphNode>& nodes() const { return nodes_; }
  const std::map<EdgeKey, GraphEdge>& edges() const { return edges_; }
  std::vector<Community> communities;
  std::vector<CommunityReport> reports;

  const GraphEdge* edge(const std::string& src, const std::string& dst, EdgeKind kind) const {
    auto it = edges_.find({src, dst, kind});
    return it == edges_.end() ? nullptr : &it->second;
  }

  const GraphNode* node(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }
  const GraphNode& at(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ContractError("unknown node " + id);
    return it->second;
  }

  // Lookup by (kind, canonicalized name), also matching aliases.
  const GraphNode* find(NodeKind kind, std::string_view name) const {
    auto it = by_name_.find(name_key(kind, text::canonicalize(name)));
    return it == by_name_.end() ? nullptr : &nodes_.at(it->second);
  }

  void add_node(GraphNode n) {
    if (!node_kind_allowed(kind_, n.kind))
      throw ValidationError(std::string("node kind ") + to_string(n.kind) + " not allowed in " +
                            to_string(kind_));
    auto key = name_key(n.kind, text::canonicalize(n.canonical_name));
    if (by_name_.count(key)) throw ValidationError("duplicate node name " + key);
    if (nodes_.count(n.node_id)) throw ValidationError("duplicate node id " + n.node_id);
    by_name_[key] = n.node_id;
    for (const auto& a : n.aliases) by_name_.try_emplace(name_key(n.kind, text::canonicalize(a)), n.node_id);
    nodes_.emplace(n.node_id, std::move(n));
  }

  GraphNode& mutable_node(const std::string& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw ContractError("unknown node " + id);
    return it->second;
  }

  void add_alias(const std::string& id, const std::string& alias) {
    auto& n = mutable_node(id);
    if (text::canonicalize(alias) != text::canonicalize(n.canonical_name)) n.aliases.insert(alias);
    by_name_.try_emplace(name_key(n.kind, text::canonicalize(alias)), id);
  }

  // Returns false when an identical (src, dst, kind) edge already exists.
  bool add_edge(GraphEdge e) {
    check_edge(e);
    auto key = e.key();
    if (edges_.count(key)) return false;
    out_[e.src].push_back(key);
    in_[e.dst].push_back(key);
    edges_.emplace(std::move(key), std::move(e));
    return true;
  }

  std::vector<const GraphEdge*> out_edges(const std::string& id,
                                          std::optional<EdgeKind> kind = std::nullopt) const {
    return collect(out_, id, kind);
  }
  std::vector<const GraphEdge*> in_edges(const std::string& id,
                                         std::optional<EdgeKind> kind = std::nullopt) const {
    return collect(in_, id, kind);
  }

  std::vector<const GraphNode*> nodes_of(NodeKind kind) const {
    std::vector<const GraphNode*> out;
    for (const auto& [_, n] : nodes_)
      if (n.kind == kind) out.push_back(&n);
    return out;
  }

  // Count of edges violating the kind/endpoint table.
  std::size_t typing_violations() const {
    std::size_t bad = 0;
    for (const auto& [_, e] : edges_) {
      const auto* s = node(e.src);
      const auto* d = node(e.dst);
      auto [sk, dk] = edge_endpoints(e.kind);
      if (!s || !d || s->kind != sk || d->kind != dk || !edge_kind_allowed(kind_, e.kind)) ++bad;
    }
    return bad;
  }

  void validate() const {
    std::set<std::string> names;
    for (const auto& [id, n] : nodes_) {
      if (!node_kind_allowed(kind_, n.kind))
        throw ValidationError("node " + id + " has kind not allowed in " + to_string(kind_));
      if (!names.insert(name_key(n.kind, text::canonicalize(n.canonical_name))).second)
        throw ValidationError("duplicate (kind, canonical_name) for node " + id);
    }
    for (const auto& [_, e] : edges_) check_edge(e);
    if (!communities.empty()) {
      std::set<std::string> seen;
      for (const auto& c : communities)
        for (const auto& m : c.member_node_ids) {
          if (!nodes_.count(m)) throw ValidationError("community member " + m + " is not a node");
          if (!seen.insert(m).second)
            throw ValidationError("node " + m + " belongs to two communities");
        }
      if (seen.size() != nodes_.size())
        throw ValidationError("communities do not cover every node");
    }
  }

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.kind_ == b.kind_ && a.nodes_ == b.nodes_ && a.edges_ == b.edges_ &&
           a.communities == b.communities && a.reports == b.reports;
  }

 private:
  static std::string name_key(NodeKind k, const std::string& canonical) {
    return node_kind_prefix(k) + ":" + canonical;
  }

  void check_edge(const GraphEdge& e) const {
    if (!edge_kind_allowed(kind_, e.kind))
      throw ValidationError(std::string("edge kind ") + to_string(e.kind) + " not allowed in " +
                            to_string(kind_));
    const auto* s = node(e.src);
    const auto* d = node(e.dst);
    if (!s || !d) throw ValidationError("edge " + e.src + " -> " + e.dst + " has a dangling endpoint");
    auto [sk, dk] = edge_endpoints(e.kind);
    if (s->kind != sk || d->kind != dk)
      throw ValidationError(std::string("edge ") + e.src + " -" + to_string(e.kind) + "-> " + e.dst +
                            " violates endpoint typing");
    if (e.src == e.dst) throw ValidationError("self-loop on " + e.src);
  }

  std::vector<const GraphEdge*> collect(
      const std::unordered_map<std::string, std::vector<EdgeKey>>& adj, const std::string& id,
      std::optional<EdgeKind> kind) const {
    std::vector<const GraphEdge*> out;
    auto it = adj.find(id);
    if (it == adj.end()) return out;
    for (const auto& key : it->second) {
      const auto& e = edges_.at(key);
      if (!kind || e.kind == *kind) out.push_back(&e);
    }
    std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->key() < b->key(); });
    return out;
  }

  GraphKind kind_;
  std::map<std::string, GraphNode> nodes_;
  std::map<EdgeKey, GraphEdge> edges_;
  std::unordered_map<std::string, std::string> by_name_;
  std::unordered_map<std::string, std::vector<EdgeKey>> out_;
  std::unordered_map<std::string, std::vector<EdgeKey>> in_;
};

// Builds a graph while deduplicating entity names: exact match after
// canonicalization first, then embedding similarity >= merge_threshold
// against nodes of the same kind.
class GraphBuilder {
 public:
  GraphBuilder(GraphKind kind, Gateway* embedder, double merge_threshold = 0.95)
      : graph_(kind), embedder_(embedder), threshold_(merge_threshold) {}

  // Embeds all names in one batch so later add_node calls hit the cache.
  void prefetch(const std::vector<std::string>& names) {
    if (!embedder_) return;
    std::vector<std::string> todo;
    std::set<std::string> seen;
    for (const auto& n : names) {
      auto c = text::canonicalize(n);
      if (c.empty() || cache_.count(c) || !seen.insert(c).second) continue;
      todo.push_back(c);
    }
    if (todo.empty()) return;
    auto vecs = embedder_->embed_batch(todo);
    for (std::size_t i = 0; i < todo.size(); ++i) cache_.emplace(todo[i], std::move(vecs[i]));
  }

  // Returns the id of the node the name resolved to.
  std::string add_node(NodeKind kind, const std::string& name, const std::string& source_paper_id,
                       std::optional<std::string> forced_id = std::nullopt) {
    auto display = collapse(name);
    auto canonical = text::canonicalize(display);
    if (canonical.empty()) throw ValidationError("empty entity name");
    if (const auto* hit = graph_.find(kind, canonical)) return touch(hit->node_id, display, source_paper_id);

    if (embedder_) {
      const auto& v = vector_for(canonical);
      const GraphNode* best = nullptr;
      double best_sim = threshold_;
      for (const auto& [id, vec] : vectors_) {
        const auto& n = graph_.at(id);
        if (n.kind != kind) continue;
        double s = cosine_similarity(v, vec);
        if (s >= best_sim && (!best || s > best_sim)) {
          best = &n;
          best_sim = s;
        }
      }
      if (best) {
        ++merges_;
        return touch(best->node_id, display, source_paper_id);
      }
    }

    GraphNode n;
    n.kind = kind;
    n.canonical_name = display;
    n.node_id = forced_id ? *forced_id : node_kind_prefix(kind) + ":" + canonical;
    if (!source_paper_id.empty()) n.source_paper_ids.insert(source_paper_id);
    auto id = n.node_id;
    graph_.add_node(std::move(n));
    if (embedder_) vectors_.emplace(id, vector_for(canonical));
    return id;
  }

  bool add_edge(const std::string& src, const std::string& dst, EdgeKind kind,
                const std::string& provenance, bool synthetic = false) {
    return graph_.add_edge({src, dst, kind, synthetic, provenance});
  }

  KnowledgeGraph& graph() { return graph_; }
  std::size_t embedding_merges() const { return merges_; }

  KnowledgeGraph finish() {
    graph_.validate();
    return std::move(graph_);
  }

 private:
  static std::string collapse(const std::string& s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
      if (std::isspace(c)) {
        space = !out.empty();
        continue;
      }
      if (space) out.push_back(' ');
      space = false;
      out.push_back(static_cast<char>(c));
    }
    return out;
  }

  std::string touch(const std::string& id, const std::string& display, const std::string& src) {
    graph_.add_alias(id, display);
    if (!src.empty()) graph_.mutable_node(id).source_paper_ids.insert(src);
    return id;
  }

  const EmbeddingVector& vector_for(const std::string& canonical) {
    auto it = cache_.find(canonical);
    if (it != cache_.end()) return it->second;
    auto v = embedder_->embed_batch(std::vector<std::string>{canonical});
    return cache_.emplace(canonical, std::move(v.front())).first->second;
  }

  KnowledgeGraph graph_;
  Gateway* embedder_;
  double threshold_;
  std::map<std::string, EmbeddingVector> cache_;
  std::map<std::string, EmbeddingVector> vectors_;  // node_id -> vector of its canonical name
  std::size_t merges_ = 0;
};

// --- persistence ---------------------------------------------------------

struct GraphFiles {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::filesystem::path communities;
  std::filesystem::path reports;

  explicit GraphFiles(const std::filesystem::path& dir)
      : nodes(dir / "nodes.jsonl"), edges(dir / "edges.jsonl"),
        communities(dir / "communities.jsonl"), reports(dir / "reports.jsonl") {}
};

// nodes sorted by node_id, edges by (src, dst, kind); keys sorted within records.
inline void export_graph(const KnowledgeGraph& graph, const std::filesystem::path& dir) {
  graph.validate();
  GraphFiles f(dir);
  std::vector<json> nodes, edges;
  for (const auto& [_, n] : graph.nodes()) nodes.push_back(n.to_json());
  for (const auto& [_, e] : graph.edges()) edges.push_back(e.to_json());
  io::write_jsonl(f.nodes, nodes);
  io::write_jsonl(f.edges, edges);
}

inline void export_communities(const KnowledgeGraph& graph, const std::filesystem::path& dir) {
  GraphFiles f(dir);
  std::vector<json> cs, rs;
  for (const auto& c : graph.communities) cs.push_back(c.to_json());
  for (const auto& r : graph.reports) rs.push_back(r.to_json());
  io::write_jsonl(f.communities, cs);
  io::write_jsonl(f.reports, rs);
}

inline KnowledgeGraph load_graph(const std::filesystem::path& dir, GraphKind kind) {
  GraphFiles f(dir);
  KnowledgeGraph g(kind);
  for (const auto& j : io::read_jsonl(f.nodes)) g.add_node(GraphNode::from_json(j));
  for (const auto& j : io::read_jsonl(f.edges)) g.add_edge(GraphEdge::from_json(j));
  if (std::filesystem::exists(f.communities))
    for (const auto& j : io::read_jsonl(f.communities)) g.communities.push_back(Community::from_json(j));
  if (std::filesystem::exists(f.reports))
    for (const auto& j : io::read_jsonl(f.reports)) g.reports.push_back(CommunityReport::from_json(j));
  g.validate();
  return g;
}

inline std::string graph_digest(const std::filesystem::path& dir) {
  GraphFiles f(dir);
  return text::sha256_hex(io::file_digest(f.nodes) + io::file_digest(f.edges));
}

}  // namespace ideagraph
