#pragma once

#include <algorithm>
#include <deque>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ideagraph/gateway.hpp"
#include "ideagraph/graph.hpp"
#include "ideagraph/parallel.hpp"
#include "ideagraph/prompts.hpp"

namespace ideagraph {

struct ResearchBrief {
  std::string domain;
  std::string problem;
  std::string composed_query;

  static ResearchBrief make(std::string domain, std::string problem) {
    if (domain.empty()) throw PreconditionError("research brief needs a domain");
    if (problem.empty()) throw PreconditionError("research brief needs a problem");
    ResearchBrief b{std::move(domain), std::move(problem), {}};
    b.composed_query = "Domain: " + b.domain + "\nProblem: " + b.problem;
    return b;
  }

  json to_json() const { return {{"domain", domain}, {"problem", problem}}; }
  static ResearchBrief from_json(const json& j) {
    return make(j.at("domain").get<std::string>(), j.at("problem").get<std::string>());
  }
};

enum class MethodSetKind { existing, inspirational };

struct MethodEntry {
  std::string method_name;
  std::string orientation;
  std::vector<std::string> provenance;  // Paper node ids carrying a uses-edge to the method
  double relevance = 0;                 // [0, 100]
  bool synthetic = false;               // reachable only through synthetic citation links
  std::vector<std::string> via;         // seed methods that led here (inspirational only)
  std::string description;              // design sentence of a provenance paper, when known

  json to_json() const {
    json j = {{"method_name", method_name}, {"orientation", orientation},
              {"provenance", provenance},   {"relevance", relevance},
              {"synthetic", synthetic}};
    if (!via.empty()) j["via"] = via;
    if (!description.empty()) j["description"] = description;
    return j;
  }
  static MethodEntry from_json(const json& j) {
    MethodEntry e;
    e.method_name = j.at("method_name").get<std::string>();
    e.orientation = j.value("orientation", "");
    e.provenance = j.at("provenance").get<std::vector<std::string>>();
    e.relevance = j.at("relevance").get<double>();
    e.synthetic = j.value("synthetic", false);
    if (j.contains("via")) e.via = j["via"].get<std::vector<std::string>>();
    e.description = j.value("description", "");
    return e;
  }
};

struct MethodSet {
  MethodSetKind kind = MethodSetKind::existing;
  std::vector<MethodEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }

  bool contains(const std::string& name) const {
    auto c = text::canonicalize(name);
    return std::any_of(entries.begin(), entries.end(),
                       [&](const auto& e) { return text::canonicalize(e.method_name) == c; });
  }

  std::vector<json> to_jsonl() const {
    std::vector<json> rows;
    for (const auto& e : entries) {
      auto j = e.to_json();
      j["set"] = kind == MethodSetKind::existing ? "existing" : "inspirational";
      rows.push_back(std::move(j));
    }
    return rows;
  }
  static MethodSet from_jsonl(const std::vector<json>& rows, MethodSetKind kind) {
    MethodSet s{kind, {}};
    for (const auto& r : rows) s.entries.push_back(MethodEntry::from_json(r));
    return s;
  }
};

// --- global search -------------------------------------------------------

struct Finding {
  std::string method_name;
  std::string description;
  double score = 0;
  std::string community_id;
};

struct RankedMethod {
  std::string method_name;
  std::string orientation;
  double relevance = 0;
};

struct GlobalSearchResult {
  std::vector<Finding> findings;  // descending score, stable, truncated
  std::vector<RankedMethod> methods;
  std::size_t failed_maps = 0;
  bool empty() const { return findings.empty(); }
};

struct SearchOptions {
  std::size_t finding_budget = 50;
};

// Map: score every community report against the query. Reduce: order
// findings by score, truncate, and synthesize a ranked method list.
inline GlobalSearchResult global_search(Gateway& gw, const KnowledgeGraph& graph,
                                        const std::string& query, const SearchOptions& opt = {},
                                        std::ostream* warn = &std::cerr) {
  if (graph.reports.empty()) throw PreconditionError("global_search: graph has no community reports");
  const auto& reports = graph.reports;
  struct MapOut {
    bool ok = false;
    std::vector<Finding> findings;
  };
  auto maps = parallel_map<MapOut>(
      reports.size(), static_cast<std::size_t>(gw.config().max_in_flight), [&](std::size_t i) {
        const auto& r = reports[i];
        json payload = {{"query", query},
                        {"report",
                         {{"community_id", r.community_id},
                          {"title", r.title},
                          {"summary", r.summary},
                          {"member_methods", r.member_methods}}}};
        MapOut out;
        try {
          auto res = gw.complete(prompts::make_request(PromptKind::map_score, payload));
          for (const auto& f : res.value["findings"]) {
            Finding x{f["method_name"].get<std::string>(), f.value("description", ""),
                      f["score"].get<double>(), r.community_id};
            if (x.score > 0) out.findings.push_back(std::move(x));
          }
          out.ok = true;
        } catch (const Error& e) {
          if (warn) *warn << "warning: map call for " << r.community_id << " failed: " << e.what() << "\n";
        }
        return out;
      });

  GlobalSearchResult res;
  for (auto& m : maps) {
    if (!m.ok) {
      ++res.failed_maps;
      continue;
    }
    for (auto& f : m.findings) res.findings.push_back(std::move(f));
  }
  if (res.failed_maps == reports.size())
    throw RetrievalError("global search: every map call failed");
  std::stable_sort(res.findings.begin(), res.findings.end(),
                   [](const Finding& a, const Finding& b) { return a.score > b.score; });
  if (res.findings.size() > opt.finding_budget) res.findings.resize(opt.finding_budget);
  if (res.findings.empty()) return res;

  json findings = json::array();
  for (const auto& f : res.findings)
    findings.push_back({{"method_name", f.method_name},
                        {"description", f.description},
                        {"score", f.score},
                        {"community_id", f.community_id}});
  auto red = gw.complete(
      prompts::make_request(PromptKind::reduce_synthesize, {{"query", query}, {"findings", findings}}));
  for (const auto& m : red.value["methods"])
    res.methods.push_back({m["method_name"].get<std::string>(), m["orientation"].get<std::string>(),
                           std::clamp(m["relevance"].get<double>(), 0.0, 100.0)});
  std::stable_sort(res.methods.begin(), res.methods.end(),
                   [](const auto& a, const auto& b) { return a.relevance > b.relevance; });
  return res;
}

inline std::vector<std::string> method_provenance(const KnowledgeGraph& g, const GraphNode& m) {
  std::vector<std::string> out;
  for (const auto* e : g.in_edges(m.node_id, EdgeKind::uses)) out.push_back(e->src);
  return out;
}

inline MethodSet retrieve_existing_methods(Gateway& gw, const KnowledgeGraph& paper_graph,
                                           const ResearchBrief& brief,
                                           const SearchOptions& opt = {},
                                           std::ostream* warn = &std::cerr) {
  auto res = global_search(gw, paper_graph, brief.composed_query, opt, warn);
  std::map<std::string, std::string> described;  // first (highest-scored) finding wins
  for (const auto& f : res.findings) described.try_emplace(text::canonicalize(f.method_name), f.description);
  MethodSet out{MethodSetKind::existing, {}};
  std::set<std::string> seen;
  for (const auto& m : res.methods) {
    const auto* node = paper_graph.find(NodeKind::Method, m.method_name);
    if (!node) {
      if (warn) *warn << "warning: retrieved method not in graph: " << m.method_name << "\n";
      continue;
    }
    if (!seen.insert(node->node_id).second) continue;
    out.entries.push_back({node->canonical_name, m.orientation, method_provenance(paper_graph, *node),
                           m.relevance, false, {}, {}});
    if (auto it = described.find(text::canonicalize(m.method_name)); it != described.end())
      out.entries.back().description = it->second;
  }
  if (out.empty())
    throw RetrievalError("no existing methods found for \"" + brief.problem +
                         "\"; try a broader problem statement");
  return out;
}

struct InspirationOptions {
  int hop_budget = 2;  // cites-edge hops from the seed method's papers
  bool include_synthetic = true;
  SearchOptions search;
};

namespace detail {

// Papers within `hops` cites-edges of `start`. The bool is true when some
// path within budget avoids synthetic edges.
inline std::map<std::string, bool> reachable_papers(const KnowledgeGraph& g,
                                                    const std::vector<std::string>& start,
                                                    int hops, bool include_synthetic) {
  std::map<std::string, int> d_any, d_real;
  std::deque<std::pair<std::string, bool>> q;  // (node, path is all-real)
  for (const auto& s : start) {
    d_any[s] = 0;
    d_real[s] = 0;
    q.emplace_back(s, true);
  }
  while (!q.empty()) {
    auto [v, real] = q.front();
    q.pop_front();
    int d = real ? d_real[v] : d_any[v];
    if (d >= hops) continue;
    for (const auto* e : g.out_edges(v, EdgeKind::cites)) {
      if (e->synthetic && !include_synthetic) continue;
      bool r = real && !e->synthetic;
      if (!d_any.count(e->dst) || d_any[e->dst] > d + 1) {
        d_any[e->dst] = d + 1;
        if (!r) q.emplace_back(e->dst, false);
      }
      if (r && (!d_real.count(e->dst) || d_real[e->dst] > d + 1)) {
        d_real[e->dst] = d + 1;
        q.emplace_back(e->dst, true);
      }
    }
  }
  std::map<std::string, bool> out;
  for (const auto& [p, _] : d_any) out[p] = d_real.count(p) > 0;
  return out;
}

}  // namespace detail

// Extends every existing method through citation links: methods used by
// papers within the hop budget of the seed's papers, minus E_m, ranked by
// a global search against the brief plus the seed name.
inline MethodSet retrieve_inspirations(Gateway& gw, const KnowledgeGraph& citation_graph,
                                       const ResearchBrief& brief, const MethodSet& existing,
                                       const InspirationOptions& opt = {},
                                       std::ostream* warn = &std::cerr) {
  if (existing.empty()) throw PreconditionError("retrieve_inspirations: no existing methods");
  struct Candidate {
    std::string node_id;
    std::set<std::string> provenance;
    bool real_path = false;
    double relevance = 0;
    std::vector<std::string> via;
  };
  std::vector<Candidate> cands;
  std::map<std::string, std::size_t> index;

  for (const auto& seed : existing.entries) {
    const auto* seed_node = citation_graph.find(NodeKind::Method, seed.method_name);
    if (!seed_node) continue;
    std::vector<std::string> start;
    for (const auto* e : citation_graph.in_edges(seed_node->node_id, EdgeKind::uses))
      start.push_back(e->src);
    auto reach = detail::reachable_papers(citation_graph, start, opt.hop_budget, opt.include_synthetic);
    std::vector<std::size_t> found;
    for (const auto& [paper, real] : reach) {
      for (const auto* u : citation_graph.out_edges(paper, EdgeKind::uses)) {
        const auto& m = citation_graph.at(u->dst);
        if (m.node_id == seed_node->node_id || existing.contains(m.canonical_name)) continue;
        auto [it, inserted] = index.try_emplace(m.node_id, cands.size());
        if (inserted) cands.push_back({m.node_id, {}, false, 0, {}});
        auto& c = cands[it->second];
        c.provenance.insert(paper);
        c.real_path = c.real_path || real;
        if (std::find(c.via.begin(), c.via.end(), seed.method_name) == c.via.end())
          c.via.push_back(seed.method_name);
        found.push_back(it->second);
      }
    }
    if (found.empty() || citation_graph.reports.empty()) continue;
    try {
      auto res = global_search(gw, citation_graph,
                               brief.composed_query + "\nMethod: " + seed.method_name, opt.search, warn);
      for (const auto& f : res.findings) {
        const auto* n = citation_graph.find(NodeKind::Method, f.method_name);
        if (!n) continue;
        auto it = index.find(n->node_id);
        if (it != index.end()) cands[it->second].relevance = std::max(cands[it->second].relevance, f.score);
      }
    } catch (const Error& e) {
      if (warn) *warn << "warning: inspiration scoring for " << seed.method_name << " failed: " << e.what() << "\n";
    }
  }

  MethodSet out{MethodSetKind::inspirational, {}};
  for (const auto& c : cands) {
    const auto& n = citation_graph.at(c.node_id);
    out.entries.push_back({n.canonical_name, "",
                           std::vector<std::string>(c.provenance.begin(), c.provenance.end()),
                           c.relevance, !c.real_path, c.via, {}});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const auto& a, const auto& b) { return a.relevance > b.relevance; });
  if (out.empty() && warn) *warn << "note: no inspirational methods found\n";
  return out;
}

}  // namespace ideagraph
