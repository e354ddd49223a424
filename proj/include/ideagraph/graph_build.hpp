#pragma once

#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ideagraph/community.hpp"
#include "ideagraph/corpus.hpp"
#include "ideagraph/gateway.hpp"
#include "ideagraph/graph.hpp"
#include "ideagraph/parallel.hpp"
#include "ideagraph/prompts.hpp"
#include "ideagraph/summarizer.hpp"

namespace ideagraph {

// Entities pulled from one paper summary.
struct EntityExtraction {
  std::string paper_id;
  std::string title;
  std::string domain;  // unified label
  std::vector<std::string> problems;
  std::vector<std::string> methods;

  json to_json() const {
    return {{"paper_id", paper_id}, {"title", title},       {"domain", domain},
            {"problems", problems}, {"methods", methods}};
  }
  static EntityExtraction from_json(const json& j) {
    return {j.at("paper_id").get<std::string>(), j.at("title").get<std::string>(),
            j.at("domain").get<std::string>(), j.at("problems").get<std::vector<std::string>>(),
            j.at("methods").get<std::vector<std::string>>()};
  }
};

inline std::string paper_node_id(const std::string& paper_id) { return "paper:" + paper_id; }

// nullopt when the model cannot produce at least one problem and one method.
inline std::optional<EntityExtraction> extract_entities(Gateway& gw, const PaperSummary& s,
                                                        const std::string& title,
                                                        std::ostream* warn = &std::cerr) {
  json payload = {{"paper_id", s.paper_id}, {"title", title},        {"domain", s.domain_unified},
                  {"background", s.background}, {"problem", s.problem}, {"design", s.design}};
  try {
    auto out = gw.complete(prompts::make_request(PromptKind::extract_entities, payload));
    return EntityExtraction{s.paper_id, title, s.domain_unified,
                            out.value["problems"].get<std::vector<std::string>>(),
                            out.value["methods"].get<std::vector<std::string>>()};
  } catch (const StructuredOutputError& e) {
    if (warn) *warn << "warning: skipping summary " << s.paper_id << ": " << e.what() << "\n";
    return std::nullopt;
  }
}

inline std::vector<EntityExtraction> extract_all(Gateway& gw, const CorpusStore& store,
                                                 std::ostream* warn = &std::cerr) {
  auto summaries = store.summary_list();
  auto results = parallel_map<std::optional<EntityExtraction>>(
      summaries.size(), static_cast<std::size_t>(gw.config().max_in_flight), [&](std::size_t i) {
        return extract_entities(gw, summaries[i], store.record(summaries[i].paper_id).title, warn);
      });
  std::vector<EntityExtraction> out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  return out;
}

inline KnowledgeGraph build_paper_graph(Gateway& gw, const std::vector<EntityExtraction>& items,
                                        double merge_threshold = 0.95) {
  if (items.empty()) throw PreconditionError("build_paper_graph: no summaries");
  GraphBuilder b(GraphKind::paper_graph, &gw, merge_threshold);
  std::vector<std::string> names;
  for (const auto& x : items) {
    names.push_back(x.domain);
    names.push_back(x.title);
    names.insert(names.end(), x.problems.begin(), x.problems.end());
    names.insert(names.end(), x.methods.begin(), x.methods.end());
  }
  b.prefetch(names);
  for (const auto& x : items) {
    auto d = b.add_node(NodeKind::Domain, x.domain, x.paper_id);
    auto p = b.add_node(NodeKind::Paper, x.title, x.paper_id, paper_node_id(x.paper_id));
    for (const auto& prob : x.problems) {
      auto q = b.add_node(NodeKind::Problem, prob, x.paper_id);
      b.add_edge(d, q, EdgeKind::has, x.paper_id);
      b.add_edge(q, p, EdgeKind::is_solved_by, x.paper_id);
    }
    for (const auto& m : x.methods) {
      auto mid = b.add_node(NodeKind::Method, m, x.paper_id);
      b.add_edge(p, mid, EdgeKind::uses, x.paper_id);
    }
  }
  return b.finish();
}

inline KnowledgeGraph build_paper_graph(Gateway& gw, const CorpusStore& store,
                                        std::ostream* warn = &std::cerr) {
  return build_paper_graph(gw, extract_all(gw, store, warn));
}

// Citation graph: corpus papers and their methods, sampled references and
// their methods, real cites-edges, and flagged synthetic cites-edges.
inline KnowledgeGraph build_citation_graph(Gateway& gw, const std::vector<EntityExtraction>& items,
                                           const std::vector<ResolvedReference>& refs,
                                           const std::vector<CitationLink>& synthetic_links,
                                           double merge_threshold = 0.95) {
  GraphBuilder b(GraphKind::citation_graph, &gw, merge_threshold);
  std::vector<std::string> names;
  for (const auto& x : items) {
    names.push_back(x.title);
    names.insert(names.end(), x.methods.begin(), x.methods.end());
  }
  for (const auto& r : refs) {
    names.push_back(r.title);
    names.push_back(r.method_name);
  }
  b.prefetch(names);

  std::set<std::string> corpus_ids;
  for (const auto& x : items) {
    auto p = b.add_node(NodeKind::Paper, x.title, x.paper_id, paper_node_id(x.paper_id));
    corpus_ids.insert(x.paper_id);
    for (const auto& m : x.methods)
      b.add_edge(p, b.add_node(NodeKind::Method, m, x.paper_id), EdgeKind::uses, x.paper_id);
  }
  for (const auto& r : refs) {
    if (!corpus_ids.count(r.src_paper_id))
      throw ValidationError("reference from unknown paper " + r.src_paper_id);
    auto src = paper_node_id(r.src_paper_id);
    auto dst = b.add_node(NodeKind::Paper, r.title, r.src_paper_id);
    if (dst == src) continue;
    b.add_edge(src, dst, EdgeKind::cites, r.src_paper_id);
    auto m = b.add_node(NodeKind::Method, r.method_name, r.src_paper_id);
    b.add_edge(dst, m, EdgeKind::uses, r.src_paper_id);
  }
  for (const auto& l : synthetic_links) {
    if (!corpus_ids.count(l.src_paper_id) || !corpus_ids.count(l.dst_key))
      throw ValidationError("dangling synthetic link " + l.src_paper_id + " -> " + l.dst_key);
    b.add_edge(paper_node_id(l.src_paper_id), paper_node_id(l.dst_key), EdgeKind::cites,
               l.src_paper_id, true);
  }
  return b.finish();
}

// --- community reports ---------------------------------------------------

namespace detail {

inline std::vector<std::string> sorted_names(const KnowledgeGraph& g, const std::set<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) out.push_back(g.at(id).canonical_name);
  return out;
}

// Problems and domains a method is connected to via its papers.
inline json method_context(const KnowledgeGraph& g, const GraphNode& method) {
  std::set<std::string> papers, problems, domains;
  for (const auto* u : g.in_edges(method.node_id, EdgeKind::uses)) {
    papers.insert(u->src);
    for (const auto* s : g.in_edges(u->src, EdgeKind::is_solved_by)) {
      problems.insert(s->src);
      for (const auto* h : g.in_edges(s->src, EdgeKind::has)) domains.insert(h->src);
    }
  }
  return {{"name", method.canonical_name},
          {"papers", sorted_names(g, papers)},
          {"problems", sorted_names(g, problems)},
          {"domains", sorted_names(g, domains)}};
}

}  // namespace detail

inline std::vector<std::string> community_methods(const KnowledgeGraph& g, const Community& c) {
  std::vector<std::string> out;
  for (const auto& id : c.member_node_ids)
    if (g.at(id).kind == NodeKind::Method) out.push_back(g.at(id).canonical_name);
  return out;
}

inline CommunityReport degraded_report(const KnowledgeGraph& g, const Community& c) {
  std::vector<std::string> names;
  for (const auto& id : c.member_node_ids) names.push_back(g.at(id).canonical_name);
  return {c.community_id, c.community_id, text::join(names, "; "), community_methods(g, c), true};
}

// One report call per community; a failed call yields a degraded report.
inline std::vector<CommunityReport> generate_community_reports(Gateway& gw, const KnowledgeGraph& g,
                                                               const std::vector<Community>& cs,
                                                               std::ostream* warn = &std::cerr) {
  std::set<std::string> seen;
  for (const auto& c : cs)
    for (const auto& m : c.member_node_ids)
      if (!seen.insert(m).second || !g.node(m))
        throw PreconditionError("communities do not partition the graph (node " + m + ")");
  if (seen.size() != g.nodes().size())
    throw PreconditionError("communities do not cover the graph");

  return parallel_map<CommunityReport>(
      cs.size(), static_cast<std::size_t>(gw.config().max_in_flight), [&](std::size_t i) {
        const auto& c = cs[i];
        json members = json::array();
        json methods = json::array();
        for (const auto& id : c.member_node_ids) {
          const auto& n = g.at(id);
          members.push_back({{"kind", to_string(n.kind)}, {"name", n.canonical_name}});
          if (n.kind == NodeKind::Method) methods.push_back(detail::method_context(g, n));
        }
        json payload = {{"community_id", c.community_id},
                        {"graph_kind", to_string(g.graph_kind())},
                        {"members", members},
                        {"methods", methods}};
        try {
          auto out = gw.complete(prompts::make_request(PromptKind::report, payload));
          return CommunityReport{c.community_id, out.value["title"].get<std::string>(),
                                 out.value["summary"].get<std::string>(), community_methods(g, c),
                                 false};
        } catch (const Error& e) {
          if (warn)
            *warn << "warning: report for " << c.community_id << " degraded: " << e.what() << "\n";
          return degraded_report(g, c);
        }
      });
}

// Detects communities and attaches reports in place.
inline void index_communities(Gateway& gw, KnowledgeGraph& g, double resolution, std::uint64_t seed,
                              std::ostream* warn = &std::cerr) {
  g.communities = detect_communities(g, resolution, seed);
  g.reports = generate_community_reports(gw, g, g.communities, warn);
}

}  // namespace ideagraph
