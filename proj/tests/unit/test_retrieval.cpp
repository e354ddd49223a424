#include <gtest/gtest.h>

#include <deque>
#include <sstream>

#include "support.hpp"

using namespace ideagraph;
using namespace testing_support;

namespace {

struct ToyGraphs {
  MockRig rig;
  CorpusStore pre{PartitionTag::pre};
  GraphArtifacts a;
  ToyGraphs() {
    pre = toy_pre(rig.gateway);
    auto cfg = toy_run_config();
    FixtureReferenceClient client(cfg.refs_db_path);
    a = build_graphs(rig.gateway, pre, client, cfg);
  }
};

ToyGraphs& toy() {
  static ToyGraphs t;
  return t;
}

// Methods reachable from a Problem node: problem -is_solved_by-> paper -uses-> method.
std::set<std::string> reachable_methods(const KnowledgeGraph& g, const std::string& problem) {
  std::set<std::string> out;
  const auto* p = g.find(NodeKind::Problem, problem);
  if (!p) return out;
  for (const auto& [_, e] : g.edges()) {
    if (e.kind != EdgeKind::is_solved_by || e.src != p->node_id) continue;
    for (const auto& [__, u] : g.edges())
      if (u.kind == EdgeKind::uses && u.src == e.dst) out.insert(g.at(u.dst).canonical_name);
  }
  return out;
}

// Papers within `hops` cites-edges, by plain BFS over the edge map.
std::set<std::string> bfs_papers(const KnowledgeGraph& g, std::set<std::string> frontier, int hops,
                                 bool synthetic_ok) {
  std::set<std::string> seen = frontier;
  for (int h = 0; h < hops; ++h) {
    std::set<std::string> next;
    for (const auto& [_, e] : g.edges())
      if (e.kind == EdgeKind::cites && frontier.count(e.src) && (synthetic_ok || !e.synthetic) &&
          !seen.count(e.dst))
        next.insert(e.dst);
    seen.insert(next.begin(), next.end());
    frontier = next;
  }
  return seen;
}

KnowledgeGraph reports_graph(std::size_t n) {
  KnowledgeGraph g(GraphKind::paper_graph);
  for (std::size_t i = 0; i < n; ++i) {
    auto id = "c" + std::to_string(i);
    g.reports.push_back({id, "r" + id, "Method: M" + std::to_string(i) + " | problems: p | domains: d | papers: x",
                         {"M" + std::to_string(i)}, false});
  }
  return g;
}

}  // namespace

TEST(Brief, ComposedQuery) {
  auto b = ResearchBrief::make("network verification", "scalable network verification");
  EXPECT_EQ(b.composed_query, "Domain: network verification\nProblem: scalable network verification");
  EXPECT_THROW(ResearchBrief::make("", "x"), PreconditionError);
  EXPECT_THROW(ResearchBrief::make("x", ""), PreconditionError);
  auto back = ResearchBrief::from_json(b.to_json());
  EXPECT_EQ(back.composed_query, b.composed_query);
}

TEST(GlobalSearch, OrdersTruncatesAndDropsZeros) {
  MockRig rig;
  auto g = reports_graph(6);
  double scores[] = {10, 0, 90, 50, 90, 30};
  for (int i = 0; i < 6; ++i) rig.backend->script_map_score("c" + std::to_string(i), scores[i]);
  auto res = global_search(rig.gateway, g, "Domain: d\nProblem: p", SearchOptions{3});
  ASSERT_EQ(res.findings.size(), 3u);
  EXPECT_EQ(res.findings[0].method_name, "M2");  // ties keep report order
  EXPECT_EQ(res.findings[1].method_name, "M4");
  EXPECT_EQ(res.findings[2].method_name, "M3");
  ASSERT_EQ(res.methods.size(), 3u);
  EXPECT_EQ(res.methods[0].method_name, "M2");
}

TEST(GlobalSearch, PartialMapFailureIsTolerated) {
  MockRig rig;
  auto g = reports_graph(3);
  rig.backend->inject_fault(PromptKind::map_score, FaultKind::transport, 3);  // exhausts one report
  std::ostringstream warn;
  auto res = global_search(rig.gateway, g, "Domain: d\nProblem: p", {}, &warn);
  EXPECT_EQ(res.failed_maps, 1u);
  EXPECT_EQ(res.findings.size(), 2u);
}

TEST(GlobalSearch, AllMapsFailingIsRetrievalError) {
  MockRig rig;
  auto g = reports_graph(2);
  rig.backend->inject_fault(PromptKind::map_score, FaultKind::transport, 100);
  std::ostringstream warn;
  EXPECT_THROW(global_search(rig.gateway, g, "q", {}, &warn), RetrievalError);
}

TEST(GlobalSearch, NoReportsIsPrecondition) {
  MockRig rig;
  KnowledgeGraph g(GraphKind::paper_graph);
  EXPECT_THROW(global_search(rig.gateway, g, "q"), PreconditionError);
}

TEST(Existing, MatchesReachabilityOracleForEveryProblem) {
  auto& t = toy();
  for (const auto* p : t.a.paper.nodes_of(NodeKind::Problem)) {
    // Domain for the brief: the domain node that has this problem.
    auto has = t.a.paper.in_edges(p->node_id, EdgeKind::has);
    ASSERT_FALSE(has.empty());
    auto brief = ResearchBrief::make(t.a.paper.at(has.front()->src).canonical_name, p->canonical_name);
    auto set = retrieve_existing_methods(t.rig.gateway, t.a.paper, brief);
    std::set<std::string> got;
    for (const auto& e : set.entries) got.insert(e.method_name);
    EXPECT_EQ(got, reachable_methods(t.a.paper, p->canonical_name)) << p->canonical_name;
    for (const auto& e : set.entries) {
      EXPECT_FALSE(e.provenance.empty());
      EXPECT_FALSE(e.orientation.empty());
    }
  }
}

TEST(Existing, VerificationBriefReturnsBothDecompositionMethods) {
  auto& t = toy();
  auto set = retrieve_existing_methods(
      t.rig.gateway, t.a.paper, ResearchBrief::make("network verification", "scalable network verification"));
  ASSERT_EQ(set.entries.size(), 2u);
  EXPECT_TRUE(set.contains("Graph Partitioning and Clustered Analysis"));
  EXPECT_TRUE(set.contains("Modular and Compositional Verification"));
  for (const auto& e : set.entries) EXPECT_EQ(e.orientation, "Decomposition and Modular Verification");
}

TEST(Existing, UnknownProblemSuggestsBroaderStatement) {
  auto& t = toy();
  try {
    retrieve_existing_methods(t.rig.gateway, t.a.paper, ResearchBrief::make("x", "quantum teleportation"));
    FAIL();
  } catch (const RetrievalError& e) {
    EXPECT_NE(std::string(e.what()).find("broader"), std::string::npos);
  }
}

TEST(Inspirations, ExcludeExistingAndStayWithinHopBudget) {
  auto& t = toy();
  auto brief = ResearchBrief::make("network verification", "scalable network verification");
  auto existing = retrieve_existing_methods(t.rig.gateway, t.a.paper, brief);
  for (bool synth : {true, false}) {
    InspirationOptions opt;
    opt.include_synthetic = synth;
    auto insp = retrieve_inspirations(t.rig.gateway, t.a.citation, brief, existing, opt);
    // Oracle: methods used by papers within the budget of the seeds' papers.
    std::set<std::string> expect;
    for (const auto& seed : existing.entries) {
      const auto* m = t.a.citation.find(NodeKind::Method, seed.method_name);
      if (!m) continue;
      std::set<std::string> start;
      for (const auto* u : t.a.citation.in_edges(m->node_id, EdgeKind::uses)) start.insert(u->src);
      for (const auto& p : bfs_papers(t.a.citation, start, opt.hop_budget, synth))
        for (const auto* u : t.a.citation.out_edges(p, EdgeKind::uses)) {
          const auto& name = t.a.citation.at(u->dst).canonical_name;
          if (!existing.contains(name)) expect.insert(name);
        }
    }
    std::set<std::string> got;
    for (const auto& e : insp.entries) {
      got.insert(e.method_name);
      EXPECT_FALSE(existing.contains(e.method_name));
      EXPECT_FALSE(e.via.empty());
      if (!synth) {
        EXPECT_FALSE(e.synthetic);
      }
    }
    EXPECT_EQ(got, expect) << "include_synthetic=" << synth;
    for (std::size_t i = 1; i < insp.entries.size(); ++i)
      EXPECT_GE(insp.entries[i - 1].relevance, insp.entries[i].relevance);
  }
}

TEST(Inspirations, CrossDomainMethodViaRealCitation) {
  auto& t = toy();
  auto brief = ResearchBrief::make("network verification", "scalable network verification");
  auto existing = retrieve_existing_methods(t.rig.gateway, t.a.paper, brief);
  InspirationOptions opt;
  opt.include_synthetic = false;
  auto insp = retrieve_inspirations(t.rig.gateway, t.a.citation, brief, existing, opt);
  EXPECT_TRUE(insp.contains("GNNs for Network Modeling"));
  EXPECT_TRUE(insp.contains("Graph Contrastive Learning"));
}

TEST(Inspirations, EmptyExistingIsPrecondition) {
  auto& t = toy();
  MethodSet empty{MethodSetKind::existing, {}};
  EXPECT_THROW(retrieve_inspirations(t.rig.gateway, t.a.citation, ResearchBrief::make("a", "b"), empty),
               PreconditionError);
}

TEST(MethodSets, JsonlRoundTrip) {
  MethodSet s{MethodSetKind::inspirational,
              {{"GNNs", "Learning", {"paper:p07"}, 42.0, true, {"seed"}, "desc"}}};
  auto back = MethodSet::from_jsonl(s.to_jsonl(), MethodSetKind::inspirational);
  ASSERT_EQ(back.entries.size(), 1u);
  EXPECT_EQ(back.entries[0].to_json(), s.entries[0].to_json());
}
