#pragma once

#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ideagraph/config.hpp"
#include "ideagraph/corpus.hpp"
#include "ideagraph/evaluation.hpp"
#include "ideagraph/gateway.hpp"
#include "ideagraph/graph_build.hpp"
#include "ideagraph/ideation.hpp"
#include "ideagraph/live_backend.hpp"
#include "ideagraph/mock_backend.hpp"
#include "ideagraph/retrieval.hpp"
#include "ideagraph/summarizer.hpp"

namespace ideagraph {

class EmptyReferenceClient : public ReferenceClient {
 public:
  std::optional<ReferenceMetadata> lookup(const std::string&) const override { return std::nullopt; }
};

inline std::shared_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend.kind == BackendKind::live) return std::make_shared<LiveBackend>(cfg.backend);
  if (cfg.backend.fixtures_path.empty()) return std::make_shared<MockBackend>(json::object(), cfg.seed, cfg.backend.embed_dim);
  if (!std::filesystem::exists(cfg.backend.fixtures_path))
    throw IoError("mock fixtures not found: " + cfg.backend.fixtures_path);
  return MockBackend::from_file(cfg.backend.fixtures_path, cfg.seed, cfg.backend.embed_dim);
}

inline std::unique_ptr<ReferenceClient> make_reference_client(const RunConfig& cfg) {
  if (!cfg.refs_db_path.empty() && std::filesystem::exists(cfg.refs_db_path))
    return std::make_unique<FixtureReferenceClient>(cfg.refs_db_path);
  return std::make_unique<EmptyReferenceClient>();
}

// Summaries attached to every record of `store`.
inline DomainConsolidation summarize_store(Gateway& gw, CorpusStore& store) {
  std::vector<PaperRecord> records;
  for (const auto& [_, r] : store.records()) records.push_back(r);
  auto res = summarize_corpus(gw, records);
  for (auto& s : res.summaries) store.add_summary(std::move(s));
  return res.consolidation;
}

struct GraphArtifacts {
  std::vector<EntityExtraction> extractions;
  std::vector<ResolvedReference> references;
  std::vector<CitationLink> synthetic_links;
  KnowledgeGraph paper{GraphKind::paper_graph};
  KnowledgeGraph citation{GraphKind::citation_graph};
};

inline GraphArtifacts build_graphs(Gateway& gw, const CorpusStore& pre, const ReferenceClient& client,
                                   const RunConfig& cfg, std::ostream* warn = &std::cerr) {
  if (pre.partition_tag() == PartitionTag::post)
    throw ProtocolError("graphs must be built from the pre-boundary store");
  GraphArtifacts a;
  a.extractions = extract_all(gw, pre, warn);
  a.paper = build_paper_graph(gw, a.extractions, cfg.merge_threshold);
  index_communities(gw, a.paper, cfg.community_resolution, cfg.seed, warn);

  // Papers whose entities could not be extracted have no node to hang
  // citations on, so they drop out of the citation graph as well.
  CorpusStore usable(pre.partition_tag());
  for (const auto& x : a.extractions) usable.add_record(pre.record(x.paper_id));
  std::vector<PaperRecord> records;
  for (const auto& [_, r] : usable.records()) records.push_back(r);
  auto per_paper = parallel_map<std::vector<ResolvedReference>>(
      records.size(), static_cast<std::size_t>(cfg.backend.max_in_flight), [&](std::size_t i) {
        return resolve_references(gw, records[i], client, static_cast<std::size_t>(cfg.ref_sample_k),
                                  cfg.seed, warn);
      });
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::set<std::string> cited;
    for (const auto& r : per_paper[i]) cited.insert(text::canonicalize(r.title));
    for (auto& l : inject_synthetic_links(records[i], usable,
                                          static_cast<std::size_t>(cfg.synthetic_links_n), cfg.seed, cited))
      a.synthetic_links.push_back(std::move(l));
    for (auto& r : per_paper[i]) a.references.push_back(std::move(r));
  }
  a.citation = build_citation_graph(gw, a.extractions, a.references, a.synthetic_links, cfg.merge_threshold);
  index_communities(gw, a.citation, cfg.community_resolution, cfg.seed, warn);
  return a;
}

struct DiscoveryResult {
  ResearchBrief brief;
  MethodSet existing{MethodSetKind::existing, {}};
  MethodSet inspirations{MethodSetKind::inspirational, {}};
  std::vector<Idea> candidates;
  Selection selection;
  Idea idea;                  // selected and refined
  std::vector<Idea> baseline; // empty unless requested
};

// Describes each method by the design of its first provenance paper, the
// same text the evaluation embeds for it.
inline void describe_from_summaries(MethodSet& set, const CorpusStore& pre) {
  const std::string prefix = paper_node_id("");
  for (auto& e : set.entries)
    for (const auto& node : e.provenance) {
      if (node.rfind(prefix, 0) != 0) continue;
      if (const auto* s = pre.summary(node.substr(prefix.size()))) {
        e.description = text::first_sentence(s->design);
        break;
      }
    }
}

// Retrieval, candidate generation, selection and refinement. Touches
// nothing but the pre-boundary graphs and summaries.
inline DiscoveryResult discover(Gateway& gw, const KnowledgeGraph& paper, const KnowledgeGraph& citation,
                                const ResearchBrief& brief, const RunConfig& cfg, bool with_baseline,
                                const CorpusStore* pre = nullptr, std::ostream* warn = &std::cerr) {
  if (pre && pre->partition_tag() == PartitionTag::post)
    throw ProtocolError("discovery must not see the post-boundary store");
  DiscoveryResult d;
  d.brief = brief;
  SearchOptions search{static_cast<std::size_t>(cfg.finding_budget)};
  d.existing = retrieve_existing_methods(gw, paper, brief, search, warn);
  if (pre) describe_from_summaries(d.existing, *pre);
  InspirationOptions iopt;
  iopt.hop_budget = cfg.hop_budget;
  iopt.search = search;
  d.inspirations = retrieve_inspirations(gw, citation, brief, d.existing, iopt, warn);
  auto k = static_cast<std::size_t>(cfg.k_candidates);
  d.candidates = generate_candidates(gw, brief, d.existing, d.inspirations, k, cfg.seed);
  d.selection = select_initial(gw, d.candidates, d.existing, cfg.threshold_t);
  d.idea = iterate_optimize(gw, d.candidates[d.selection.index], cfg.max_iterations, warn);
  if (with_baseline) d.baseline = generate_baseline(gw, brief, k, cfg.seed);
  return d;
}

// Methods of the pre-boundary Paper Graph, the novelty reference set.
inline MethodCorpus pre_methods(const KnowledgeGraph& paper, const CorpusStore& pre) {
  return methods_from_graph(paper, pre);
}

struct PipelineHooks {
  // Runs after generation and before scoring; tests use it to simulate a leak.
  std::function<void(GuardedStore&)> after_generation;
};

struct EndToEndResult {
  CorpusStore pre{PartitionTag::pre};
  GraphArtifacts graphs;
  DiscoveryResult discovery;
  std::size_t guard_reads_during_generation = 0;
  std::vector<std::string> guard_log;
  EvaluationOutput evaluation;
  EvaluationReport report;
};

// Whole pipeline in one process: the post store is guarded from the
// moment the corpus is split until scoring starts.
inline EndToEndResult run_end_to_end(Gateway& gw, CorpusStore full, const ReferenceClient& client,
                                     const RunConfig& cfg, const ResearchBrief& brief,
                                     bool with_baseline = true, const PipelineHooks& hooks = {},
                                     std::ostream* warn = &std::cerr) {
  if (full.summaries().size() != full.size()) summarize_store(gw, full);
  auto [pre, post] = split_by_year(full, cfg.boundary_year);
  auto guard = guard_post_access(std::move(post));
  EndToEndResult r;
  r.pre = std::move(pre);
  r.graphs = build_graphs(gw, r.pre, client, cfg, warn);
  r.discovery = discover(gw, r.graphs.paper, r.graphs.citation, brief, cfg, with_baseline, &r.pre, warn);
  if (hooks.after_generation) hooks.after_generation(guard);
  r.guard_reads_during_generation = guard.read_count();

  std::vector<Idea> ideas{r.discovery.idea};
  EvaluationInputs in;
  in.ideas = &ideas;
  in.baseline = with_baseline ? &r.discovery.baseline : nullptr;
  in.pre_methods = pre_methods(r.graphs.paper, r.pre);
  in.key = {brief.domain, cfg.backend.label()};
  in.threshold = cfg.threshold_t;
  r.evaluation = evaluate_run(gw, in, guard, warn);
  r.guard_log = guard.read_log();
  r.report = build_report(r.evaluation.cards, r.evaluation.baseline_cards);
  return r;
}

}  // namespace ideagraph
