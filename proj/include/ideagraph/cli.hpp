#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ideagraph/config.hpp"
#include "ideagraph/pipeline.hpp"

namespace ideagraph {

namespace fs = std::filesystem;

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::dependency: return 3;
    case ErrorCategory::io:
    case ErrorCategory::validation:
    case ErrorCategory::precondition:
    case ErrorCategory::contract: return 4;
    case ErrorCategory::backend:
    case ErrorCategory::structured_output:
    case ErrorCategory::generation: return 5;
    case ErrorCategory::protocol: return 6;
    case ErrorCategory::retrieval: return 7;
  }
  return 1;
}

// Output directory layout; each stage owns one subdirectory.
struct Layout {
  fs::path root;
  fs::path stage(const std::string& name) const { return root / name; }
  fs::path manifest(const std::string& name) const { return stage(name) / "manifest.json"; }
  fs::path run_config() const { return root / "run_config.json"; }
  fs::path lock() const { return root / ".lock"; }

  fs::path corpus() const { return stage("ingest") / "corpus.jsonl"; }
  fs::path summaries() const { return stage("summarize") / "summaries.jsonl"; }
  fs::path paper_graph() const { return stage("build-graphs") / "paper_graph"; }
  fs::path citation_graph() const { return stage("build-graphs") / "citation_graph"; }
  fs::path ideas() const { return stage("discover") / "ideas.jsonl"; }
  fs::path baseline() const { return stage("discover") / "baseline.jsonl"; }
  fs::path brief() const { return stage("discover") / "brief.json"; }
  fs::path guard() const { return stage("discover") / "guard.json"; }
  fs::path cards() const { return stage("evaluate") / "scorecards.jsonl"; }
  fs::path baseline_cards() const { return stage("evaluate") / "baseline_scorecards.jsonl"; }
};

// One command per output directory at a time.
class DirLock {
 public:
  explicit DirLock(fs::path path) : path_(std::move(path)) {
    fs::create_directories(path_.parent_path());
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw IoError("output directory is locked by another command (" + path_.string() +
                    "); remove the file if no command is running");
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

inline void require_stage(const Layout& l, const std::string& stage, const std::string& needed_by) {
  if (!fs::exists(l.manifest(stage)))
    throw DependencyError(needed_by + " needs the outputs of '" + stage + "' in " +
                          l.stage(stage).string() + "; run `ideagraph " + stage + "` first");
}

inline std::string relative_label(const fs::path& p, const fs::path& root) {
  auto rel = p.lexically_relative(root);
  return rel.empty() || *rel.begin() == ".." ? p.string() : rel.generic_string();
}

inline void write_manifest(const Layout& l, const std::string& stage, const RunConfig& cfg,
                           const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                           const json& extra = json::object()) {
  json in = json::object(), out = json::object();
  for (const auto& p : inputs)
    if (fs::exists(p)) in[relative_label(p, l.root)] = io::file_digest(p);
  for (const auto& p : outputs)
    if (fs::exists(p)) out[relative_label(p, l.root)] = io::file_digest(p);
  auto params = cfg.to_json();
  params.erase("output_dir");
  json m = {{"stage", stage}, {"seed", cfg.seed}, {"parameters", params},
            {"inputs", in},   {"outputs", out},   {"extra", extra}};
  io::write_file(l.manifest(stage), m.dump(2) + "\n");
}

inline CorpusStore load_ingested(const Layout& l, bool with_summaries) {
  auto store = load_corpus(l.corpus()).store;
  if (with_summaries) load_summaries(store, l.summaries());
  return store;
}

inline void write_rows(const fs::path& path, const std::vector<json>& rows) { io::write_jsonl(path, rows); }

template <class T>
std::vector<json> rows_of(const std::vector<T>& xs) {
  std::vector<json> rows;
  for (const auto& x : xs) rows.push_back(x.to_json());
  return rows;
}

struct CliFlags {
  std::optional<std::string> config, corpus, out, domain, problem, backend, base_url, model, fixtures,
      refs_db;
  std::optional<std::uint64_t> seed;
  std::optional<int> boundary_year, k, max_iters, ref_k, links, max_in_flight;
  std::optional<double> threshold;
  bool baseline = false;
  std::vector<std::string> merge;
};

inline RunConfig resolve_config(const CliFlags& f) {
  RunConfig cfg;
  fs::path out = f.out.value_or("out");
  if (f.config) {
    cfg = RunConfig::load(*f.config);
    if (!f.out) out = cfg.output_dir;
  } else if (fs::exists(Layout{out}.run_config())) {
    cfg = RunConfig::load(Layout{out}.run_config());
  }
  cfg.output_dir = out.string();
  if (f.corpus) cfg.corpus_path = *f.corpus;
  if (f.seed) cfg.seed = *f.seed;
  if (f.boundary_year) cfg.boundary_year = *f.boundary_year;
  if (f.k) cfg.k_candidates = *f.k;
  if (f.threshold) cfg.threshold_t = *f.threshold;
  if (f.max_iters) cfg.max_iterations = *f.max_iters;
  if (f.ref_k) cfg.ref_sample_k = *f.ref_k;
  if (f.links) cfg.synthetic_links_n = *f.links;
  if (f.backend) cfg.backend.kind = backend_kind_from_string(*f.backend);
  if (f.base_url) cfg.backend.base_url = *f.base_url;
  if (f.model) cfg.backend.model = *f.model;
  if (f.max_in_flight) cfg.backend.max_in_flight = *f.max_in_flight;
  if (f.fixtures) cfg.backend.fixtures_path = *f.fixtures;
  if (f.refs_db) cfg.refs_db_path = *f.refs_db;
  if (!cfg.corpus_path.empty()) {
    auto dir = fs::path(cfg.corpus_path).parent_path();
    if (cfg.backend.kind == BackendKind::mock && cfg.backend.fixtures_path.empty() &&
        fs::exists(dir / "mock_fixtures.json"))
      cfg.backend.fixtures_path = (dir / "mock_fixtures.json").string();
    if (cfg.refs_db_path.empty() && fs::exists(dir / "ref_metadata.jsonl"))
      cfg.refs_db_path = (dir / "ref_metadata.jsonl").string();
  }
  cfg.validate();
  return cfg;
}

struct StageContext {
  const RunConfig& cfg;
  const CliFlags& flags;
  Layout layout;
  std::ostream& out;
  std::ostream& err;

  Gateway gateway() const { return Gateway(make_backend(cfg), cfg.backend); }
  void save_transcript(const std::string& stage, const Gateway& gw) const {
    io::write_file(layout.stage(stage) / "transcript.jsonl", gw.transcript_jsonl());
  }
};

inline void stage_ingest(const StageContext& c) {
  if (c.cfg.corpus_path.empty()) throw UsageError("ingest needs --corpus (or corpus_path in --config)");
  auto loaded = load_corpus(c.cfg.corpus_path);
  for (const auto& [line, why] : loaded.report.malformed)
    c.err << "warning: skipped line " << line << ": " << why << "\n";
  for (const auto& w : loaded.report.warnings) c.err << "warning: " << w << "\n";
  const auto& l = c.layout;
  save_corpus(loaded.store, l.corpus());
  auto [pre, post] = split_by_year(loaded.store, c.cfg.boundary_year);
  json malformed = json::array();
  for (const auto& [line, why] : loaded.report.malformed) malformed.push_back({{"line", line}, {"reason", why}});
  json rep = {{"lines_parsed", loaded.report.lines_parsed},
              {"malformed", malformed},
              {"warnings", loaded.report.warnings},
              {"pre_papers", pre.size()},
              {"post_papers", post.size()}};
  io::write_file(l.stage("ingest") / "load_report.json", rep.dump(2) + "\n");
  auto stored = c.cfg.to_json();
  stored.erase("output_dir");  // always taken from --out
  io::write_file(l.run_config(), stored.dump(2) + "\n");
  write_manifest(l, "ingest", c.cfg, {c.cfg.corpus_path}, {l.corpus(), l.stage("ingest") / "load_report.json"});
  c.out << "ingested " << loaded.store.size() << " papers (" << pre.size() << " pre, " << post.size()
        << " post)\n";
}

inline void stage_summarize(const StageContext& c) {
  const auto& l = c.layout;
  require_stage(l, "ingest", "summarize");
  auto store = load_ingested(l, false);
  auto gw = c.gateway();
  auto consolidation = summarize_store(gw, store);
  save_summaries(store, l.summaries());
  io::write_file(l.stage("summarize") / "domains.json", consolidation.to_json().dump(2) + "\n");
  c.save_transcript("summarize", gw);
  write_manifest(l, "summarize", c.cfg, {l.corpus()},
                 {l.summaries(), l.stage("summarize") / "domains.json"});
  c.out << "summarized " << store.summaries().size() << " papers into "
        << consolidation.unified_set.size() << " domains\n";
}

inline void stage_build_graphs(const StageContext& c) {
  const auto& l = c.layout;
  require_stage(l, "summarize", "build-graphs");
  auto [pre, post] = split_by_year(load_ingested(l, true), c.cfg.boundary_year);
  auto gw = c.gateway();
  auto client = make_reference_client(c.cfg);
  auto a = build_graphs(gw, pre, *client, c.cfg, &c.err);
  auto dir = l.stage("build-graphs");
  write_rows(dir / "extractions.jsonl", rows_of(a.extractions));
  write_rows(dir / "references.jsonl", rows_of(a.references));
  write_rows(dir / "synthetic_links.jsonl", rows_of(a.synthetic_links));
  export_graph(a.paper, l.paper_graph());
  export_communities(a.paper, l.paper_graph());
  export_graph(a.citation, l.citation_graph());
  export_communities(a.citation, l.citation_graph());
  c.save_transcript("build-graphs", gw);
  std::vector<fs::path> outputs{dir / "extractions.jsonl", dir / "references.jsonl", dir / "synthetic_links.jsonl"};
  for (const auto& g : {l.paper_graph(), l.citation_graph()}) {
    GraphFiles f(g);
    outputs.insert(outputs.end(), {f.nodes, f.edges, f.communities, f.reports});
  }
  write_manifest(l, "build-graphs", c.cfg, {l.corpus(), l.summaries(), fs::path(c.cfg.refs_db_path)}, outputs,
                 {{"pre_papers", pre.size()}});
  c.out << "paper graph: " << a.paper.nodes().size() << " nodes, " << a.paper.edges().size() << " edges, "
        << a.paper.communities.size() << " communities\n"
        << "citation graph: " << a.citation.nodes().size() << " nodes, " << a.citation.edges().size()
        << " edges, " << a.citation.communities.size() << " communities\n";
}

inline void stage_discover(const StageContext& c) {
  const auto& l = c.layout;
  if (!c.flags.domain || c.flags.domain->empty() || !c.flags.problem || c.flags.problem->empty())
    throw UsageError("discover requires --domain and --problem");
  require_stage(l, "build-graphs", "discover");
  auto brief = ResearchBrief::make(*c.flags.domain, *c.flags.problem);
  auto [pre, post] = split_by_year(load_ingested(l, true), c.cfg.boundary_year);
  auto guard = guard_post_access(std::move(post));
  auto paper = load_graph(l.paper_graph(), GraphKind::paper_graph);
  auto citation = load_graph(l.citation_graph(), GraphKind::citation_graph);
  auto gw = c.gateway();
  auto d = discover(gw, paper, citation, brief, c.cfg, c.flags.baseline, &pre, &c.err);
  if (guard.read_count() != 0)
    throw ProtocolError("post-dataset store was read during discovery");
  auto dir = l.stage("discover");
  if (fs::exists(l.baseline())) fs::remove(l.baseline());
  io::write_file(l.brief(), brief.to_json().dump(2) + "\n");
  write_rows(dir / "existing_methods.jsonl", d.existing.to_jsonl());
  write_rows(dir / "inspirational_methods.jsonl", d.inspirations.to_jsonl());
  write_rows(dir / "candidates.jsonl", rows_of(d.candidates));
  std::vector<json> sel;
  for (std::size_t i = 0; i < d.selection.scores.size(); ++i) {
    auto j = d.selection.scores[i].to_json();
    j["selected"] = i == d.selection.index;
    sel.push_back(std::move(j));
  }
  write_rows(dir / "selection.jsonl", sel);
  write_rows(l.ideas(), {d.idea.to_json()});
  if (c.flags.baseline) write_rows(l.baseline(), rows_of(d.baseline));
  io::write_file(l.guard(), json({{"post_reads", guard.read_count()}, {"log", guard.read_log()}}).dump(2) + "\n");
  c.save_transcript("discover", gw);
  std::vector<fs::path> outputs{l.brief(), dir / "existing_methods.jsonl", dir / "inspirational_methods.jsonl",
                                dir / "candidates.jsonl", dir / "selection.jsonl", l.ideas(), l.guard()};
  if (c.flags.baseline) outputs.push_back(l.baseline());
  GraphFiles pg(l.paper_graph()), cg(l.citation_graph());
  write_manifest(l, "discover", c.cfg, {pg.nodes, pg.edges, pg.reports, cg.nodes, cg.edges, cg.reports}, outputs,
                 {{"brief", brief.to_json()}, {"baseline", c.flags.baseline}});
  c.out << "existing methods: " << d.existing.entries.size()
        << ", inspirational methods: " << d.inspirations.entries.size() << "\n"
        << "selected " << d.idea.idea_id << " (S = " << d.selection.scores[d.selection.index].score
        << "): " << d.idea.title << "\n"
        << "refinement steps: " << d.idea.history.size() << ", maturity: " << to_string(d.idea.maturity) << "\n";
}

inline std::vector<Idea> load_ideas(const fs::path& p) {
  std::vector<Idea> out;
  for (const auto& j : io::read_jsonl(p)) out.push_back(Idea::from_json(j));
  return out;
}

inline void stage_evaluate(const StageContext& c) {
  const auto& l = c.layout;
  require_stage(l, "discover", "evaluate");
  auto guard_log = json::parse(io::read_file(l.guard()));
  if (guard_log.at("post_reads").get<std::size_t>() != 0)
    throw ProtocolError("discovery recorded post-dataset reads; its ideas cannot be scored");
  auto brief = ResearchBrief::from_json(json::parse(io::read_file(l.brief())));
  auto [pre, post] = split_by_year(load_ingested(l, true), c.cfg.boundary_year);
  auto guard = guard_post_access(std::move(post));
  auto paper = load_graph(l.paper_graph(), GraphKind::paper_graph);
  auto ideas = load_ideas(l.ideas());
  std::vector<Idea> baseline;
  bool has_baseline = fs::exists(l.baseline());
  if (has_baseline) baseline = load_ideas(l.baseline());

  auto gw = c.gateway();
  EvaluationInputs in;
  in.ideas = &ideas;
  in.baseline = has_baseline ? &baseline : nullptr;
  in.pre_methods = pre_methods(paper, pre);
  in.key = {brief.domain, c.cfg.backend.label()};
  in.threshold = c.cfg.threshold_t;
  auto res = evaluate_run(gw, in, guard, &c.err);

  auto dir = l.stage("evaluate");
  if (fs::exists(l.baseline_cards())) fs::remove(l.baseline_cards());
  write_rows(l.cards(), rows_of(res.cards));
  if (has_baseline) write_rows(l.baseline_cards(), rows_of(res.baseline_cards));
  std::vector<json> pm;
  for (std::size_t i = 0; i < res.post_methods.size(); ++i)
    pm.push_back({{"method_name", res.post_methods.names[i]}, {"text", res.post_methods.texts[i]}});
  write_rows(dir / "post_methods.jsonl", pm);
  c.save_transcript("evaluate", gw);
  std::vector<fs::path> outputs{l.cards(), dir / "post_methods.jsonl"};
  if (has_baseline) outputs.push_back(l.baseline_cards());
  write_manifest(l, "evaluate", c.cfg, {l.corpus(), l.summaries(), l.ideas(), l.baseline(), l.guard()}, outputs,
                 {{"pre_methods", in.pre_methods.size()}, {"post_methods", res.post_methods.size()}});
  for (const auto& card : res.cards)
    c.out << card.idea_id << ": N_S=" << detail::fixed3(card.n_s) << " P_S=" << detail::fixed3(card.p_s)
          << " I_S=" << detail::fixed3(card.i_s) << "\n";
}

inline std::vector<ScoreCard> load_cards(const fs::path& p) {
  std::vector<ScoreCard> out;
  if (!fs::exists(p)) return out;
  for (const auto& j : io::read_jsonl(p)) out.push_back(ScoreCard::from_json(j));
  return out;
}

inline void stage_report(const StageContext& c) {
  const auto& l = c.layout;
  require_stage(l, "evaluate", "report");
  std::vector<Layout> sources{l};
  for (const auto& m : c.flags.merge) {
    Layout other{m};
    require_stage(other, "evaluate", "report --merge " + m);
    sources.push_back(other);
  }
  std::vector<ScoreCard> cards, base;
  std::vector<fs::path> inputs;
  for (const auto& s : sources) {
    auto a = load_cards(s.cards());
    auto b = load_cards(s.baseline_cards());
    cards.insert(cards.end(), a.begin(), a.end());
    base.insert(base.end(), b.begin(), b.end());
    inputs.push_back(s.cards());
    inputs.push_back(s.baseline_cards());
  }
  auto rep = build_report(cards, base);
  auto dir = l.stage("report");
  io::write_file(dir / "report.csv", report_csv(rep));
  io::write_file(dir / "report.txt", report_table(rep));
  std::vector<fs::path> outputs{dir / "report.csv", dir / "report.txt"};
  if (fs::exists(dir / "ablation.csv")) fs::remove(dir / "ablation.csv");
  if (!rep.ablation_rows.empty()) {
    io::write_file(dir / "ablation.csv", ablation_csv(rep));
    outputs.push_back(dir / "ablation.csv");
  }
  write_manifest(l, "report", c.cfg, inputs, outputs, {{"merged", c.flags.merge}});
  c.out << report_table(rep);
}

// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"ideagraph: literature-based idea discovery over a paper corpus"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  CliFlags f;
  app.add_option("--config", f.config, "run configuration file (JSON)");
  app.add_option("--corpus", f.corpus, "line-delimited corpus file");
  app.add_option("--out", f.out, "output directory (default: out)");
  app.add_option("--seed", f.seed, "seed for sampling and the mock backend");
  app.add_option("--boundary-year", f.boundary_year, "last year of the pre-boundary split");
  app.add_option("--k", f.k, "number of candidate ideas");
  app.add_option("--threshold", f.threshold, "similarity threshold t");
  app.add_option("--max-iters", f.max_iters, "refinement iteration cap");
  app.add_option("--ref-k", f.ref_k, "references sampled per paper");
  app.add_option("--links", f.links, "synthetic citation links per paper");
  app.add_option("--domain", f.domain, "research domain (discover)");
  app.add_option("--problem", f.problem, "research problem (discover)");
  app.add_option("--backend", f.backend, "live or mock")->check(CLI::IsMember({"live", "mock"}));
  app.add_option("--base-url", f.base_url, "live backend base URL");
  app.add_option("--model", f.model, "live backend model name");
  app.add_option("--max-in-flight", f.max_in_flight, "concurrent backend calls");
  app.add_option("--fixtures", f.fixtures, "mock fixture table (default: next to the corpus)");
  app.add_option("--refs-db", f.refs_db, "reference metadata file (default: next to the corpus)");
  app.add_flag("--baseline", f.baseline, "also generate brief-only baseline ideas (discover)");
  app.add_option("--merge", f.merge, "extra output directories whose scorecards join the report");

  struct Cmd {
    const char* name;
    const char* help;
    void (*fn)(const StageContext&);
  };
  const Cmd cmds[] = {
      {"ingest", "load and validate the corpus", stage_ingest},
      {"summarize", "label domains and summarize every paper", stage_summarize},
      {"build-graphs", "build the paper and citation graphs from the pre-boundary split", stage_build_graphs},
      {"discover", "retrieve methods, generate, select and refine an idea", stage_discover},
      {"evaluate", "score ideas against the pre and post splits", stage_evaluate},
      {"report", "aggregate scorecards into tables", stage_report},
  };
  std::vector<CLI::App*> subs;
  for (const auto& cmd : cmds) subs.push_back(app.add_subcommand(cmd.name, cmd.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun `ideagraph --help` for usage\n";
    return 2;
  }

  try {
    auto cfg = resolve_config(f);
    Layout layout{cfg.output_dir};
    DirLock lock(layout.lock());
    StageContext ctx{cfg, f, layout, out, err};
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) cmds[i].fn(ctx);
    return 0;
  } catch (const Error& e) {
    err << "error [" << to_string(e.category()) << "]: " << e.what() << "\n";
    if (e.category() == ErrorCategory::usage) err << "run `ideagraph --help` for usage\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ideagraph
