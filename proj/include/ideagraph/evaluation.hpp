#pragma once

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ideagraph/corpus.hpp"
#include "ideagraph/gateway.hpp"
#include "ideagraph/graph.hpp"
#include "ideagraph/graph_build.hpp"
#include "ideagraph/ideation.hpp"

namespace ideagraph {

struct NoveltyScore {
  double n_s = 1.0;
  std::size_t n_above_threshold = 0;
  std::size_t n_pre_methods = 0;
};

// N_S = 1 - |{e in E_pre : cos(i, e) > t}| / |E_pre|.
inline NoveltyScore novelty_score(const EmbeddingVector& idea,
                                  std::span<const EmbeddingVector> pre_methods, double t = 0.8) {
  if (pre_methods.empty()) throw ContractError("novelty_score: empty pre-dataset method set");
  std::size_t above = 0;
  for (const auto& m : pre_methods)
    if (cosine_similarity(idea, m) > t) ++above;
  return {1.0 - static_cast<double>(above) / static_cast<double>(pre_methods.size()), above,
          pre_methods.size()};
}

struct PracticalityScore {
  double p_s = 0;
  std::size_t best_index = 0;
};

// P_S = max over E_post of cos(i, e); first index wins ties.
inline PracticalityScore practicality_score(const EmbeddingVector& idea,
                                            std::span<const EmbeddingVector> post_methods) {
  if (post_methods.empty()) throw ContractError("practicality_score: empty post-dataset method set");
  PracticalityScore best{cosine_similarity(idea, post_methods[0]), 0};
  for (std::size_t i = 1; i < post_methods.size(); ++i) {
    double s = cosine_similarity(idea, post_methods[i]);
    if (s > best.p_s) best = {s, i};
  }
  return best;
}

// Harmonic mean of novelty and practicality; negative inputs count as 0.
inline double quality_score(double n_s, double p_s) {
  n_s = std::max(0.0, n_s);
  p_s = std::max(0.0, p_s);
  if (n_s + p_s <= 0) return 0.0;
  return 2.0 * n_s * p_s / (n_s + p_s);
}

struct ScoreCard {
  std::string idea_id;
  std::string domain;
  std::string backend;
  double n_s = 0;
  double p_s = 0;
  double i_s = 0;
  std::size_t n_above_threshold = 0;
  std::size_t n_pre_methods = 0;
  std::string best_post_match;
  double best_post_similarity = 0;

  json to_json() const {
    return {{"idea_id", idea_id},
            {"domain", domain},
            {"backend", backend},
            {"n_s", n_s},
            {"p_s", p_s},
            {"i_s", i_s},
            {"n_above_threshold", n_above_threshold},
            {"n_pre_methods", n_pre_methods},
            {"best_post_match", {{"method", best_post_match}, {"similarity", best_post_similarity}}}};
  }
  static ScoreCard from_json(const json& j) {
    ScoreCard c;
    c.idea_id = j.at("idea_id").get<std::string>();
    c.domain = j.at("domain").get<std::string>();
    c.backend = j.at("backend").get<std::string>();
    c.n_s = j.at("n_s").get<double>();
    c.p_s = j.at("p_s").get<double>();
    c.i_s = j.at("i_s").get<double>();
    c.n_above_threshold = j.at("n_above_threshold").get<std::size_t>();
    c.n_pre_methods = j.at("n_pre_methods").get<std::size_t>();
    c.best_post_match = j.at("best_post_match").at("method").get<std::string>();
    c.best_post_similarity = j.at("best_post_match").at("similarity").get<double>();
    return c;
  }
};

// Method names and the texts embedded for them.
struct MethodCorpus {
  std::vector<std::string> names;
  std::vector<std::string> texts;

  std::size_t size() const { return names.size(); }
  bool empty() const { return names.empty(); }
  void add(std::string name, std::string text) {
    names.push_back(std::move(name));
    texts.push_back(std::move(text));
  }
};

inline std::string method_text(const std::string& name, const PaperSummary* provenance) {
  if (!provenance) return name;
  return name + ". " + text::first_sentence(provenance->design);
}

// Every Method node of a graph, described by its first provenance paper.
inline MethodCorpus methods_from_graph(const KnowledgeGraph& g, const CorpusStore& store) {
  MethodCorpus mc;
  for (const auto* m : g.nodes_of(NodeKind::Method)) {
    const PaperSummary* s = nullptr;
    for (const auto& pid : m->source_paper_ids)
      if ((s = store.summary(pid))) break;
    mc.add(m->canonical_name, method_text(m->canonical_name, s));
  }
  return mc;
}

inline MethodCorpus methods_from_extractions(const std::vector<EntityExtraction>& items,
                                             const CorpusStore& store) {
  MethodCorpus mc;
  std::set<std::string> seen;
  for (const auto& x : items)
    for (const auto& m : x.methods)
      if (seen.insert(text::canonicalize(m)).second) mc.add(m, method_text(m, store.summary(x.paper_id)));
  return mc;
}

struct RunKey {
  std::string domain;
  std::string backend;
  auto operator<=>(const RunKey&) const = default;
};

inline std::vector<ScoreCard> score_ideas(Gateway& gw, const std::vector<Idea>& ideas,
                                          const MethodCorpus& pre, const MethodCorpus& post,
                                          const RunKey& key, double t = 0.8) {
  if (pre.empty()) throw ContractError("score_ideas: empty pre-dataset method set");
  if (post.empty()) throw ContractError("score_ideas: empty post-dataset method set");
  std::vector<std::string> texts;
  for (const auto& i : ideas) texts.push_back(i.embedding_text());
  texts.insert(texts.end(), pre.texts.begin(), pre.texts.end());
  texts.insert(texts.end(), post.texts.begin(), post.texts.end());
  auto vecs = gw.embed_batch(texts);
  std::span<const EmbeddingVector> all(vecs);
  auto pre_v = all.subspan(ideas.size(), pre.size());
  auto post_v = all.subspan(ideas.size() + pre.size(), post.size());
  std::vector<ScoreCard> cards;
  for (std::size_t i = 0; i < ideas.size(); ++i) {
    auto n = novelty_score(vecs[i], pre_v, t);
    auto p = practicality_score(vecs[i], post_v);
    cards.push_back({ideas[i].idea_id, key.domain, key.backend, n.n_s, p.p_s,
                     quality_score(n.n_s, p.p_s), n.n_above_threshold, n.n_pre_methods,
                     post.names[p.best_index], p.p_s});
  }
  return cards;
}

struct EvaluationInputs {
  const std::vector<Idea>* ideas = nullptr;
  const std::vector<Idea>* baseline = nullptr;  // optional
  MethodCorpus pre_methods;
  RunKey key;
  double threshold = 0.8;
};

struct EvaluationOutput {
  std::vector<ScoreCard> cards;
  std::vector<ScoreCard> baseline_cards;
  MethodCorpus post_methods;
};

// The only place the post store is read. Fails if anything touched it earlier.
inline EvaluationOutput evaluate_run(Gateway& gw, const EvaluationInputs& in, GuardedStore& post,
                                     std::ostream* warn = &std::cerr) {
  if (!in.ideas) throw PreconditionError("evaluate_run: no ideas");
  if (post.read_count() > 0)
    throw ProtocolError("post-dataset guard already has " + std::to_string(post.read_count()) +
                        " reads before evaluation");
  post.begin_scoring();
  const auto& post_store = post.read("evaluate_run");
  EvaluationOutput out;
  out.post_methods = methods_from_extractions(extract_all(gw, post_store, warn), post_store);
  out.cards = score_ideas(gw, *in.ideas, in.pre_methods, out.post_methods, in.key, in.threshold);
  if (in.baseline)
    out.baseline_cards = score_ideas(gw, *in.baseline, in.pre_methods, out.post_methods, in.key, in.threshold);
  return out;
}

// --- reports -------------------------------------------------------------

struct ReportRow {
  std::string domain;
  std::string backend;
  double mean_n_s = 0;
  double mean_p_s = 0;
  double mean_i_s = 0;
  std::size_t idea_count = 0;
};

struct AblationRow {
  std::string domain;
  std::string backend;
  double system_i_s = 0;
  double baseline_i_s = 0;
  double delta = 0;
  double relative_delta = 0;  // delta / baseline, 0 when baseline is 0
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  std::vector<AblationRow> ablation_rows;
};

inline std::map<RunKey, std::vector<const ScoreCard*>> group_cards(const std::vector<ScoreCard>& cards) {
  std::map<RunKey, std::vector<const ScoreCard*>> groups;
  for (const auto& c : cards) groups[{c.domain, c.backend}].push_back(&c);
  return groups;
}

// Arithmetic mean per (domain, backend) cell.
inline std::vector<ReportRow> aggregate(const std::vector<ScoreCard>& cards) {
  std::vector<ReportRow> rows;
  for (const auto& [key, group] : group_cards(cards)) {
    ReportRow r{key.domain, key.backend, 0, 0, 0, group.size()};
    for (const auto* c : group) {
      r.mean_n_s += c->n_s;
      r.mean_p_s += c->p_s;
      r.mean_i_s += c->i_s;
    }
    auto n = static_cast<double>(group.size());
    r.mean_n_s /= n;
    r.mean_p_s /= n;
    r.mean_i_s /= n;
    rows.push_back(r);
  }
  return rows;
}

inline AblationRow ablation_row(const RunKey& key, double system_i_s, double baseline_i_s) {
  double delta = system_i_s - baseline_i_s;
  return {key.domain, key.backend, system_i_s, baseline_i_s, delta,
          baseline_i_s > 0 ? delta / baseline_i_s : 0.0};
}

inline std::vector<AblationRow> ablation_compare(const std::vector<ScoreCard>& system,
                                                 const std::vector<ScoreCard>& baseline) {
  if (system.empty() || baseline.empty()) throw PreconditionError("ablation_compare: empty card list");
  auto sys = aggregate(system);
  auto base = aggregate(baseline);
  std::map<RunKey, double> sys_m, base_m;
  for (const auto& r : sys) sys_m[{r.domain, r.backend}] = r.mean_i_s;
  for (const auto& r : base) base_m[{r.domain, r.backend}] = r.mean_i_s;
  std::vector<std::string> unmatched;
  for (const auto& [k, _] : sys_m)
    if (!base_m.count(k)) unmatched.push_back(k.domain + "/" + k.backend + " (no baseline)");
  for (const auto& [k, _] : base_m)
    if (!sys_m.count(k)) unmatched.push_back(k.domain + "/" + k.backend + " (no system run)");
  if (!unmatched.empty())
    throw ValidationError("ablation_compare: unmatched keys: " + text::join(unmatched, ", "));
  std::vector<AblationRow> rows;
  for (const auto& [k, v] : sys_m) rows.push_back(ablation_row(k, v, base_m.at(k)));
  return rows;
}

inline EvaluationReport build_report(const std::vector<ScoreCard>& cards,
                                     const std::vector<ScoreCard>& baseline_cards = {}) {
  EvaluationReport rep{aggregate(cards), {}};
  if (!cards.empty() && !baseline_cards.empty()) rep.ablation_rows = ablation_compare(cards, baseline_cards);
  return rep;
}

namespace detail {
inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

inline std::string report_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "domain,backend,novelty,practicality,quality,ideas\n";
  for (const auto& r : rep.rows)
    os << detail::csv_field(r.domain) << ',' << detail::csv_field(r.backend) << ','
       << detail::fixed3(r.mean_n_s) << ',' << detail::fixed3(r.mean_p_s) << ','
       << detail::fixed3(r.mean_i_s) << ',' << r.idea_count << '\n';
  return os.str();
}

inline std::string ablation_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "domain,backend,system_quality,baseline_quality,delta,relative_delta\n";
  for (const auto& r : rep.ablation_rows)
    os << detail::csv_field(r.domain) << ',' << detail::csv_field(r.backend) << ','
       << detail::fixed3(r.system_i_s) << ',' << detail::fixed3(r.baseline_i_s) << ','
       << detail::fixed3(r.delta) << ',' << detail::fixed3(r.relative_delta) << '\n';
  return os.str();
}

// Metrics as rows, (domain, backend) cells as columns.
inline std::string report_table(const EvaluationReport& rep) {
  std::vector<std::string> header{"Metric"};
  std::vector<std::vector<std::string>> body{{"Novelty"}, {"Practicality"}, {"Overall Quality"}};
  for (const auto& r : rep.rows) {
    header.push_back(r.domain + " / " + r.backend);
    body[0].push_back(detail::fixed3(r.mean_n_s));
    body[1].push_back(detail::fixed3(r.mean_p_s));
    body[2].push_back(detail::fixed3(r.mean_i_s));
  }
  std::vector<std::size_t> width(header.size(), 0);
  auto fit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  fit(header);
  for (const auto& b : body) fit(b);
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += " | ";
      s += row[i] + std::string(width[i] - row[i].size(), ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string rule;
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i) rule += "-+-";
    rule += std::string(width[i], '-');
  }
  std::string out = line(header) + rule + "\n";
  for (const auto& b : body) out += line(b);
  if (!rep.ablation_rows.empty()) {
    out += "\nAblation (quality, system vs. brief-only baseline)\n";
    for (const auto& a : rep.ablation_rows) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s / %s: %.3f vs %.3f (%+.3f, %+.1f%%)\n", a.domain.c_str(),
                    a.backend.c_str(), a.system_i_s, a.baseline_i_s, a.delta, 100.0 * a.relative_delta);
      out += buf;
    }
  }
  return out;
}

}  // namespace ideagraph
