#pragma once

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ideagraph/gateway.hpp"
#include "ideagraph/parallel.hpp"
#include "ideagraph/prompts.hpp"
#include "ideagraph/retrieval.hpp"

namespace ideagraph {

enum class Maturity { draft, refined, mature };

inline const char* to_string(Maturity m) {
  switch (m) {
    case Maturity::draft: return "draft";
    case Maturity::refined: return "refined";
    case Maturity::mature: return "mature";
  }
  return "?";
}
inline Maturity maturity_from_string(const std::string& s) {
  if (s == "draft") return Maturity::draft;
  if (s == "refined") return Maturity::refined;
  if (s == "mature") return Maturity::mature;
  throw ValidationError("unknown maturity '" + s + "'");
}

struct Suggestion {
  int challenge_index = 0;
  std::string text;
  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

struct RefinementStep {
  int iteration = 1;
  std::vector<std::string> suggestions;
  std::string revised_design;
  bool maturity_verdict = false;
  std::string rationale;
  friend bool operator==(const RefinementStep&, const RefinementStep&) = default;
};

struct Idea {
  std::string idea_id;
  std::string title;
  std::string design;
  std::vector<std::string> tasks;
  std::vector<std::string> challenges;
  std::string reasoning;
  Maturity maturity = Maturity::draft;
  std::vector<RefinementStep> history;
  bool degraded = false;

  // Text embedded for similarity scoring.
  std::string embedding_text() const { return title + "\n" + design; }

  json to_json() const {
    json hist = json::array();
    for (const auto& h : history)
      hist.push_back({{"iteration", h.iteration},
                      {"suggestions", h.suggestions},
                      {"revised_design", h.revised_design},
                      {"maturity_verdict", h.maturity_verdict},
                      {"rationale", h.rationale}});
    return {{"idea_id", idea_id},     {"title", title},         {"design", design},
            {"tasks", tasks},         {"challenges", challenges}, {"reasoning", reasoning},
            {"maturity", to_string(maturity)}, {"history", hist}, {"degraded", degraded}};
  }
  static Idea from_json(const json& j) {
    Idea i;
    i.idea_id = j.at("idea_id").get<std::string>();
    i.title = j.at("title").get<std::string>();
    i.design = j.at("design").get<std::string>();
    i.tasks = j.at("tasks").get<std::vector<std::string>>();
    i.challenges = j.at("challenges").get<std::vector<std::string>>();
    i.reasoning = j.at("reasoning").get<std::string>();
    i.maturity = maturity_from_string(j.value("maturity", "draft"));
    i.degraded = j.value("degraded", false);
    for (const auto& h : j.value("history", json::array()))
      i.history.push_back({h.at("iteration").get<int>(),
                           h.at("suggestions").get<std::vector<std::string>>(),
                           h.at("revised_design").get<std::string>(),
                           h.at("maturity_verdict").get<bool>(), h.value("rationale", "")});
    return i;
  }
  friend bool operator==(const Idea&, const Idea&) = default;
};

inline std::string method_embedding_text(const MethodEntry& e) {
  return e.description.empty() ? e.method_name : e.method_name + ". " + e.description;
}

inline std::string idea_id_for(std::size_t index, const char* prefix = "idea") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%02zu", prefix, index);
  return buf;
}

inline json idea_payload(const Idea& idea) {
  return {{"idea_id", idea.idea_id},   {"title", idea.title},
          {"design", idea.design},     {"tasks", idea.tasks},
          {"challenges", idea.challenges}, {"reasoning", idea.reasoning},
          {"iteration", idea.history.size()}};
}

namespace detail {

inline Idea idea_from_record(const json& v, std::string id) {
  Idea i;
  i.idea_id = std::move(id);
  i.title = v["title"].get<std::string>();
  i.design = v["design"].get<std::string>();
  i.tasks = v["tasks"].get<std::vector<std::string>>();
  i.challenges = v["challenges"].get<std::vector<std::string>>();
  i.reasoning = v["reasoning"].get<std::string>();
  return i;
}

inline std::vector<Idea> generate(Gateway& gw, const json& base, std::size_t k, std::uint64_t seed,
                                  const char* prefix) {
  if (k == 0) throw PreconditionError("generate_candidates: k must be at least 1");
  auto results = parallel_map<std::optional<Idea>>(
      k, static_cast<std::size_t>(gw.config().max_in_flight), [&](std::size_t i) -> std::optional<Idea> {
        json payload = base;
        payload["index"] = i;
        payload["k"] = k;
        try {
          auto out = gw.complete(prompts::make_request(
              PromptKind::candidates, payload, text::mix_seed(seed, "candidate:" + std::to_string(i)),
              0.7));
          return idea_from_record(out.value, idea_id_for(i, prefix));
        } catch (const StructuredOutputError&) {
          return std::nullopt;
        }
      });
  std::vector<Idea> ideas;
  for (auto& r : results)
    if (r) ideas.push_back(std::move(*r));
  if (ideas.size() < k)
    throw GenerationError("generated " + std::to_string(ideas.size()) + " valid ideas of " +
                          std::to_string(k) + " requested (shortfall " +
                          std::to_string(k - ideas.size()) + ")");
  return ideas;
}

}  // namespace detail

// k independent candidate calls over B (+) E_m (+) I_m.
inline std::vector<Idea> generate_candidates(Gateway& gw, const ResearchBrief& brief,
                                             const MethodSet& existing,
                                             const MethodSet& inspirations, std::size_t k = 20,
                                             std::uint64_t seed = 0) {
  if (existing.empty()) throw PreconditionError("generate_candidates: no existing methods");
  json ex = json::array(), insp = json::array();
  for (const auto& e : existing.entries)
    ex.push_back({{"method_name", e.method_name},
                  {"orientation", e.orientation},
                  {"description", e.description}});
  for (const auto& e : inspirations.entries)
    insp.push_back({{"method_name", e.method_name}, {"via", e.via}});
  json base = {{"brief", brief.to_json()},
               {"background", brief.composed_query},
               {"existing_methods", ex},
               {"inspirational_methods", insp}};
  return detail::generate(gw, base, k, seed, "idea");
}

// Ideas from the brief alone; the comparison point for ablations.
inline std::vector<Idea> generate_baseline(Gateway& gw, const ResearchBrief& brief, std::size_t k,
                                           std::uint64_t seed = 0) {
  json base = {{"brief", brief.to_json()},
               {"background", brief.composed_query},
               {"existing_methods", json::array()},
               {"inspirational_methods", json::array()},
               {"baseline", true}};
  return detail::generate(gw, base, k, seed, "baseline");
}

// --- selection -----------------------------------------------------------

struct SelectionScore {
  std::string idea_id;
  std::size_t n_above_threshold = 0;
  std::size_t n_methods = 0;
  double score = 0;
  double threshold = 0.8;

  json to_json() const {
    return {{"idea_id", idea_id},  {"n_above_threshold", n_above_threshold},
            {"n_methods", n_methods}, {"score", score}, {"threshold", threshold}};
  }
};

// S = |{e : cos(idea, e) > t}| / |E|. Equality with t does not count.
inline SelectionScore selection_score(const std::string& idea_id, const EmbeddingVector& idea_vector,
                                      std::span<const EmbeddingVector> method_vectors,
                                      double t = 0.8) {
  if (method_vectors.empty()) throw ContractError("selection_score: empty method set");
  std::size_t above = 0;
  for (const auto& m : method_vectors)
    if (cosine_similarity(idea_vector, m) > t) ++above;
  return {idea_id, above, method_vectors.size(),
          static_cast<double>(above) / static_cast<double>(method_vectors.size()), t};
}

struct Selection {
  std::size_t index = 0;
  std::vector<SelectionScore> scores;
};

// Argmin of S; ties go to the earliest candidate.
inline std::size_t argmin_score(const std::vector<SelectionScore>& scores) {
  if (scores.empty()) throw PreconditionError("argmin_score: no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].score < scores[best].score) best = i;
  return best;
}

// Embeds candidates and method texts in one batch, then picks argmin S.
inline Selection select_initial(Gateway& gw, const std::vector<Idea>& candidates,
                                const std::vector<std::string>& method_texts, double t = 0.8) {
  if (candidates.empty()) throw PreconditionError("select_initial: no candidates");
  if (method_texts.empty()) throw ContractError("select_initial: empty method set");
  std::vector<std::string> texts;
  for (const auto& c : candidates) texts.push_back(c.embedding_text());
  texts.insert(texts.end(), method_texts.begin(), method_texts.end());
  auto vecs = gw.embed_batch(texts);
  std::span<const EmbeddingVector> methods(vecs.data() + candidates.size(), method_texts.size());
  Selection sel;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    sel.scores.push_back(selection_score(candidates[i].idea_id, vecs[i], methods, t));
  sel.index = argmin_score(sel.scores);
  return sel;
}

inline Selection select_initial(Gateway& gw, const std::vector<Idea>& candidates,
                                const MethodSet& existing, double t = 0.8) {
  std::vector<std::string> texts;
  for (const auto& e : existing.entries) texts.push_back(method_embedding_text(e));
  return select_initial(gw, candidates, texts, t);
}

// --- refinement ----------------------------------------------------------

inline std::vector<Suggestion> suggest_improvements(Gateway& gw, const Idea& idea) {
  if (idea.challenges.empty())
    throw PreconditionError("suggest_improvements: idea " + idea.idea_id + " has no challenges");
  auto in_range = [&](const json& v) -> std::optional<std::string> {
    for (const auto& s : v["suggestions"]) {
      auto i = s["challenge_index"].get<long>();
      if (i < 0 || i >= static_cast<long>(idea.challenges.size()))
        return "challenge_index " + std::to_string(i) + " out of range";
    }
    return std::nullopt;
  };
  auto out = gw.complete(prompts::make_request(PromptKind::suggest, idea_payload(idea)), in_range);
  std::vector<Suggestion> res;
  for (const auto& s : out.value["suggestions"])
    res.push_back({s["challenge_index"].get<int>(), s["text"].get<std::string>()});
  return res;
}

// Returns a revised copy with one more history step. Throws GenerationError
// on failure; the input is never modified.
inline Idea refine(Gateway& gw, const Idea& idea, const std::vector<Suggestion>& suggestions) {
  if (suggestions.empty()) throw PreconditionError("refine: no suggestions");
  json sj = json::array();
  std::vector<std::string> texts;
  for (const auto& s : suggestions) {
    sj.push_back({{"challenge_index", s.challenge_index}, {"text", s.text}});
    texts.push_back(s.text);
  }
  json payload = idea_payload(idea);
  payload["suggestions"] = sj;
  StructuredRecord out;
  try {
    out = gw.complete(prompts::make_request(PromptKind::refine, payload));
  } catch (const Error& e) {
    throw GenerationError("refinement of " + idea.idea_id + " failed: " + e.what());
  }
  Idea next = idea;
  next.design = out.value["design"].get<std::string>();
  next.challenges = out.value["challenges"].get<std::vector<std::string>>();
  next.maturity = Maturity::refined;
  next.history.push_back({static_cast<int>(idea.history.size()) + 1, texts, next.design, false, {}});
  return next;
}

struct MaturityVerdict {
  bool verdict = false;
  std::string rationale;
};

// Schema failures after repair count as "not mature".
inline MaturityVerdict judge_maturity(Gateway& gw, const Idea& idea, std::ostream* warn = &std::cerr) {
  if (idea.title.empty() && idea.design.empty()) throw PreconditionError("judge_maturity: empty idea");
  try {
    auto out = gw.complete(prompts::make_request(PromptKind::maturity, idea_payload(idea)));
    return {out.value["verdict"].get<bool>(), out.value["rationale"].get<std::string>()};
  } catch (const StructuredOutputError& e) {
    if (warn) *warn << "warning: maturity verdict unusable for " << idea.idea_id << ": " << e.what() << "\n";
    return {false, "unparseable verdict"};
  }
}

inline constexpr int kMaxConsecutiveRefineErrors = 3;

// suggest -> refine -> judge until a mature verdict or the iteration cap.
// Every attempt, failed or not, spends one iteration.
inline Idea iterate_optimize(Gateway& gw, Idea idea, int max_iterations = 10,
                             std::ostream* warn = &std::cerr) {
  if (max_iterations < 0) throw PreconditionError("iterate_optimize: negative max_iterations");
  int consecutive_errors = 0;
  for (int attempt = 1; attempt <= max_iterations; ++attempt) {
    if (idea.challenges.empty()) break;
    try {
      auto suggestions = suggest_improvements(gw, idea);
      auto next = refine(gw, idea, suggestions);
      auto verdict = judge_maturity(gw, next, warn);
      next.history.back().maturity_verdict = verdict.verdict;
      next.history.back().rationale = verdict.rationale;
      idea = std::move(next);
      consecutive_errors = 0;
      if (verdict.verdict) {
        idea.maturity = Maturity::mature;
        return idea;
      }
    } catch (const Error& e) {
      if (warn) *warn << "warning: refinement attempt " << attempt << " failed: " << e.what() << "\n";
      if (++consecutive_errors >= kMaxConsecutiveRefineErrors) {
        idea.degraded = true;
        return idea;
      }
    }
  }
  if (!idea.history.empty()) idea.maturity = Maturity::refined;
  return idea;
}

}  // namespace ideagraph
