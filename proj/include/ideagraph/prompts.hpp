#pragma once

#include <string>

#include "ideagraph/gateway.hpp"

namespace ideagraph::prompts {

inline const char* instruction(PromptKind kind) {
  switch (kind) {
    case PromptKind::domain_label:
      return "Identify the research domain of the following networking paper. Reply with JSON "
             "{\"label\": <short domain label>}.";
    case PromptKind::domain_merge:
      return "The following research-domain labels were produced independently for many papers. "
             "Merge semantically equivalent labels into standardized domain categories. Reply "
             "with JSON {\"mapping\": {<raw label>: <unified label>, ...}} covering every input "
             "label exactly once.";
    case PromptKind::summarize:
      return "Summarize the paper into three components. Background: research context and "
             "motivation. Problem: core limitations of existing work and the technical "
             "challenges addressed. Design: the key method and system architecture proposed. "
             "Reply with JSON {\"background\", \"problem\", \"design\"}.";
    case PromptKind::extract_entities:
      return "From the paper summary, extract the specific research problems (from Problem) and "
             "the key methods or system architectures (from Design). Reply with JSON "
             "{\"problems\": [..], \"methods\": [..]} using short noun phrases.";
    case PromptKind::ref_method:
      return "Summarize the method of the referenced paper from its abstract in one paragraph "
             "and name the method. Reply with JSON {\"method_name\", \"summary\"}.";
    case PromptKind::report:
      return "Write a community report for this cluster of a research knowledge graph. List "
             "every method in the community on its own line together with the problems and "
             "domains it is connected to. Reply with JSON {\"title\", \"summary\"}.";
    case PromptKind::map_score:
      return "Given the query and one community report, extract the methods from the report "
             "that help answer the query and rate each from 0 (irrelevant) to 100 (directly "
             "relevant). Reply with JSON {\"findings\": [{\"method_name\", \"description\", "
             "\"score\"}]}.";
    case PromptKind::reduce_synthesize:
      return "Merge the ranked findings into one ranked list of methods. Keep the given order, "
             "drop duplicates, and group each method into a technical orientation. Reply with "
             "JSON {\"methods\": [{\"method_name\", \"orientation\", \"relevance\"}]}.";
    case PromptKind::candidates:
      return "Using the research background, existing methods and inspirational methods, "
             "propose one research idea. Include a detailed design, a step-by-step task "
             "decomposition, the technical challenges, and a Reasoning field that explains why "
             "the idea is likely to work. Reply with JSON {\"title\", \"design\", \"tasks\", "
             "\"challenges\", \"reasoning\"}.";
    case PromptKind::suggest:
      return "For each technical challenge of the idea, give concrete suggestions that address "
             "it. Reply with JSON {\"suggestions\": [{\"challenge_index\", \"text\"}]}.";
    case PromptKind::refine:
      return "Revise the idea by incorporating the suggestions. Reply with JSON {\"design\": "
             "<revised design>, \"challenges\": [<challenges that remain>]}.";
    case PromptKind::maturity:
      return "Judge whether the idea is mature: every listed challenge has a concrete "
             "mitigation in the design. Reply with JSON {\"verdict\": true|false, "
             "\"rationale\"}.";
  }
  return "";
}

inline const char* schema_for(PromptKind kind) {
  switch (kind) {
    case PromptKind::domain_label: return "domain_label";
    case PromptKind::domain_merge: return "domain_merge";
    case PromptKind::summarize: return "summary";
    case PromptKind::extract_entities: return "entities";
    case PromptKind::ref_method: return "ref_method";
    case PromptKind::report: return "report";
    case PromptKind::map_score: return "map_score";
    case PromptKind::reduce_synthesize: return "reduce";
    case PromptKind::candidates: return "idea";
    case PromptKind::suggest: return "suggestions";
    case PromptKind::refine: return "refined_idea";
    case PromptKind::maturity: return "maturity";
  }
  return "";
}

inline ChatRequest make_request(PromptKind kind, json payload, std::uint64_t seed = 0,
                                double temperature = 0.0) {
  ChatRequest r;
  r.prompt_kind = kind;
  r.schema_id = schema_for(kind);
  r.prompt_text = std::string(instruction(kind)) + "\n\nInput:\n" + payload.dump(2);
  r.payload = std::move(payload);
  r.seed = seed;
  r.temperature = temperature;
  return r;
}

}  // namespace ideagraph::prompts
