#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "ideagraph/corpus.hpp"
#include "ideagraph/gateway.hpp"
#include "ideagraph/parallel.hpp"
#include "ideagraph/prompts.hpp"

namespace ideagraph {

struct DomainConsolidation {
  std::map<std::string, std::string> raw_to_unified;
  std::set<std::string> unified_set;

  bool covers(const std::string& raw) const { return raw_to_unified.count(raw) > 0; }
  const std::string& unify(const std::string& raw) const {
    auto it = raw_to_unified.find(raw);
    if (it == raw_to_unified.end())
      throw PreconditionError("domain label '" + raw + "' missing from consolidation");
    return it->second;
  }

  json to_json() const { return {{"raw_to_unified", raw_to_unified}}; }
  static DomainConsolidation from_json(const json& j) {
    DomainConsolidation c;
    c.raw_to_unified = j.at("raw_to_unified").get<std::map<std::string, std::string>>();
    for (const auto& [_, u] : c.raw_to_unified) c.unified_set.insert(u);
    return c;
  }
};

struct CitationLink {
  std::string src_paper_id;
  std::string dst_key;  // paper_id for corpus papers, lookup key for external references
  bool synthetic = false;
  std::string method_summary;

  json to_json() const {
    return {{"src", src_paper_id}, {"dst", dst_key}, {"synthetic", synthetic},
            {"method_summary", method_summary}};
  }
  static CitationLink from_json(const json& j) {
    return {j.at("src").get<std::string>(), j.at("dst").get<std::string>(),
            j.at("synthetic").get<bool>(), j.value("method_summary", "")};
  }
  friend bool operator==(const CitationLink&, const CitationLink&) = default;
};

// --- reference metadata --------------------------------------------------

struct ReferenceMetadata {
  std::string title;
  std::string abstract;
};

class ReferenceClient {
 public:
  virtual ~ReferenceClient() = default;
  virtual std::optional<ReferenceMetadata> lookup(const std::string& key) const = 0;
};

// Offline client backed by a line-delimited file of {key, title, abstract}.
class FixtureReferenceClient : public ReferenceClient {
 public:
  FixtureReferenceClient() = default;
  explicit FixtureReferenceClient(const std::filesystem::path& path) {
    for (const auto& j : io::read_jsonl(path))
      entries_[j.at("key").get<std::string>()] = {j.value("title", ""), j.value("abstract", "")};
  }

  void add(std::string key, ReferenceMetadata meta) { entries_[std::move(key)] = std::move(meta); }

  std::optional<ReferenceMetadata> lookup(const std::string& key) const override {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, ReferenceMetadata> entries_;
};

// --- domain labels -------------------------------------------------------

namespace detail {

inline json paper_payload(const PaperRecord& r) {
  constexpr std::size_t kExcerpt = 4000;
  return {{"paper_id", r.paper_id},
          {"title", r.title},
          {"abstract", r.abstract},
          {"body_excerpt", r.body_text.substr(0, std::min(r.body_text.size(), kExcerpt))}};
}

}  // namespace detail

inline std::string extract_domain_label(Gateway& gw, const PaperRecord& record) {
  if (record.abstract.empty() && record.body_text.empty())
    throw PreconditionError("paper " + record.paper_id + " has neither abstract nor body text");
  auto out = gw.complete(prompts::make_request(PromptKind::domain_label,
                                               detail::paper_payload(record)));
  return out.value.at("label").get<std::string>();
}

// One global merge call over the distinct raw labels.
inline DomainConsolidation consolidate_domains(Gateway& gw,
                                               const std::vector<std::string>& labels) {
  if (labels.empty()) throw PreconditionError("consolidate_domains: no labels");
  std::set<std::string> distinct(labels.begin(), labels.end());
  DomainConsolidation c;
  if (distinct.size() == 1) {
    c.raw_to_unified[*distinct.begin()] = *distinct.begin();
    c.unified_set.insert(*distinct.begin());
    return c;
  }
  json payload = {{"labels", std::vector<std::string>(distinct.begin(), distinct.end())}};
  auto total = [&](const json& v) -> std::optional<std::string> {
    const auto& m = v.at("mapping");
    for (const auto& l : distinct)
      if (!m.contains(l)) return "mapping is not total: missing '" + l + "'";
    return std::nullopt;
  };
  auto out = gw.complete(prompts::make_request(PromptKind::domain_merge, payload), total);
  for (const auto& l : distinct) {
    auto u = out.value["mapping"][l].get<std::string>();
    c.raw_to_unified[l] = u;
    c.unified_set.insert(u);
  }
  return c;
}

inline PaperSummary summarize_paper(Gateway& gw, const PaperRecord& record,
                                    const std::string& domain_raw,
                                    const DomainConsolidation& consolidation) {
  validate(record);
  const auto& unified = consolidation.unify(domain_raw);
  auto out = gw.complete(prompts::make_request(PromptKind::summarize,
                                               detail::paper_payload(record)));
  PaperSummary s;
  s.paper_id = record.paper_id;
  s.domain_raw = domain_raw;
  s.domain_unified = unified;
  s.background = out.value["background"].get<std::string>();
  s.problem = out.value["problem"].get<std::string>();
  s.design = out.value["design"].get<std::string>();
  return s;
}

struct SummarizationResult {
  std::vector<std::string> raw_labels;  // aligned with input records
  DomainConsolidation consolidation;
  std::vector<PaperSummary> summaries;
};

// Label fan-out, then a global consolidation barrier, then summary fan-out.
inline SummarizationResult summarize_corpus(Gateway& gw, const std::vector<PaperRecord>& records) {
  SummarizationResult res;
  if (records.empty()) return res;
  auto workers = static_cast<std::size_t>(gw.config().max_in_flight);
  res.raw_labels = parallel_map<std::string>(
      records.size(), workers, [&](std::size_t i) { return extract_domain_label(gw, records[i]); });
  res.consolidation = consolidate_domains(gw, res.raw_labels);
  res.summaries = parallel_map<PaperSummary>(records.size(), workers, [&](std::size_t i) {
    return summarize_paper(gw, records[i], res.raw_labels[i], res.consolidation);
  });
  return res;
}

// --- references ----------------------------------------------------------

// URLs, RFCs, standards documents, and entries without a year token are
// not articles.
inline bool is_non_article(const std::string& ref_text) {
  static const std::regex url(R"((https?://|www\.))", std::regex::icase);
  static const std::regex rfc(R"(\bRFC\s*-?\s*\d+)", std::regex::icase);
  static const std::regex standard(
      R"((\bIEEE\s+Std\b|\bISO/IEC\b|\b802\.\d+|\bInternet-Draft\b|\bdraft-ietf-|\bITU-T\b|\b3GPP\b))",
      std::regex::icase);
  static const std::regex year(R"(\b(19|20)\d{2}\b)");
  return std::regex_search(ref_text, url) || std::regex_search(ref_text, rfc) ||
         std::regex_search(ref_text, standard) || !std::regex_search(ref_text, year);
}

// Marks non-articles, then draws min(k, #articles) uniformly without
// replacement. Deterministic for a fixed (seed, paper_id).
inline std::vector<RawReference> filter_and_sample_references(const PaperRecord& record,
                                                              std::size_t k, std::uint64_t seed) {
  if (k == 0) throw PreconditionError("filter_and_sample_references: k must be positive");
  std::vector<RawReference> articles;
  std::set<std::string> seen;
  for (auto ref : record.references) {
    ref.is_article = !is_non_article(ref.ref_text);
    if (!ref.is_article) continue;
    // Repeated entries in one bibliography would collapse into one edge.
    if (!seen.insert(ref.lookup_key()).second) continue;
    articles.push_back(std::move(ref));
  }
  if (articles.size() <= k) return articles;
  std::mt19937_64 rng(text::mix_seed(seed, "refs:" + record.paper_id));
  std::vector<RawReference> sample;
  sample.reserve(k);
  std::sample(articles.begin(), articles.end(), std::back_inserter(sample), k, rng);
  return sample;
}

struct ReferenceMethod {
  std::string method_name;
  std::string summary;
};

// Returns nullopt (and warns) when the reference has no abstract.
inline std::optional<ReferenceMethod> summarize_reference_method(Gateway& gw, RawReference& ref,
                                                                 const std::string& title = {},
                                                                 std::ostream* warn = &std::cerr) {
  if (!ref.abstract || ref.abstract->empty()) {
    if (warn) *warn << "warning: reference without abstract skipped: " << ref.ref_text << "\n";
    return std::nullopt;
  }
  json payload = {{"key", ref.lookup_key()}, {"title", title.empty() ? ref.ref_text : title},
                  {"abstract", *ref.abstract}};
  auto out = gw.complete(prompts::make_request(PromptKind::ref_method, payload));
  ReferenceMethod m{out.value["method_name"].get<std::string>(),
                    out.value["summary"].get<std::string>()};
  ref.method_summary = m.summary;
  return m;
}

// Resolved reference: sampled, looked up, and method-summarized.
struct ResolvedReference {
  std::string src_paper_id;
  RawReference ref;
  std::string title;
  std::string method_name;

  json to_json() const {
    auto j = ideagraph::to_json(ref);
    j["src"] = src_paper_id;
    j["title"] = title;
    j["method_name"] = method_name;
    return j;
  }
  static ResolvedReference from_json(const json& j) {
    return {j.at("src").get<std::string>(), reference_from_json(j), j.at("title").get<std::string>(),
            j.at("method_name").get<std::string>()};
  }
};

inline std::vector<ResolvedReference> resolve_references(Gateway& gw, const PaperRecord& record,
                                                         const ReferenceClient& client,
                                                         std::size_t k, std::uint64_t seed,
                                                         std::ostream* warn = &std::cerr) {
  std::vector<ResolvedReference> out;
  for (auto& ref : filter_and_sample_references(record, k, seed)) {
    std::string title = ref.ref_text;
    if (!ref.abstract) {
      if (auto meta = client.lookup(ref.lookup_key())) {
        if (!meta->abstract.empty()) ref.abstract = meta->abstract;
        if (!meta->title.empty()) title = meta->title;
      }
    }
    auto m = summarize_reference_method(gw, ref, title, warn);
    if (!m) continue;
    out.push_back({record.paper_id, ref, title, m->method_name});
  }
  return out;
}

// Draws n distinct corpus papers other than the source and other than
// papers it already cites (matched by canonical title).
inline std::vector<CitationLink> inject_synthetic_links(
    const PaperRecord& record, const CorpusStore& corpus, std::size_t n, std::uint64_t seed,
    const std::set<std::string>& cited_titles = {}) {
  if (n == 0) return {};
  if (corpus.size() < n + 1)
    throw PreconditionError("inject_synthetic_links: corpus needs at least " +
                            std::to_string(n + 1) + " papers, has " +
                            std::to_string(corpus.size()));
  std::vector<std::string> pool;
  for (const auto& [id, r] : corpus.records()) {
    if (id == record.paper_id) continue;
    if (cited_titles.count(text::canonicalize(r.title))) continue;
    pool.push_back(id);
  }
  if (pool.size() < n)
    throw PreconditionError("inject_synthetic_links: only " + std::to_string(pool.size()) +
                            " eligible targets for " + record.paper_id + ", need " +
                            std::to_string(n));
  std::mt19937_64 rng(text::mix_seed(seed, "links:" + record.paper_id));
  std::vector<std::string> picked;
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), n, rng);
  std::vector<CitationLink> links;
  for (auto& id : picked) links.push_back({record.paper_id, std::move(id), true, {}});
  return links;
}

}  // namespace ideagraph
