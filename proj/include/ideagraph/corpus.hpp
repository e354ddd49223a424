#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ideagraph/error.hpp"
#include "ideagraph/text.hpp"

namespace ideagraph {

struct RawReference {
  std::string ref_text;
  bool is_article = false;
  std::optional<std::string> external_id;
  std::optional<std::string> abstract;
  std::optional<std::string> method_summary;

  // Lookup key used by the reference-metadata client when no explicit id is set.
  std::string lookup_key() const {
    return external_id ? *external_id : text::canonicalize(ref_text);
  }

  friend bool operator==(const RawReference&, const RawReference&) = default;
};

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string venue;
  int year = 0;
  std::string abstract;
  std::string body_text;
  std::vector<RawReference> references;

  friend bool operator==(const PaperRecord&, const PaperRecord&) = default;
};

struct PaperSummary {
  std::string paper_id;
  std::string domain_raw;
  std::string domain_unified;
  std::string background;
  std::string problem;
  std::string design;

  bool complete() const { return !background.empty() && !problem.empty() && !design.empty(); }

  friend bool operator==(const PaperSummary&, const PaperSummary&) = default;
};

enum class PartitionTag { full, pre, post };

inline const char* to_string(PartitionTag t) {
  switch (t) {
    case PartitionTag::full: return "full";
    case PartitionTag::pre: return "pre";
    case PartitionTag::post: return "post";
  }
  return "?";
}

inline void validate(const PaperRecord& r) {
  if (r.paper_id.empty()) throw ValidationError("paper_id is empty");
  if (r.title.empty()) throw ValidationError("paper " + r.paper_id + ": title is empty");
  if (r.year < 1900 || r.year > 2100)
    throw ValidationError("paper " + r.paper_id + ": year " + std::to_string(r.year) +
                          " outside [1900, 2100]");
  for (const auto& ref : r.references) {
    bool has_payload = (ref.abstract && !ref.abstract->empty()) ||
                       (ref.method_summary && !ref.method_summary->empty());
    if (has_payload && !ref.is_article)
      throw ValidationError("paper " + r.paper_id + ": non-article reference carries abstract");
  }
}

// --- serialization -------------------------------------------------------

inline json to_json(const RawReference& r) {
  json j = {{"ref_text", r.ref_text}};
  if (r.is_article) j["is_article"] = true;
  if (r.external_id) j["external_id"] = *r.external_id;
  if (r.abstract) j["abstract"] = *r.abstract;
  if (r.method_summary) j["method_summary"] = *r.method_summary;
  return j;
}

inline RawReference reference_from_json(const json& j) {
  RawReference r;
  r.ref_text = j.at("ref_text").get<std::string>();
  r.is_article = j.value("is_article", false);
  if (j.contains("external_id")) r.external_id = j["external_id"].get<std::string>();
  if (j.contains("abstract")) r.abstract = j["abstract"].get<std::string>();
  if (j.contains("method_summary")) r.method_summary = j["method_summary"].get<std::string>();
  return r;
}

inline json to_json(const PaperRecord& r) {
  json refs = json::array();
  for (const auto& ref : r.references) refs.push_back(to_json(ref));
  return {{"paper_id", r.paper_id}, {"title", r.title},         {"venue", r.venue},
          {"year", r.year},         {"abstract", r.abstract},   {"body_text", r.body_text},
          {"references", refs}};
}

inline PaperRecord record_from_json(const json& j) {
  PaperRecord r;
  r.paper_id = j.at("paper_id").get<std::string>();
  r.title = j.at("title").get<std::string>();
  r.venue = j.value("venue", "");
  r.year = j.at("year").get<int>();
  r.abstract = j.value("abstract", "");
  r.body_text = j.value("body_text", "");
  if (j.contains("references"))
    for (const auto& ref : j.at("references")) r.references.push_back(reference_from_json(ref));
  return r;
}

inline json to_json(const PaperSummary& s) {
  return {{"paper_id", s.paper_id},     {"domain_raw", s.domain_raw},
          {"domain_unified", s.domain_unified}, {"background", s.background},
          {"problem", s.problem},       {"design", s.design}};
}

inline PaperSummary summary_from_json(const json& j) {
  PaperSummary s;
  s.paper_id = j.at("paper_id").get<std::string>();
  s.domain_raw = j.at("domain_raw").get<std::string>();
  s.domain_unified = j.at("domain_unified").get<std::string>();
  s.background = j.at("background").get<std::string>();
  s.problem = j.at("problem").get<std::string>();
  s.design = j.at("design").get<std::string>();
  return s;
}

// --- store ---------------------------------------------------------------

struct LoadReport {
  std::size_t lines_parsed = 0;
  std::vector<std::pair<std::size_t, std::string>> malformed;  // (line, reason)
  std::vector<std::string> warnings;
};

// Immutable after construction; safe to share across readers.
class CorpusStore {
 public:
  CorpusStore() = default;
  explicit CorpusStore(PartitionTag tag) : tag_(tag) {}

  PartitionTag partition_tag() const { return tag_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::map<std::string, PaperRecord>& records() const { return records_; }
  const std::map<std::string, PaperSummary>& summaries() const { return summaries_; }

  const PaperRecord& record(const std::string& id) const {
    auto it = records_.find(id);
    if (it == records_.end()) throw ValidationError("unknown paper_id " + id);
    return it->second;
  }
  const PaperSummary* summary(const std::string& id) const {
    auto it = summaries_.find(id);
    return it == summaries_.end() ? nullptr : &it->second;
  }

  std::vector<PaperSummary> summary_list() const {
    std::vector<PaperSummary> out;
    out.reserve(summaries_.size());
    for (const auto& [_, s] : summaries_) out.push_back(s);
    return out;
  }

  void add_record(PaperRecord r) {
    validate(r);
    auto id = r.paper_id;
    if (!records_.emplace(id, std::move(r)).second)
      throw ValidationError("duplicate paper_id " + id);
  }

  void add_summary(PaperSummary s) {
    if (!records_.count(s.paper_id))
      throw ValidationError("summary references unknown paper_id " + s.paper_id);
    auto id = s.paper_id;
    summaries_.insert_or_assign(id, std::move(s));
  }

  friend bool operator==(const CorpusStore& a, const CorpusStore& b) {
    return a.tag_ == b.tag_ && a.records_ == b.records_ && a.summaries_ == b.summaries_;
  }

 private:
  PartitionTag tag_ = PartitionTag::full;
  std::map<std::string, PaperRecord> records_;
  std::map<std::string, PaperSummary> summaries_;
};

struct LoadedCorpus {
  CorpusStore store;
  LoadReport report;
};

// Malformed lines are skipped and reported; duplicate ids are fatal.
inline LoadedCorpus load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("corpus file not found: " + path.string());
  LoadedCorpus out{CorpusStore(PartitionTag::full), {}};
  io::read_jsonl(
      path,
      [&](std::size_t n, const json& j) {
        PaperRecord r;
        try {
          r = record_from_json(j);
          validate(r);
        } catch (const json::exception& e) {
          out.report.malformed.emplace_back(n, e.what());
          return;
        } catch (const ValidationError& e) {
          out.report.malformed.emplace_back(n, e.what());
          return;
        }
        if (out.store.records().count(r.paper_id))
          throw ValidationError("duplicate paper_id " + r.paper_id + " at line " +
                                std::to_string(n));
        out.store.add_record(std::move(r));
        ++out.report.lines_parsed;
      },
      [&](std::size_t n, const std::string& msg) { out.report.malformed.emplace_back(n, msg); });
  if (out.store.empty()) out.report.warnings.push_back("corpus is empty: " + path.string());
  return out;
}

// Attaches summaries from a summary file. Unknown ids are fatal.
inline void load_summaries(CorpusStore& store, const std::filesystem::path& path) {
  for (const auto& j : io::read_jsonl(path)) store.add_summary(summary_from_json(j));
}

inline void save_corpus(const CorpusStore& store, const std::filesystem::path& path) {
  std::vector<json> rows;
  for (const auto& [_, r] : store.records()) rows.push_back(to_json(r));
  io::write_jsonl(path, rows);
}

inline void save_summaries(const CorpusStore& store, const std::filesystem::path& path) {
  std::vector<json> rows;
  for (const auto& [_, s] : store.summaries()) rows.push_back(to_json(s));
  io::write_jsonl(path, rows);
}

// Ties go to pre: year <= boundary.
inline std::pair<CorpusStore, CorpusStore> split_by_year(const CorpusStore& store,
                                                         int boundary_year) {
  if (store.partition_tag() != PartitionTag::full)
    throw PreconditionError("split_by_year expects a full store, got " +
                            std::string(to_string(store.partition_tag())));
  CorpusStore pre(PartitionTag::pre), post(PartitionTag::post);
  for (const auto& [id, r] : store.records()) {
    auto& dst = r.year <= boundary_year ? pre : post;
    dst.add_record(r);
    if (const auto* s = store.summary(id)) dst.add_summary(*s);
  }
  return {std::move(pre), std::move(post)};
}

// Wraps a post store so that every read is logged and reads are refused
// while generation is in progress.
class GuardedStore {
 public:
  explicit GuardedStore(std::shared_ptr<const CorpusStore> store) : store_(std::move(store)) {
    if (!store_ || store_->partition_tag() != PartitionTag::post)
      throw PreconditionError("guard_post_access expects a post store");
  }

  const CorpusStore& read(const std::string& call_site) const {
    std::lock_guard lock(mu_);
    if (!scoring_)
      throw ProtocolError("post-dataset read during generation phase at '" + call_site + "'");
    log_.push_back(call_site);
    return *store_;
  }

  void begin_scoring() {
    std::lock_guard lock(mu_);
    scoring_ = true;
  }
  bool scoring() const {
    std::lock_guard lock(mu_);
    return scoring_;
  }
  std::size_t read_count() const {
    std::lock_guard lock(mu_);
    return log_.size();
  }
  std::vector<std::string> read_log() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  std::shared_ptr<const CorpusStore> store_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> log_;
  bool scoring_ = false;
};

inline GuardedStore guard_post_access(CorpusStore store) {
  return GuardedStore(std::make_shared<const CorpusStore>(std::move(store)));
}

}  // namespace ideagraph
