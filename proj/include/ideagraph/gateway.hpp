#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ideagraph/error.hpp"
#include "ideagraph/text.hpp"

namespace ideagraph {

enum class PromptKind {
  domain_label,
  domain_merge,
  summarize,
  extract_entities,
  ref_method,
  report,
  map_score,
  reduce_synthesize,
  candidates,
  suggest,
  refine,
  maturity,
};

inline const char* to_string(PromptKind k) {
  switch (k) {
    case PromptKind::domain_label: return "domain_label";
    case PromptKind::domain_merge: return "domain_merge";
    case PromptKind::summarize: return "summarize";
    case PromptKind::extract_entities: return "extract_entities";
    case PromptKind::ref_method: return "ref_method";
    case PromptKind::report: return "report";
    case PromptKind::map_score: return "map_score";
    case PromptKind::reduce_synthesize: return "reduce_synthesize";
    case PromptKind::candidates: return "candidates";
    case PromptKind::suggest: return "suggest";
    case PromptKind::refine: return "refine";
    case PromptKind::maturity: return "maturity";
  }
  return "?";
}

// A chat request. `payload` carries the structured fields rendered into
// prompt_text; the mock backend reads them directly.
struct ChatRequest {
  PromptKind prompt_kind{};
  std::string prompt_text;
  std::string schema_id;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  json payload = json::object();
};

struct StructuredRecord {
  json value;
  int retries = 0;
};

// --- schemas -------------------------------------------------------------

namespace schema {

using Validator = std::function<std::optional<std::string>(const json&)>;

namespace detail {

inline std::optional<std::string> need_string(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) return std::string("missing field '") + key + "'";
  if (!j[key].is_string() || j[key].get<std::string>().empty())
    return std::string("field '") + key + "' must be a non-empty string";
  return std::nullopt;
}

inline std::optional<std::string> need_string_list(const json& j, const char* key,
                                                   std::size_t min_size) {
  if (!j.is_object() || !j.contains(key)) return std::string("missing field '") + key + "'";
  const auto& a = j[key];
  if (!a.is_array()) return std::string("field '") + key + "' must be an array";
  if (a.size() < min_size)
    return std::string("field '") + key + "' needs at least " + std::to_string(min_size) +
           " entries";
  for (const auto& e : a)
    if (!e.is_string() || e.get<std::string>().empty())
      return std::string("field '") + key + "' must contain non-empty strings";
  return std::nullopt;
}

template <typename... Checks>
std::optional<std::string> first_error(Checks&&... checks) {
  std::optional<std::string> err;
  ((err = err ? err : checks()), ...);
  return err;
}

}  // namespace detail

inline const std::map<std::string, Validator>& registry() {
  using detail::first_error;
  using detail::need_string;
  using detail::need_string_list;
  static const std::map<std::string, Validator> reg = {
      {"domain_label", [](const json& j) { return need_string(j, "label"); }},
      {"domain_merge",
       [](const json& j) -> std::optional<std::string> {
         if (!j.is_object() || !j.contains("mapping") || !j["mapping"].is_object())
           return "missing object field 'mapping'";
         for (const auto& [k, v] : j["mapping"].items())
           if (!v.is_string() || v.get<std::string>().empty())
             return "mapping for '" + k + "' must be a non-empty string";
         return std::nullopt;
       }},
      {"summary",
       [](const json& j) {
         return first_error([&] { return need_string(j, "background"); },
                            [&] { return need_string(j, "problem"); },
                            [&] { return need_string(j, "design"); });
       }},
      {"entities",
       [](const json& j) {
         return first_error([&] { return need_string_list(j, "problems", 1); },
                            [&] { return need_string_list(j, "methods", 1); });
       }},
      {"ref_method",
       [](const json& j) {
         return first_error([&] { return need_string(j, "method_name"); },
                            [&] { return need_string(j, "summary"); });
       }},
      {"report",
       [](const json& j) {
         return first_error([&] { return need_string(j, "title"); },
                            [&] { return need_string(j, "summary"); });
       }},
      {"map_score",
       [](const json& j) -> std::optional<std::string> {
         if (!j.is_object() || !j.contains("findings") || !j["findings"].is_array())
           return "missing array field 'findings'";
         for (const auto& f : j["findings"]) {
           if (auto e = need_string(f, "method_name")) return e;
           if (!f.contains("score") || !f["score"].is_number()) return "finding without score";
           double s = f["score"].get<double>();
           if (s < 0 || s > 100) return "finding score outside [0, 100]";
         }
         return std::nullopt;
       }},
      {"reduce",
       [](const json& j) -> std::optional<std::string> {
         if (!j.is_object() || !j.contains("methods") || !j["methods"].is_array())
           return "missing array field 'methods'";
         for (const auto& m : j["methods"]) {
           if (auto e = need_string(m, "method_name")) return e;
           if (auto e = need_string(m, "orientation")) return e;
           if (!m.contains("relevance") || !m["relevance"].is_number())
             return "method without relevance";
         }
         return std::nullopt;
       }},
      {"idea",
       [](const json& j) {
         return first_error([&] { return need_string(j, "title"); },
                            [&] { return need_string(j, "design"); },
                            [&] { return need_string_list(j, "tasks", 1); },
                            [&] { return need_string_list(j, "challenges", 1); },
                            [&] { return need_string(j, "reasoning"); });
       }},
      {"suggestions",
       [](const json& j) -> std::optional<std::string> {
         if (!j.is_object() || !j.contains("suggestions") || !j["suggestions"].is_array() ||
             j["suggestions"].empty())
           return "need a non-empty 'suggestions' array";
         for (const auto& s : j["suggestions"]) {
           if (auto e = need_string(s, "text")) return e;
           if (!s.contains("challenge_index") || !s["challenge_index"].is_number_integer())
             return "suggestion without integer challenge_index";
         }
         return std::nullopt;
       }},
      {"refined_idea",
       [](const json& j) {
         return first_error([&] { return need_string(j, "design"); },
                            [&] { return need_string_list(j, "challenges", 0); });
       }},
      {"maturity",
       [](const json& j) -> std::optional<std::string> {
         if (!j.is_object() || !j.contains("verdict") || !j["verdict"].is_boolean())
           return "missing boolean field 'verdict'";
         return need_string(j, "rationale");
       }},
  };
  return reg;
}

inline bool registered(const std::string& id) { return registry().count(id) > 0; }

inline std::optional<std::string> validate(const std::string& id, const json& value) {
  auto it = registry().find(id);
  if (it == registry().end()) return "unknown schema '" + id + "'";
  return it->second(value);
}

}  // namespace schema

// --- embeddings ----------------------------------------------------------

class EmbeddingVector {
 public:
  EmbeddingVector(std::vector<double> values, std::string source_text_hash = {})
      : values_(std::move(values)), hash_(std::move(source_text_hash)) {
    if (values_.empty()) throw ContractError("embedding vector must have positive dimension");
    double sq = 0;
    for (double v : values_) sq += v * v;
    norm_ = std::sqrt(sq);
    if (!(norm_ > 0)) throw ContractError("embedding vector has zero norm");
  }

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double norm() const { return norm_; }
  const std::string& source_text_hash() const { return hash_; }

  EmbeddingVector scaled(double c) const {
    std::vector<double> v = values_;
    for (auto& x : v) x *= c;
    return EmbeddingVector(std::move(v), hash_);
  }

  friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  std::string hash_;
  double norm_ = 0;
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw ContractError("cosine_similarity: dimension mismatch " + std::to_string(a.dim()) +
                        " vs " + std::to_string(b.dim()));
  double dot = 0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
  double c = dot / (a.norm() * b.norm());
  return std::clamp(c, -1.0, 1.0);
}

// --- backends ------------------------------------------------------------

enum class BackendKind { live, mock };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url;
  std::string model;
  std::string auth_token_env = "IDEAGRAPH_API_TOKEN";
  int max_in_flight = 4;
  int max_retries = 2;
  int embed_dim = 32;
  std::string fixtures_path;  // mock only

  void validate() const {
    if (kind == BackendKind::live && base_url.empty())
      throw ValidationError("live backend requires base_url");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be positive");
    if (max_retries < 0) throw ValidationError("max_retries must be non-negative");
    if (embed_dim < 1) throw ValidationError("embed_dim must be positive");
  }

  std::string label() const {
    if (kind == BackendKind::mock) return "mock";
    return model.empty() ? std::string("live") : model;
  }
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Raw text response for one attempt. Transport failures throw BackendError.
  virtual std::string chat(const ChatRequest& request) = 0;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
  virtual bool deterministic() const { return false; }
};

// --- gateway -------------------------------------------------------------

struct TranscriptEntry {
  std::string prompt_kind;
  std::string schema_id;
  std::string request_digest;
  std::string response_digest;
  int attempt = 0;
  bool ok = false;
  std::string error;
  long latency_ms = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;

  json to_json(bool with_timing) const {
    json j = {{"prompt_kind", prompt_kind},   {"schema_id", schema_id},
              {"request", request_digest},    {"response", response_digest},
              {"attempt", attempt},           {"ok", ok}};
    if (!error.empty()) j["error"] = error;
    if (with_timing) {
      j["latency_ms"] = latency_ms;
      j["prompt_tokens"] = prompt_tokens;
      j["completion_tokens"] = completion_tokens;
    }
    return j;
  }
};

inline constexpr const char* kRepairInstruction =
    "\n\nYour previous answer did not match the required JSON schema ({schema}): {error}. "
    "Reply again with a single JSON object that satisfies the schema.";

// Single choke point for completion and embedding calls. Thread-safe.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, BackendConfig config)
      : backend_(std::move(backend)), config_(std::move(config)),
        slots_(config_.max_in_flight) {
    config_.validate();
    if (!backend_) throw PreconditionError("gateway needs a backend");
  }

  const BackendConfig& config() const { return config_; }
  Backend& backend() { return *backend_; }

  // `extra` runs after schema validation for checks the schema cannot
  // express (e.g. totality of a mapping); its failures are repaired the
  // same way.
  StructuredRecord complete(const ChatRequest& request, const schema::Validator& extra = {}) {
    if (request.prompt_text.empty()) throw PreconditionError("complete: prompt_text is empty");
    if (!schema::registered(request.schema_id))
      throw PreconditionError("complete: unknown schema '" + request.schema_id + "'");

    const std::string request_digest =
        text::sha256_hex(std::string(to_string(request.prompt_kind)) + '\x1f' +
                         request.prompt_text + '\x1f' + request.payload.dump());
    ChatRequest attempt_request = request;
    std::string last_raw;
    std::string last_error;
    bool last_was_transport = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      TranscriptEntry entry;
      entry.prompt_kind = to_string(request.prompt_kind);
      entry.schema_id = request.schema_id;
      entry.request_digest = request_digest;
      entry.attempt = attempt;
      auto start = std::chrono::steady_clock::now();
      std::string raw;
      try {
        InFlight slot(*this);
        raw = backend_->chat(attempt_request);
      } catch (const BackendError& e) {
        entry.error = e.what();
        entry.latency_ms = elapsed_ms(start);
        record(std::move(entry));
        last_error = e.what();
        last_was_transport = true;
        continue;
      }
      entry.latency_ms = elapsed_ms(start);
      entry.response_digest = text::sha256_hex(raw);
      entry.prompt_tokens = static_cast<long>(attempt_request.prompt_text.size() / 4);
      entry.completion_tokens = static_cast<long>(raw.size() / 4);
      last_raw = raw;
      last_was_transport = false;

      std::optional<std::string> violation;
      json value;
      try {
        value = json::parse(raw);
        violation = schema::validate(request.schema_id, value);
        if (!violation && extra) violation = extra(value);
      } catch (const json::parse_error& e) {
        violation = std::string("not valid JSON: ") + e.what();
      }
      if (!violation) {
        entry.ok = true;
        record(std::move(entry));
        return {std::move(value), attempt};
      }
      entry.error = *violation;
      record(std::move(entry));
      last_error = *violation;
      attempt_request.prompt_text = request.prompt_text + repair_note(request.schema_id, *violation);
      attempt_request.payload["repair"] = *violation;
    }
    if (last_was_transport)
      throw BackendError(std::string("backend failed for ") + to_string(request.prompt_kind) +
                         " after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
    throw StructuredOutputError(std::string("structured output for ") +
                                    to_string(request.prompt_kind) + " violates schema '" +
                                    request.schema_id + "' after " +
                                    std::to_string(config_.max_retries) + " repairs: " + last_error,
                                last_raw);
  }

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) {
    for (std::size_t i = 0; i < texts.size(); ++i)
      if (texts[i].empty())
        throw PreconditionError("embed_batch: empty text at index " + std::to_string(i));
    if (texts.empty()) return {};
    std::vector<std::vector<double>> raw;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      try {
        InFlight slot(*this);
        raw = backend_->embed(texts);
        last_error.clear();
        break;
      } catch (const BackendError& e) {
        last_error = e.what();
      }
    }
    if (!last_error.empty()) throw BackendError("embedding failed: " + last_error);
    if (raw.size() != texts.size())
      throw BackendError("embedding backend returned " + std::to_string(raw.size()) +
                         " vectors for " + std::to_string(texts.size()) + " texts");
    std::vector<EmbeddingVector> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
      out.emplace_back(std::move(raw[i]), text::sha256_hex(texts[i]));
    {
      std::lock_guard lock(log_mu_);
      if (dim_ == 0) dim_ = out.front().dim();
      for (const auto& v : out)
        if (v.dim() != dim_) throw BackendError("embedding dimension changed within run");
      ++embed_calls_;
      embedded_texts_ += texts.size();
    }
    return out;
  }

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) {
    return embed_batch(std::span<const std::string>(texts));
  }

  std::vector<TranscriptEntry> transcript() const {
    std::lock_guard lock(log_mu_);
    return transcript_;
  }

  // Canonical ordering so that concurrent fan-out does not perturb the bytes.
  std::string transcript_jsonl() const {
    auto entries = transcript();
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return std::tie(a.prompt_kind, a.request_digest, a.attempt) <
             std::tie(b.prompt_kind, b.request_digest, b.attempt);
    });
    bool timing = !backend_->deterministic();
    std::string out;
    for (const auto& e : entries) out += e.to_json(timing).dump() + "\n";
    return out;
  }

  std::size_t call_count() const {
    std::lock_guard lock(log_mu_);
    return transcript_.size();
  }
  std::size_t embed_calls() const {
    std::lock_guard lock(log_mu_);
    return embed_calls_;
  }
  int peak_in_flight() const { return peak_in_flight_.load(); }

  std::string repair_note(const std::string& schema_id, const std::string& error) const {
    std::string note = kRepairInstruction;
    auto replace = [&](const std::string& key, const std::string& val) {
      auto pos = note.find(key);
      if (pos != std::string::npos) note.replace(pos, key.size(), val);
    };
    replace("{schema}", schema_id);
    replace("{error}", error);
    return note;
  }

 private:
  struct InFlight {
    explicit InFlight(Gateway& g) : g_(g) {
      g_.slots_.acquire();
      int now = ++g_.in_flight_;
      int peak = g_.peak_in_flight_.load();
      while (now > peak && !g_.peak_in_flight_.compare_exchange_weak(peak, now)) {
      }
    }
    ~InFlight() {
      --g_.in_flight_;
      g_.slots_.release();
    }
    Gateway& g_;
  };

  static long elapsed_ms(std::chrono::steady_clock::time_point start) {
    return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count());
  }

  void record(TranscriptEntry e) {
    std::lock_guard lock(log_mu_);
    transcript_.push_back(std::move(e));
  }

  std::shared_ptr<Backend> backend_;
  BackendConfig config_;
  std::counting_semaphore<> slots_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
  mutable std::mutex log_mu_;
  std::vector<TranscriptEntry> transcript_;
  std::size_t embed_calls_ = 0;
  std::size_t embedded_texts_ = 0;
  std::size_t dim_ = 0;
};

}  // namespace ideagraph
