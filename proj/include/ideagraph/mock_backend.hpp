#pragma once

#include <cmath>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ideagraph/gateway.hpp"
#include "ideagraph/text.hpp"

namespace ideagraph {

class MockFixtureError : public BackendError {
 public:
  using BackendError::BackendError;
};

enum class FaultKind { malformed, transport, drop_field };

// Deterministic backend. Content-bearing calls (labels, summaries,
// entities, reference methods) are answered from a fixture table keyed by
// the salient payload id and fail loudly on unknown keys; derived calls
// (reports, map/reduce, ideas, refinement) are computed from the payload.
class MockBackend : public Backend {
 public:
  explicit MockBackend(json fixtures = json::object(), std::uint64_t seed = 0, int embed_dim = 32)
      : fixtures_(std::move(fixtures)), seed_(seed), dim_(embed_dim) {}

  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path, std::uint64_t seed,
                                                int embed_dim = 32) {
    return std::make_shared<MockBackend>(json::parse(io::read_file(path)), seed, embed_dim);
  }

  bool deterministic() const override { return true; }

  // The next `count` calls of `kind` misbehave.
  void inject_fault(PromptKind kind, FaultKind fault, int count = 1, std::string field = {}) {
    std::lock_guard lock(mu_);
    for (int i = 0; i < count; ++i) faults_[kind].push_back({fault, field});
  }

  // Maturity verdicts consumed in call order before the fixture rules apply.
  void script_verdicts(std::vector<bool> verdicts) {
    std::lock_guard lock(mu_);
    verdicts_.assign(verdicts.begin(), verdicts.end());
  }

  // Forces every finding of a community's report to this score.
  void script_map_score(std::string community_id, double score) {
    std::lock_guard lock(mu_);
    map_scores_[std::move(community_id)] = score;
  }

  int calls(PromptKind kind) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(kind);
    return it == calls_.end() ? 0 : it->second;
  }

  std::string chat(const ChatRequest& req) override {
    std::optional<std::pair<FaultKind, std::string>> fault;
    {
      std::lock_guard lock(mu_);
      ++calls_[req.prompt_kind];
      auto& q = faults_[req.prompt_kind];
      if (!q.empty()) {
        fault = q.front();
        q.pop_front();
      }
    }
    if (fault && fault->first == FaultKind::transport)
      throw BackendError(std::string("mock transport failure on ") + to_string(req.prompt_kind));
    if (fault && fault->first == FaultKind::malformed) return "{\"oops\": ";
    json out = respond(req);
    if (fault && fault->first == FaultKind::drop_field) out.erase(fault->second);
    return out.dump();
  }

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  // Sum of per-token Gaussian vectors seeded by digest, normalized.
  std::vector<double> embed_one(const std::string& s) const {
    auto tokens = text::tokenize(s);
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    auto add = [&](const std::string& salt) {
      std::mt19937_64 rng(text::mix_seed(seed_, salt));
      std::normal_distribution<double> g(0.0, 1.0);
      for (auto& x : v) x += g(rng);
    };
    if (tokens.empty()) add("text:" + s);
    for (const auto& t : tokens) add("tok:" + t);
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
  }

 private:
  const json& table(const char* name) const {
    static const json empty = json::object();
    return fixtures_.contains(name) ? fixtures_[name] : empty;
  }

  const json& lookup(const char* name, const std::string& key) const {
    const auto& t = table(name);
    if (!t.contains(key))
      throw MockFixtureError(std::string("mock fixture missing: ") + name + "[" + key + "]");
    return t[key];
  }

  json respond(const ChatRequest& req) {
    const auto& p = req.payload;
    switch (req.prompt_kind) {
      case PromptKind::domain_label:
        return {{"label", lookup("domain_label", p.at("paper_id"))}};
      case PromptKind::domain_merge: {
        json mapping = json::object();
        const auto& t = table("domain_merge");
        for (const auto& l : p.at("labels")) {
          auto s = l.get<std::string>();
          mapping[s] = t.contains(s) ? t[s] : l;
        }
        return {{"mapping", mapping}};
      }
      case PromptKind::summarize:
        return lookup("summarize", p.at("paper_id"));
      case PromptKind::extract_entities:
        return lookup("extract_entities", p.at("paper_id"));
      case PromptKind::ref_method:
        return lookup("ref_method", p.at("key"));
      case PromptKind::report:
        return report(p);
      case PromptKind::map_score:
        return map_score(p);
      case PromptKind::reduce_synthesize:
        return reduce(p);
      case PromptKind::candidates:
        return candidate(p);
      case PromptKind::suggest:
        return suggest(p);
      case PromptKind::refine:
        return refine(p);
      case PromptKind::maturity:
        return maturity(p);
    }
    throw MockFixtureError("unhandled prompt kind");
  }

  static std::string join_names(const json& arr) {
    std::vector<std::string> v;
    for (const auto& x : arr) v.push_back(x.get<std::string>());
    return text::join(v, "; ");
  }

  // Summary lines: "Method: <name> | problems: a; b | domains: c | papers: d".
  static json report(const json& p) {
    std::string lead;
    std::string summary;
    for (const auto& m : p.at("methods")) {
      if (lead.empty()) lead = m["name"].get<std::string>();
      summary += "Method: " + m["name"].get<std::string>() + " | problems: " +
                 join_names(m["problems"]) + " | domains: " + join_names(m["domains"]) +
                 " | papers: " + join_names(m["papers"]) + "\n";
    }
    std::vector<std::string> members;
    for (const auto& m : p.at("members")) members.push_back(m["name"].get<std::string>());
    if (lead.empty() && !members.empty()) lead = members.front();
    summary += "Members: " + text::join(members, "; ");
    return {{"title", "Community " + p.at("community_id").get<std::string>() + ": " + lead},
            {"summary", summary}};
  }

  static std::map<std::string, std::string> query_fields(const std::string& q) {
    std::map<std::string, std::string> out;
    std::size_t start = 0;
    while (start <= q.size()) {
      auto end = q.find('\n', start);
      auto line = q.substr(start, end == std::string::npos ? std::string::npos : end - start);
      auto colon = line.find(": ");
      if (colon != std::string::npos) out[line.substr(0, colon)] = line.substr(colon + 2);
      if (end == std::string::npos) break;
      start = end + 1;
    }
    return out;
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
      auto end = s.find("; ", start);
      auto item = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (!item.empty()) out.push_back(item);
      if (end == std::string::npos) break;
      start = end + 2;
    }
    return out;
  }

  static double jaccard(const std::string& a, const std::string& b) {
    auto ta = text::tokenize(a), tb = text::tokenize(b);
    std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
    if (sa.empty() || sb.empty()) return 0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
  }

  // Paper-graph lines score 100 when the queried problem is among the
  // method's problems and 0 otherwise; lines without problems score by
  // token overlap with the queried method.
  json map_score(const json& p) const {
    auto q = query_fields(p.at("query").get<std::string>());
    const auto& rep = p.at("report");
    std::optional<double> forced;
    {
      std::lock_guard lock(mu_);
      auto it = map_scores_.find(rep.at("community_id").get<std::string>());
      if (it != map_scores_.end()) forced = it->second;
    }
    json findings = json::array();
    auto summary = rep.at("summary").get<std::string>();
    std::size_t start = 0;
    while (start < summary.size()) {
      auto end = summary.find('\n', start);
      auto line = summary.substr(start, end == std::string::npos ? std::string::npos : end - start);
      start = end == std::string::npos ? summary.size() : end + 1;
      if (line.rfind("Method: ", 0) != 0) continue;
      std::map<std::string, std::string> f;
      std::size_t s = 0;
      while (s < line.size()) {
        auto e = line.find(" | ", s);
        auto part = line.substr(s, e == std::string::npos ? std::string::npos : e - s);
        auto c = part.find(": ");
        if (c != std::string::npos) f[part.substr(0, c)] = part.substr(c + 2);
        if (e == std::string::npos) break;
        s = e + 3;
      }
      auto name = f["Method"];
      auto problems = split_list(f["problems"]);
      double score = 0;
      if (forced) {
        score = *forced;
      } else if (!problems.empty()) {
        if (q.count("Problem")) {
          auto want = text::canonicalize(q["Problem"]);
          for (const auto& pr : problems)
            if (text::canonicalize(pr) == want) score = 100;
        }
      } else if (q.count("Method")) {
        score = std::round(100.0 * jaccard(q["Method"], name));
      }
      findings.push_back({{"method_name", name}, {"description", line}, {"score", score}});
    }
    return {{"findings", findings}};
  }

  static std::string orientation_for(const std::string& name) {
    auto c = text::canonicalize(name);
    auto has = [&](const char* w) { return c.find(w) != std::string::npos; };
    if (has("partition") || has("modular") || has("compositional") || has("decompos"))
      return "Decomposition and Modular Verification";
    if (has("learn") || has("gnn") || has("neural") || has("reinforcement") || has("contrastive"))
      return "Learning-Based Modeling";
    if (has("incremental")) return "Incremental Analysis";
    if (has("feedback") || has("rate") || has("delay")) return "Control and Feedback";
    return "General Techniques";
  }

  static json reduce(const json& p) {
    json methods = json::array();
    std::set<std::string> seen;
    for (const auto& f : p.at("findings")) {
      auto name = f["method_name"].get<std::string>();
      if (!seen.insert(text::canonicalize(name)).second) continue;
      methods.push_back({{"method_name", name},
                         {"orientation", orientation_for(name)},
                         {"relevance", f["score"]}});
    }
    return {{"methods", methods}};
  }

  json candidate(const json& p) const {
    auto problem = p.at("brief").at("problem").get<std::string>();
    auto domain = p.at("brief").at("domain").get<std::string>();
    auto i = p.at("index").get<std::size_t>();
    const auto& fixed = table("candidates");
    auto key = text::canonicalize(problem);
    if (!p.value("baseline", false) && fixed.contains(key) && i < fixed[key].size()) return fixed[key][i];

    const auto& ex = p.at("existing_methods");
    const auto& insp = p.at("inspirational_methods");
    json idea;
    if (ex.empty()) {
      idea["title"] = "Direct approach " + std::to_string(i + 1) + " to " + problem;
      idea["design"] = "A standalone design for " + problem + " in " + domain +
                       " that tunes existing " + domain + " mechanisms, variant " +
                       std::to_string(i + 1) + ".";
    } else {
      const auto& e = ex[i % ex.size()];
      auto e_name = e["method_name"].get<std::string>();
      auto e_desc = e.value("description", std::string());
      std::string source =
          insp.empty() ? ex[(i / 3 + 1) % ex.size()]["method_name"].get<std::string>()
                       : insp[(i / 3) % insp.size()]["method_name"].get<std::string>();
      switch (i % 3) {
        case 0:
          idea["title"] = source + " for " + problem;
          idea["design"] = "Transfer " + source + " into " + domain + ": it drives " + problem +
                           " where " + e_name + " is used today, with a staged rollout.";
          break;
        case 1:
          idea["title"] = e_name;
          idea["design"] = (e_desc.empty() ? e_name : e_desc) + " Revisited with tighter engineering.";
          break;
        default:
          idea["title"] = "Combining " + e_name + " with " + source;
          idea["design"] = "Couple " + e_name + " and " + source + " so that each covers the " +
                           "other's blind spots in " + problem + ".";
          break;
      }
    }
    auto title = idea["title"].get<std::string>();
    idea["tasks"] = {"Characterize " + problem + " workloads", "Prototype " + title,
                     "Evaluate against current " + domain + " systems"};
    idea["challenges"] = {"Runtime overhead of " + title + " at scale",
                          "Correctness under frequent network changes"};
    idea["reasoning"] = "The design reuses mechanisms with working prototypes and targets a gap in " +
                        problem + ".";
    return idea;
  }

  json suggest(const json& p) const {
    const auto& fixed = table("suggest");
    auto key = text::canonicalize(p.at("title").get<std::string>());
    json out = json::array();
    if (fixed.contains(key)) {
      for (const auto& s : fixed[key]) out.push_back({{"challenge_index", 0}, {"text", s}});
      return {{"suggestions", out}};
    }
    const auto& ch = p.at("challenges");
    for (std::size_t j = 0; j < ch.size(); ++j)
      out.push_back({{"challenge_index", j},
                     {"text", "Address \"" + ch[j].get<std::string>() +
                                  "\" with event-driven incremental updates"}});
    return {{"suggestions", out}};
  }

  static json refine(const json& p) {
    auto iteration = p.at("iteration").get<std::size_t>() + 1;
    std::vector<std::string> texts;
    for (const auto& s : p.at("suggestions")) texts.push_back(s["text"].get<std::string>());
    auto design = p.at("design").get<std::string>() + " Revision " + std::to_string(iteration) +
                  ": " + text::join(texts, "; ") + ".";
    auto challenges = p.at("challenges").get<std::vector<std::string>>();
    static const std::string kDone = " (mitigated)";
    auto done = [](const std::string& c) {
      return c.size() >= kDone.size() && c.compare(c.size() - kDone.size(), kDone.size(), kDone) == 0;
    };
    if (challenges.size() > 1)
      challenges.erase(challenges.begin());
    else if (!challenges.empty() && !done(challenges.front()))
      challenges.front() += kDone;
    return {{"design", design}, {"challenges", challenges}};
  }

  json maturity(const json& p) {
    {
      std::lock_guard lock(mu_);
      if (!verdicts_.empty()) {
        bool v = verdicts_.front();
        verdicts_.pop_front();
        return {{"verdict", v}, {"rationale", v ? "scripted: mature" : "scripted: not yet"}};
      }
    }
    const auto& fixed = table("maturity");
    auto key = text::canonicalize(p.at("title").get<std::string>());
    if (fixed.contains(key)) {
      bool v = fixed[key].get<bool>();
      return {{"verdict", v}, {"rationale", v ? "fixture: mature" : "fixture: draft"}};
    }
    bool all_done = !p.at("challenges").empty();
    for (const auto& c : p.at("challenges")) {
      auto s = c.get<std::string>();
      if (s.find("(mitigated)") == std::string::npos) all_done = false;
    }
    return {{"verdict", all_done},
            {"rationale", all_done ? "every challenge has a mitigation" : "open challenges remain"}};
  }

  json fixtures_;
  std::uint64_t seed_;
  int dim_;
  mutable std::mutex mu_;
  std::map<PromptKind, int> calls_;
  std::map<PromptKind, std::deque<std::pair<FaultKind, std::string>>> faults_;
  std::deque<bool> verdicts_;
  std::map<std::string, double> map_scores_;
};

}  // namespace ideagraph
