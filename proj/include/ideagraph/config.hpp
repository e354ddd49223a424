#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "ideagraph/gateway.hpp"
#include "ideagraph/text.hpp"

namespace ideagraph {

inline json to_json(const BackendConfig& c) {
  return {{"kind", c.kind == BackendKind::live ? "live" : "mock"},
          {"base_url", c.base_url},
          {"model", c.model},
          {"auth_token_env", c.auth_token_env},
          {"max_in_flight", c.max_in_flight},
          {"max_retries", c.max_retries},
          {"embed_dim", c.embed_dim},
          {"fixtures_path", c.fixtures_path}};
}

inline BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "live") return BackendKind::live;
  if (s == "mock") return BackendKind::mock;
  throw ValidationError("backend kind must be live or mock, got '" + s + "'");
}

namespace detail {
inline void reject_unknown_keys(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be an object");
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ValidationError(std::string("unknown ") + what + " key '" + k + "'");
}
}  // namespace detail

inline BackendConfig backend_config_from_json(const json& j) {
  detail::reject_unknown_keys(j,
                              {"kind", "base_url", "model", "auth_token_env", "max_in_flight",
                               "max_retries", "embed_dim", "fixtures_path"},
                              "backend");
  BackendConfig c;
  if (j.contains("kind")) c.kind = backend_kind_from_string(j["kind"].get<std::string>());
  c.base_url = j.value("base_url", c.base_url);
  c.model = j.value("model", c.model);
  c.auth_token_env = j.value("auth_token_env", c.auth_token_env);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.fixtures_path = j.value("fixtures_path", c.fixtures_path);
  return c;
}

struct RunConfig {
  std::string corpus_path;
  int boundary_year = 2024;
  std::uint64_t seed = 0;
  int k_candidates = 20;
  double threshold_t = 0.8;
  int max_iterations = 10;
  int ref_sample_k = 20;
  int synthetic_links_n = 5;
  BackendConfig backend;
  std::string output_dir = "out";
  std::string refs_db_path;
  double merge_threshold = 0.95;
  double community_resolution = 1.0;
  int finding_budget = 50;
  int hop_budget = 2;

  void validate() const {
    auto need = [](bool ok, const std::string& msg) {
      if (!ok) throw ValidationError(msg);
    };
    need(boundary_year >= 1900 && boundary_year <= 2100, "boundary_year must be in [1900, 2100]");
    need(k_candidates >= 1 && k_candidates <= 1000, "k_candidates must be in [1, 1000]");
    need(threshold_t >= -1.0 && threshold_t <= 1.0, "threshold_t must be in [-1, 1]");
    need(max_iterations >= 0 && max_iterations <= 1000, "max_iterations must be in [0, 1000]");
    need(ref_sample_k >= 1 && ref_sample_k <= 10000, "ref_sample_k must be in [1, 10000]");
    need(synthetic_links_n >= 0 && synthetic_links_n <= 10000, "synthetic_links_n must be in [0, 10000]");
    need(merge_threshold > 0.0 && merge_threshold <= 1.0, "merge_threshold must be in (0, 1]");
    need(community_resolution > 0.0, "community_resolution must be positive");
    need(finding_budget >= 1, "finding_budget must be positive");
    need(hop_budget >= 1, "hop_budget must be positive");
    need(!output_dir.empty(), "output_dir must be set");
    backend.validate();
  }

  json to_json() const {
    return {{"corpus_path", corpus_path},
            {"boundary_year", boundary_year},
            {"seed", seed},
            {"k_candidates", k_candidates},
            {"threshold_t", threshold_t},
            {"max_iterations", max_iterations},
            {"ref_sample_k", ref_sample_k},
            {"synthetic_links_n", synthetic_links_n},
            {"backend", ideagraph::to_json(backend)},
            {"output_dir", output_dir},
            {"refs_db_path", refs_db_path},
            {"merge_threshold", merge_threshold},
            {"community_resolution", community_resolution},
            {"finding_budget", finding_budget},
            {"hop_budget", hop_budget}};
  }

  // Missing keys keep their current value; unknown keys are rejected so a
  // stray credential field never slips into a config file unnoticed.
  void merge_json(const json& j) {
    detail::reject_unknown_keys(
        j,
        {"corpus_path", "boundary_year", "seed", "k_candidates", "threshold_t", "max_iterations",
         "ref_sample_k", "synthetic_links_n", "backend", "output_dir", "refs_db_path",
         "merge_threshold", "community_resolution", "finding_budget", "hop_budget"},
        "config");
    try {
      corpus_path = j.value("corpus_path", corpus_path);
      boundary_year = j.value("boundary_year", boundary_year);
      seed = j.value("seed", seed);
      k_candidates = j.value("k_candidates", k_candidates);
      threshold_t = j.value("threshold_t", threshold_t);
      max_iterations = j.value("max_iterations", max_iterations);
      ref_sample_k = j.value("ref_sample_k", ref_sample_k);
      synthetic_links_n = j.value("synthetic_links_n", synthetic_links_n);
      if (j.contains("backend")) backend = backend_config_from_json(j["backend"]);
      output_dir = j.value("output_dir", output_dir);
      refs_db_path = j.value("refs_db_path", refs_db_path);
      merge_threshold = j.value("merge_threshold", merge_threshold);
      community_resolution = j.value("community_resolution", community_resolution);
      finding_budget = j.value("finding_budget", finding_budget);
      hop_budget = j.value("hop_budget", hop_budget);
    } catch (const json::type_error& e) {
      throw ValidationError(std::string("config has a field of the wrong type: ") + e.what());
    }
  }

  static RunConfig from_json(const json& j) {
    RunConfig c;
    c.merge_json(j);
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    json j;
    try {
      j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
      throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
  }

  void save(const std::filesystem::path& path) const { io::write_file(path, to_json().dump(2) + "\n"); }

  friend bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_json() == b.to_json(); }
};

}  // namespace ideagraph
