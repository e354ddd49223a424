#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "ideagraph/pipeline.hpp"

namespace testing_support {

namespace fs = std::filesystem;
using namespace ideagraph;

inline fs::path toy_dir() { return IDEAGRAPH_TOY_DIR; }
inline fs::path toy_corpus() { return toy_dir() / "corpus.jsonl"; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("ideagraph-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline json toy_fixtures() { return json::parse(io::read_file(toy_dir() / "mock_fixtures.json")); }

inline BackendConfig mock_config(int max_in_flight = 4, int max_retries = 2) {
  BackendConfig c;
  c.kind = BackendKind::mock;
  c.max_in_flight = max_in_flight;
  c.max_retries = max_retries;
  return c;
}

struct MockRig {
  std::shared_ptr<MockBackend> backend;
  Gateway gateway;

  explicit MockRig(json fixtures = toy_fixtures(), std::uint64_t seed = 7, BackendConfig cfg = mock_config())
      : backend(std::make_shared<MockBackend>(std::move(fixtures), seed, cfg.embed_dim)),
        gateway(backend, cfg) {}
};

inline RunConfig toy_run_config(std::uint64_t seed = 7) {
  RunConfig c;
  c.corpus_path = toy_corpus().string();
  c.seed = seed;
  c.backend = mock_config();
  c.backend.fixtures_path = (toy_dir() / "mock_fixtures.json").string();
  c.refs_db_path = (toy_dir() / "ref_metadata.jsonl").string();
  return c;
}

inline CorpusStore toy_store() { return load_corpus(toy_corpus()).store; }

inline CorpusStore toy_store_summarized(Gateway& gw) {
  auto s = toy_store();
  summarize_store(gw, s);
  return s;
}

inline CorpusStore toy_pre(Gateway& gw) { return split_by_year(toy_store_summarized(gw), 2024).first; }

inline PaperRecord make_record(std::string id, int year = 2020, std::string title = {}) {
  PaperRecord r;
  r.paper_id = id;
  r.title = title.empty() ? "Paper " + id : title;
  r.venue = "Venue";
  r.year = year;
  r.abstract = "Abstract of " + id + ".";
  r.body_text = "Body of " + id + ".";
  return r;
}

}  // namespace testing_support
