#include <gtest/gtest.h>

#include <thread>

#include "support.hpp"

using namespace ideagraph;
using namespace testing_support;

TEST(Corpus, LoadsToyCorpus) {
  auto loaded = load_corpus(toy_corpus());
  EXPECT_EQ(loaded.store.size(), 12u);
  EXPECT_EQ(loaded.report.lines_parsed, 12u);
  EXPECT_TRUE(loaded.report.malformed.empty());
  EXPECT_EQ(loaded.store.partition_tag(), PartitionTag::full);
}

TEST(Corpus, MissingFileIsIoError) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

TEST(Corpus, MalformedLinesAreSkippedAndReported) {
  TempDir d("corpus");
  auto p = d / "c.jsonl";
  std::vector<std::string> lines;
  for (int i = 0; i < 5; ++i) lines.push_back(to_json(make_record("p" + std::to_string(i))).dump());
  lines.insert(lines.begin() + 2, "{\"paper_id\": \"broken\"");
  lines.push_back(R"({"paper_id":"","title":"x","year":2020})");
  std::string body;
  for (const auto& l : lines) body += l + "\n";
  io::write_file(p, body);
  auto loaded = load_corpus(p);
  EXPECT_EQ(loaded.store.size(), 5u);
  ASSERT_EQ(loaded.report.malformed.size(), 2u);
  EXPECT_EQ(loaded.report.malformed[0].first, 3u);
}

TEST(Corpus, DuplicateIdIsFatalAndNamed) {
  TempDir d("corpus");
  auto p = d / "c.jsonl";
  io::write_jsonl(p, {to_json(make_record("p7")), to_json(make_record("p7"))});
  try {
    load_corpus(p);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("p7"), std::string::npos);
  }
}

TEST(Corpus, EmptyFileWarns) {
  TempDir d("corpus");
  io::write_file(d / "c.jsonl", "");
  auto loaded = load_corpus(d / "c.jsonl");
  EXPECT_TRUE(loaded.store.empty());
  EXPECT_EQ(loaded.report.warnings.size(), 1u);
}

TEST(Corpus, RecordValidation) {
  auto r = make_record("a");
  r.year = 1800;
  EXPECT_THROW(validate(r), ValidationError);
  r = make_record("a");
  r.title.clear();
  EXPECT_THROW(validate(r), ValidationError);
  r = make_record("a");
  RawReference ref{"RFC 4271", false, std::nullopt, std::string("abstract"), std::nullopt};
  r.references.push_back(ref);
  EXPECT_THROW(validate(r), ValidationError);
}

TEST(Corpus, RoundTripIsLossless) {
  TempDir d("corpus");
  auto loaded = load_corpus(toy_corpus());
  save_corpus(loaded.store, d / "a.jsonl");
  auto again = load_corpus(d / "a.jsonl");
  EXPECT_TRUE(again.store == loaded.store);
  save_corpus(again.store, d / "b.jsonl");
  EXPECT_EQ(io::read_file(d / "a.jsonl"), io::read_file(d / "b.jsonl"));
}

TEST(Corpus, SummariesRoundTrip) {
  MockRig rig;
  auto s = toy_store_summarized(rig.gateway);
  TempDir d("corpus");
  save_summaries(s, d / "s.jsonl");
  auto t = toy_store();
  load_summaries(t, d / "s.jsonl");
  EXPECT_TRUE(s == t);
}

TEST(Corpus, SplitTiesGoToPre) {
  CorpusStore full;
  full.add_record(make_record("a", 2023));
  full.add_record(make_record("b", 2024));
  full.add_record(make_record("c", 2025));
  auto [pre, post] = split_by_year(full, 2024);
  EXPECT_EQ(pre.size(), 2u);
  EXPECT_EQ(post.size(), 1u);
  EXPECT_TRUE(post.records().count("c"));
  EXPECT_EQ(pre.partition_tag(), PartitionTag::pre);
  EXPECT_EQ(post.partition_tag(), PartitionTag::post);
}

TEST(Corpus, SplitIsAPartition) {
  auto full = toy_store();
  for (int boundary : {1999, 2021, 2022, 2024, 2030}) {
    auto [pre, post] = split_by_year(full, boundary);
    EXPECT_EQ(pre.size() + post.size(), full.size());
    for (const auto& [id, r] : pre.records()) {
      EXPECT_FALSE(post.records().count(id));
      EXPECT_LE(r.year, boundary);
    }
    for (const auto& [id, r] : post.records()) EXPECT_GT(r.year, boundary);
  }
}

TEST(Corpus, SplitRejectsPartitionedStore) {
  auto [pre, post] = split_by_year(toy_store(), 2024);
  EXPECT_THROW(split_by_year(pre, 2024), PreconditionError);
}

TEST(Corpus, ToyCorpusSplit) {
  auto [pre, post] = split_by_year(toy_store(), 2024);
  EXPECT_EQ(pre.size(), 9u);
  EXPECT_EQ(post.size(), 3u);
}

TEST(Guard, ReadBeforeScoringIsProtocolError) {
  auto [pre, post] = split_by_year(toy_store(), 2024);
  auto guard = guard_post_access(post);
  EXPECT_THROW(guard.read("generation"), ProtocolError);
  EXPECT_EQ(guard.read_count(), 0u);
  guard.begin_scoring();
  EXPECT_EQ(guard.read("scoring").size(), 3u);
  EXPECT_EQ(guard.read_log(), std::vector<std::string>{"scoring"});
}

TEST(Guard, RequiresPostStore) {
  auto [pre, post] = split_by_year(toy_store(), 2024);
  EXPECT_THROW(guard_post_access(pre), PreconditionError);
}

TEST(Guard, ConcurrentReadsAreAllLogged) {
  auto [pre, post] = split_by_year(toy_store(), 2024);
  auto guard = guard_post_access(post);
  guard.begin_scoring();
  {
    std::vector<std::jthread> ts;
    for (int t = 0; t < 8; ++t)
      ts.emplace_back([&] {
        for (int i = 0; i < 100; ++i) guard.read("t");
      });
  }
  EXPECT_EQ(guard.read_count(), 800u);
}
