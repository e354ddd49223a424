#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "support.hpp"

using namespace ideagraph;
using namespace testing_support;

namespace {

std::vector<double> vals(const EmbeddingVector& v) { return {v.values().begin(), v.values().end()}; }

ChatRequest summarize_request(const std::string& pid) {
  return prompts::make_request(PromptKind::summarize,
                               {{"paper_id", pid}, {"title", "t"}, {"abstract", "a"}, {"body_excerpt", ""}});
}

// Scripted backend: returns canned responses in order, counting overlap.
class SlowBackend : public Backend {
 public:
  std::string chat(const ChatRequest&) override {
    int now = ++active_;
    int p = peak_.load();
    while (now > p && !peak_.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active_;
    return R"({"label": "x"})";
  }
  std::vector<std::vector<double>> embed(std::span<const std::string> t) override {
    return std::vector<std::vector<double>>(t.size(), std::vector<double>{1.0, 0.0});
  }
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

}  // namespace

TEST(Gateway, MockSummaryHasAllFields) {
  MockRig rig;
  auto out = rig.gateway.complete(summarize_request("p01"));
  EXPECT_EQ(out.retries, 0);
  for (const char* k : {"background", "problem", "design"}) {
    ASSERT_TRUE(out.value.contains(k));
    EXPECT_FALSE(out.value[k].get<std::string>().empty());
  }
}

TEST(Gateway, EmptyPromptIsPrecondition) {
  MockRig rig;
  auto req = summarize_request("p01");
  req.prompt_text.clear();
  EXPECT_THROW(rig.gateway.complete(req), PreconditionError);
}

TEST(Gateway, UnknownSchemaIsPrecondition) {
  MockRig rig;
  auto req = summarize_request("p01");
  req.schema_id = "nope";
  EXPECT_THROW(rig.gateway.complete(req), PreconditionError);
}

TEST(Gateway, MalformedOnceRecoversWithOneRetry) {
  MockRig rig;
  rig.backend->inject_fault(PromptKind::summarize, FaultKind::malformed, 1);
  auto out = rig.gateway.complete(summarize_request("p01"));
  EXPECT_EQ(out.retries, 1);
  auto t = rig.gateway.transcript();
  ASSERT_EQ(t.size(), 2u);
  EXPECT_FALSE(t[0].ok);
  EXPECT_TRUE(t[1].ok);
}

TEST(Gateway, MissingFieldIsRepaired) {
  MockRig rig;
  rig.backend->inject_fault(PromptKind::summarize, FaultKind::drop_field, 1, "design");
  auto out = rig.gateway.complete(summarize_request("p01"));
  EXPECT_EQ(out.retries, 1);
  EXPECT_TRUE(out.value.contains("design"));
}

TEST(Gateway, PersistentViolationCarriesLastRaw) {
  MockRig rig;
  rig.backend->inject_fault(PromptKind::summarize, FaultKind::malformed, 3);
  try {
    rig.gateway.complete(summarize_request("p01"));
    FAIL() << "expected structured output error";
  } catch (const StructuredOutputError& e) {
    EXPECT_EQ(e.last_raw_response(), "{\"oops\": ");
  }
  EXPECT_EQ(rig.gateway.call_count(), 3u);
}

TEST(Gateway, TransportFailureAfterRetriesIsBackendError) {
  MockRig rig;
  rig.backend->inject_fault(PromptKind::summarize, FaultKind::transport, 3);
  EXPECT_THROW(rig.gateway.complete(summarize_request("p01")), BackendError);
}

TEST(Gateway, TransportFailureThenSuccess) {
  MockRig rig;
  rig.backend->inject_fault(PromptKind::summarize, FaultKind::transport, 2);
  EXPECT_EQ(rig.gateway.complete(summarize_request("p01")).retries, 2);
}

TEST(Gateway, UnknownFixtureKeyFailsLoudly) {
  MockRig rig;
  EXPECT_THROW(rig.gateway.complete(summarize_request("nope")), BackendError);
}

TEST(Gateway, ExtraValidatorIsRepaired) {
  MockRig rig;
  int calls = 0;
  auto extra = [&](const json&) -> std::optional<std::string> {
    if (++calls == 1) return std::string("first answer rejected");
    return std::nullopt;
  };
  auto out = rig.gateway.complete(summarize_request("p01"), extra);
  EXPECT_EQ(out.retries, 1);
  auto t = rig.gateway.transcript();
  EXPECT_EQ(t[0].error, "first answer rejected");
}

TEST(Gateway, RepairNoteReachesBackend) {
  class Recorder : public Backend {
   public:
    std::string chat(const ChatRequest& r) override {
      prompts.push_back(r.prompt_text);
      return prompts.size() == 1 ? "not json" : R"({"label":"ok"})";
    }
    std::vector<std::vector<double>> embed(std::span<const std::string>) override { return {}; }
    std::vector<std::string> prompts;
  };
  auto b = std::make_shared<Recorder>();
  Gateway gw(b, mock_config());
  gw.complete(prompts::make_request(PromptKind::domain_label, {{"paper_id", "x"}}));
  ASSERT_EQ(b->prompts.size(), 2u);
  EXPECT_NE(b->prompts[1].find("did not match"), std::string::npos);
}

TEST(Gateway, InFlightBoundHolds) {
  auto b = std::make_shared<SlowBackend>();
  Gateway gw(b, mock_config(3));
  parallel_for(40, 16, [&](std::size_t) {
    gw.complete(prompts::make_request(PromptKind::domain_label, {{"paper_id", "x"}}));
  });
  EXPECT_LE(b->peak_.load(), 3);
  EXPECT_LE(gw.peak_in_flight(), 3);
  EXPECT_GE(gw.peak_in_flight(), 2);
}

TEST(Embedding, MockDeterministicAndUnitNorm) {
  MockRig rig;
  auto v = rig.gateway.embed_batch(std::vector<std::string>{"a", "a", "b"});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(vals(v[0]), vals(v[1]));
  EXPECT_NE(vals(v[0]), vals(v[2]));
  for (const auto& x : v) EXPECT_NEAR(x.norm(), 1.0, 1e-9);
  EXPECT_EQ(v[0].dim(), 32u);
}

TEST(Embedding, SameSeedSameVectorsAcrossBackends) {
  MockRig a(json::object(), 11), b(json::object(), 11), c(json::object(), 12);
  std::vector<std::string> t{"graph partitioning for verification"};
  EXPECT_EQ(vals(a.gateway.embed_batch(t)[0]), vals(b.gateway.embed_batch(t)[0]));
  EXPECT_NE(vals(a.gateway.embed_batch(t)[0]), vals(c.gateway.embed_batch(t)[0]));
}

TEST(Embedding, EmptyListAndEmptyText) {
  MockRig rig;
  EXPECT_TRUE(rig.gateway.embed_batch(std::vector<std::string>{}).empty());
  try {
    rig.gateway.embed_batch(std::vector<std::string>{"a", "", "c"});
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
}

TEST(Embedding, ZeroVectorRejected) {
  EXPECT_THROW(EmbeddingVector(std::vector<double>{0.0, 0.0}, "h"), ContractError);
  EXPECT_THROW(EmbeddingVector(std::vector<double>{}, "h"), ContractError);
}

TEST(Cosine, Examples) {
  EmbeddingVector a({1.0, 0.0}, ""), b({1.0, 1.0}, ""), c({0.0, 1.0}, "");
  EXPECT_NEAR(cosine_similarity(a, b), 0.70710678, 1e-8);
  EXPECT_NEAR(cosine_similarity(a, c), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(b, b), 1.0, 1e-12);
  EmbeddingVector d({1.0, 0.0, 0.0}, "");
  EXPECT_THROW(cosine_similarity(a, d), ContractError);
}

TEST(Cosine, SymmetricAndBoundedOnRandomPairs) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t dim = 1 + trial % 16;
    std::vector<double> x(dim), y(dim);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    EmbeddingVector a(x, ""), b(y, "");
    double ab = cosine_similarity(a, b);
    EXPECT_EQ(ab, cosine_similarity(b, a));
    EXPECT_LE(std::abs(ab), 1.0 + 1e-12);
    // Independent dot/norm computation.
    double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      dot += x[i] * y[i];
      nx += x[i] * x[i];
      ny += y[i] * y[i];
    }
    EXPECT_NEAR(ab, dot / std::sqrt(nx * ny), 1e-12);
  }
}

TEST(Transcript, DeterministicUnderConcurrency) {
  auto run = [] {
    MockRig rig(toy_fixtures(), 5, mock_config(4));
    auto store = toy_store();
    summarize_store(rig.gateway, store);
    return rig.gateway.transcript_jsonl();
  };
  auto a = run(), b = run();
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("latency_ms"), std::string::npos);
}

TEST(Config, LiveRequiresBaseUrl) {
  BackendConfig c;
  c.kind = BackendKind::live;
  EXPECT_THROW(c.validate(), ValidationError);
  c.base_url = "http://localhost:1";
  EXPECT_NO_THROW(c.validate());
  c.max_in_flight = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}
