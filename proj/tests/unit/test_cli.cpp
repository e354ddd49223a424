#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include "ideagraph/cli.hpp"
#include "support.hpp"

using namespace ideagraph;
using namespace testing_support;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ideagraph");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> stage_args(const std::string& stage, const fs::path& out) {
  std::vector<std::string> a{stage, "--out", out.string()};
  if (stage == "ingest") a.insert(a.end(), {"--corpus", toy_corpus().string(), "--seed", "7"});
  if (stage == "discover")
    a.insert(a.end(), {"--domain", "network verification", "--problem", "scalable network verification",
                       "--baseline"});
  return a;
}

const std::vector<std::string> kStages{"ingest", "summarize", "build-graphs", "discover", "evaluate", "report"};

void run_all(const fs::path& out) {
  for (const auto& s : kStages) {
    auto r = cli(stage_args(s, out));
    ASSERT_EQ(r.code, 0) << s << ": " << r.err;
  }
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
  return files;
}

}  // namespace

TEST(Cli, FullSequenceSucceedsAndWritesArtifacts) {
  TempDir d("cli");
  auto out = d / "run";
  run_all(out);
  Layout l{out};
  for (const auto& s : kStages) EXPECT_TRUE(fs::exists(l.manifest(s))) << s;
  EXPECT_TRUE(fs::exists(l.ideas()));
  EXPECT_TRUE(fs::exists(l.baseline_cards()));
  EXPECT_TRUE(fs::exists(l.stage("report") / "ablation.csv"));
  EXPECT_FALSE(fs::exists(l.lock()));
  auto guard = json::parse(io::read_file(l.guard()));
  EXPECT_EQ(guard["post_reads"], 0);
  auto manifest = json::parse(io::read_file(l.manifest("evaluate")));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_TRUE(manifest["outputs"].contains("evaluate/scorecards.jsonl"));
}

TEST(Cli, RerunIsByteIdentical) {
  TempDir d("cli");
  run_all(d / "a");
  run_all(d / "b");
  auto a = tree(d / "a"), b = tree(d / "b");
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, body] : a) {
    ASSERT_TRUE(b.count(name)) << name;
    EXPECT_EQ(body, b[name]) << name;
  }
}

TEST(Cli, DiscoverWithoutProblemIsUsageError) {
  TempDir d("cli");
  auto out = d / "run";
  for (const auto& s : {"ingest", "summarize", "build-graphs"}) ASSERT_EQ(cli(stage_args(s, out)).code, 0);
  auto r = cli({"discover", "--out", out.string(), "--domain", "network verification"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--problem"), std::string::npos);
}

TEST(Cli, UnknownProblemIsRetrievalError) {
  TempDir d("cli");
  auto out = d / "run";
  for (const auto& s : {"ingest", "summarize", "build-graphs"}) ASSERT_EQ(cli(stage_args(s, out)).code, 0);
  auto r = cli({"discover", "--out", out.string(), "--domain", "x", "--problem", "quantum teleportation"});
  EXPECT_EQ(r.code, 7);
  EXPECT_NE(r.err.find("broader"), std::string::npos);
}

TEST(Cli, EvaluateBeforeDiscoverNamesMissingStage) {
  TempDir d("cli");
  auto out = d / "run";
  for (const auto& s : {"ingest", "summarize", "build-graphs"}) ASSERT_EQ(cli(stage_args(s, out)).code, 0);
  auto r = cli({"evaluate", "--out", out.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("ideagraph discover"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"ingest", "--k", "notanumber"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  TempDir d("cli");
  EXPECT_EQ(cli({"ingest", "--out", (d / "x").string()}).code, 2);
}

TEST(Cli, MissingCorpusIsIoError) {
  TempDir d("cli");
  auto r = cli({"ingest", "--out", (d / "x").string(), "--corpus", (d / "none.jsonl").string()});
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, HeldLockRefusesSecondCommand) {
  TempDir d("cli");
  auto out = d / "run";
  fs::create_directories(out);
  io::write_file(Layout{out}.lock(), "");
  auto r = cli(stage_args("ingest", out));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("locked"), std::string::npos);
}

TEST(Cli, TamperedGuardBlocksEvaluation) {
  TempDir d("cli");
  auto out = d / "run";
  for (const auto& s : {"ingest", "summarize", "build-graphs", "discover"})
    ASSERT_EQ(cli(stage_args(s, out)).code, 0);
  io::write_file(Layout{out}.guard(), R"({"post_reads": 1, "log": ["x"]})");
  EXPECT_EQ(cli({"evaluate", "--out", out.string()}).code, 6);
}

TEST(Cli, ReportMergesOtherRuns) {
  TempDir d("cli");
  run_all(d / "a");
  run_all(d / "b");
  auto r = cli({"report", "--out", (d / "a").string(), "--merge", (d / "b").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto csv = io::read_file(d / "a" / "report" / "report.csv");
  EXPECT_NE(csv.find(",2\n"), std::string::npos) << csv;  // two ideas in the one cell
}

TEST(Config, RoundTripAndUnknownKeys) {
  TempDir d("cfg");
  auto c = toy_run_config(11);
  c.k_candidates = 5;
  c.save(d / "c.json");
  EXPECT_TRUE(RunConfig::load(d / "c.json") == c);
  io::write_file(d / "bad.json", R"({"k_candidates": 3, "surprise": 1})");
  EXPECT_THROW(RunConfig::load(d / "bad.json"), ValidationError);
  io::write_file(d / "typed.json", R"({"k_candidates": "three"})");
  EXPECT_THROW(RunConfig::load(d / "typed.json"), ValidationError);
}

TEST(Config, RangeChecks) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.threshold_t = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = RunConfig{};
  c.k_candidates = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Config, FlagsOverrideConfigFile) {
  TempDir d("cfg");
  auto c = toy_run_config(3);
  c.output_dir = (d / "o").string();
  c.save(d / "c.json");
  CliFlags f;
  f.config = (d / "c.json").string();
  f.k = 4;
  auto r = resolve_config(f);
  EXPECT_EQ(r.k_candidates, 4);
  EXPECT_EQ(r.seed, 3u);
  EXPECT_EQ(r.output_dir, c.output_dir);
}

TEST(Config, TokenNeverStoredInConfig) {
  auto j = toy_run_config().to_json().dump();
  EXPECT_EQ(j.find("token\":"), std::string::npos);
  EXPECT_NE(j.find("auth_token_env"), std::string::npos);
}

TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string& args) {
    int raw = std::system((std::string(IDEAGRAPH_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status(""), 2);
  TempDir d("bin");
  EXPECT_EQ(status("evaluate --out " + (d / "x").string()), 3);
}
