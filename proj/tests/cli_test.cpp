#include <chrono>

#include <json.hpp>

#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using nlohmann::json;

const std::string kCli = MELMINE_CLI_PATH;
const std::filesystem::path kDemo = MELMINE_DEMO_DIR;

std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

support::CommandResult cli(const std::string& args, bool merge_stderr = false) {
  return support::run_command(kCli + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null"));
}

std::string demo_inputs(bool emb = true) {
  std::string s = "--kb " + quote(kDemo / "kb.jsonl") + " --mentions " + quote(kDemo / "mentions.jsonl");
  if (emb) s += " --emb " + quote(kDemo / "emb.bin");
  return s;
}

}  // namespace

TEST(Cli, MineWritesTableWithHeader) {
  support::TempDir dir("cli");
  const auto r = cli("mine --kb " + quote(kDemo / "kb.jsonl") + " --k 4 --exact --out " +
                     quote(dir / "neg.jsonl"));
  ASSERT_EQ(r.status, 0);
  const auto text = support::read_bytes(dir / "neg.jsonl");
  const auto header = json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(header["k"], 4);
  EXPECT_EQ(header["method"], "exact");
  EXPECT_EQ(header["entities"], 50);
}

TEST(Cli, EvalOnThreeMentionFixture) {
  support::TempDir dir("cli");
  const auto f = support::write_three_mention_fixture(dir.path());
  const auto r = cli("eval --kb " + quote(f.kb) + " --mentions " + quote(f.mentions) + " --emb " +
                     quote(f.emb) + " --tie pessimistic");
  ASSERT_EQ(r.status, 0);
  const auto doc = json::parse(r.out);
  const auto& a = doc["aggregates"];
  EXPECT_NEAR(a["hits_at_1"].get<double>(), 33.33, 5e-3);
  EXPECT_NEAR(a["hits_at_3"].get<double>(), 66.67, 5e-3);
  EXPECT_NEAR(a["hits_at_5"].get<double>(), 100.0, 1e-9);
  EXPECT_NEAR(a["mrr"].get<double>(), 0.58333, 1e-5);

  const auto table = cli("eval --format table --kb " + quote(f.kb) + " --mentions " +
                         quote(f.mentions) + " --emb " + quote(f.emb));
  EXPECT_NE(table.out.find("33.33"), std::string::npos);
  EXPECT_NE(table.out.find("0.58333"), std::string::npos);
}

TEST(Cli, BadBandConfigExitsOne) {
  const auto r = cli("mine --kb " + quote(kDemo / "kb.jsonl") +
                         " --k 4 --minhash --bands 31 --rows 8 --sig 256",
                     true);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("BadBandConfig"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOneAndNameTheFlag) {
  auto r = cli("eval --kb " + quote(kDemo / "kb.jsonl"), true);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("--mentions"), std::string::npos);
  r = cli("mine --kb " + quote(kDemo / "kb.jsonl") + " --k 4 --bogus", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("--bogus"), std::string::npos);
  r = cli("eval " + demo_inputs() + " --tie sometimes", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(cli("").status, 1);
}

TEST(Cli, MissingInputExitsTwo) {
  EXPECT_EQ(cli("stats --kb /nonexistent/kb.jsonl --mentions /nonexistent/m.jsonl").status, 2);
  EXPECT_EQ(cli("eval " + demo_inputs(false) + " --emb /nonexistent/e.bin").status, 2);
}

TEST(Cli, CorruptEmbeddingExitsOne) {
  support::TempDir dir("cli");
  support::write_text(dir / "bad.bin", "EMB2garbage.....");
  EXPECT_EQ(cli("eval " + demo_inputs(false) + " --emb " + quote(dir / "bad.bin")).status, 1);
}

TEST(Cli, RandomizedPathsPrintSeed) {
  auto r = cli("mine --kb " + quote(kDemo / "kb.jsonl") + " --k 3 --minhash", true);
  EXPECT_NE(r.out.find("seed: 5"), std::string::npos);
  r = cli("build-index --kb " + quote(kDemo / "kb.jsonl") + " --seed 9", true);
  EXPECT_NE(r.out.find("seed: 9"), std::string::npos);
}

TEST(Cli, StatsCountsDemo) {
  const auto r = cli("stats " + demo_inputs(false));
  ASSERT_EQ(r.status, 0);
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["entities"], 50);
  const auto& p = doc["image_pairs"];
  EXPECT_EQ(p["both_have_image"].get<int>() + p["mention_only"].get<int>() +
                p["entity_only"].get<int>() + p["neither"].get<int>(),
            doc["mentions"].get<int>());
}

TEST(Cli, IndexFileFeedsMining) {
  support::TempDir dir("cli");
  const auto kb = quote(kDemo / "kb.jsonl");
  ASSERT_EQ(cli("build-index --kb " + kb + " --out " + quote(dir / "idx.json")).status, 0);
  const auto direct = cli("mine --kb " + kb + " --k 4 --minhash");
  const auto via = cli("mine --kb " + kb + " --k 4 --minhash --index " + quote(dir / "idx.json"));
  EXPECT_EQ(direct.status, 0);
  EXPECT_EQ(direct.out, via.out);
}

TEST(Cli, TransformThenEvaluateMatchesInlineCvacpt) {
  support::TempDir dir("cli");
  ASSERT_EQ(cli("transform " + demo_inputs() + " --init-seed 3 --save-params " +
                quote(dir / "p.json") + " --out " + quote(dir / "t.bin"))
                .status,
            0);
  const auto inline_run = cli("eval " + demo_inputs() + " --variant cosine-fused --params " +
                              quote(dir / "p.json"));
  const auto staged = cli("eval " + demo_inputs(false) + " --emb " + quote(dir / "t.bin") +
                          " --variant cosine-fused");
  ASSERT_EQ(inline_run.status, 0);
  ASSERT_EQ(staged.status, 0);
  EXPECT_EQ(json::parse(inline_run.out)["per_mention"], json::parse(staged.out)["per_mention"]);
}

TEST(Cli, ThreadsFlagAndEnvironmentDoNotChangeOutput) {
  const std::string args = "eval " + demo_inputs() + " --variant cosine-fused --init-seed 4";
  const auto one = cli("--threads 1 " + args);
  const auto four = cli("--threads 4 " + args);
  const auto env = support::run_command("MELMINE_THREADS=3 " + kCli + " " + args + " 2>/dev/null");
  ASSERT_EQ(one.status, 0);
  EXPECT_EQ(one.out, four.out);
  EXPECT_EQ(one.out, env.out);
}

TEST(Cli, DemoSubcommandsFinishQuickly) {
  support::TempDir dir("cli");
  const std::vector<std::string> runs = {
      "stats " + demo_inputs(false),
      "build-index --kb " + quote(kDemo / "kb.jsonl"),
      "mine --kb " + quote(kDemo / "kb.jsonl") + " --k 4 --minhash",
      "transform " + demo_inputs() + " --init-seed 5 --out " + quote(dir / "t.bin"),
      "score " + demo_inputs() + " --mention M0",
      "eval " + demo_inputs() + " --variant cosine-fused --init-seed 5",
      "pooled-sim " + demo_inputs(),
      "toy --k 4 --seeds 1 --groups 10",
  };
  for (const auto& args : runs) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = cli(args);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_EQ(r.status, 0) << args;
    EXPECT_LT(secs, 5.0) << args;
  }
}
