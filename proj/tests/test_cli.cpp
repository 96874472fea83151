#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

using mpr::testing::read_file;
using mpr::testing::TempDir;

namespace {

const std::string kCli = MPR_CLI_PATH;
const std::filesystem::path kFixtures = MPR_FIXTURE_DIR;

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const TempDir& dir) {
  const auto out = dir / "stdout.txt";
  const std::string cmd = kCli + " " + args + " >" + out.string() + " 2>" + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out)};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const std::string d = dir_->path().string();
    ASSERT_EQ(run("gen-synth --seed 0 --passages 400 --questions 48 --test-questions 12 --buckets 16384 --out-dir " + d + "/s", *dir_).code, 0);
  }
  static void TearDownTestSuite() { delete dir_; }

  std::string d() const { return dir_->path().string(); }

  static TempDir* dir_;
};

TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, StatsPrintsDelta) {
  auto r = run("stats " + (kFixtures / "three.jsonl").string(), *dir_);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\t1\t1\t0\t2\t"), std::string::npos) << r.out;
  auto json = run("stats --format dpr-json " + (kFixtures / "three.json").string(), *dir_);
  ASSERT_EQ(json.code, 0);
  EXPECT_EQ(r.out.substr(r.out.find('\n')), json.out.substr(json.out.find('\n')));
}

TEST_F(Cli, StatsTrecRow) {
  const auto path = dir_->path() / "trec.jsonl";
  std::string text;
  std::size_t id = 0;
  for (auto [n, k] : {std::pair{89, 1}, std::pair{111, 2}, std::pair{920, 3}}) {
    for (int i = 0; i < n; ++i, ++id) {
      text += "{\"id\":" + std::to_string(id) + ",\"question\":\"q\",\"answers\":[\"a\"],\"positive_ctxs\":[";
      for (int j = 0; j < k; ++j) text += std::string(j ? "," : "") + "{\"text\":\"a" + std::to_string(j) + "\"}";
      text += "],\"hard_negative_ctxs\":[{\"text\":\"n\"}]}\n";
    }
  }
  mpr::testing::write_file(path, text);
  auto r = run("stats " + path.string(), *dir_);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("89\t111\t920\t1120\tδ=82.1%"), std::string::npos) << r.out;
}

TEST_F(Cli, StatsErrors) {
  mpr::testing::write_file(dir_->path() / "empty.jsonl", "");
  EXPECT_EQ(run("stats " + d() + "/empty.jsonl", *dir_).code, 2);
  mpr::testing::write_file(dir_->path() / "broken.jsonl", "{not json\n");
  EXPECT_EQ(run("stats " + d() + "/broken.jsonl", *dir_).code, 2);
  EXPECT_EQ(run("stats --format xml " + (kFixtures / "three.jsonl").string(), *dir_).code, 4);
}

TEST_F(Cli, TrainExitCodes) {
  EXPECT_EQ(run("train " + d() + "/s/train.jsonl --loss nll --max-positives 3 --out " + d() + "/x.ckpt", *dir_).code, 4);
  EXPECT_EQ(run("train " + d() + "/s/train.jsonl --batch-size 1000 --out " + d() + "/x.ckpt", *dir_).code, 3);
  EXPECT_EQ(run("train " + d() + "/missing.jsonl --out " + d() + "/x.ckpt", *dir_).code, 2);
  EXPECT_EQ(run("train --bogus-flag", *dir_).code, 4);
}

TEST_F(Cli, PipelineReportsBothKs) {
  const std::string s = d() + "/s";
  ASSERT_EQ(run("train " + s + "/train.jsonl --epochs 2 --lr 5e-3 --vocab 16384 --embed-dim 16 --out-dim 16 --out " + d() + "/m.ckpt", *dir_).code, 0);
  ASSERT_TRUE(std::filesystem::exists(d() + "/m.ckpt.manifest.json"));
  const auto log = read_file(d() + "/m.ckpt.log.jsonl");
  auto first = nlohmann::json::parse(log.substr(0, log.find('\n')));
  for (const char* key : {"epoch", "mean_loss", "lr_last", "wall_ms"}) EXPECT_TRUE(first.contains(key));

  auto manifest = nlohmann::json::parse(read_file(d() + "/m.ckpt.manifest.json"));
  EXPECT_EQ(manifest["config"]["batch_size"], 16);
  EXPECT_EQ(manifest["inputs"][0]["sha256"].get<std::string>().size(), 64u);

  ASSERT_EQ(run("encode --checkpoint " + d() + "/m.ckpt --corpus " + s + "/corpus.tsv --out " + d() + "/m.idx", *dir_).code, 0);
  for (const char* retriever : {"dense", "bm25", "hybrid"}) {
    std::string extra = std::string(retriever) == "bm25" ? " --corpus " + s + "/corpus.tsv"
                                                         : " --checkpoint " + d() + "/m.ckpt --index " + d() + "/m.idx";
    if (std::string(retriever) == "hybrid") extra += " --corpus " + s + "/corpus.tsv";
    ASSERT_EQ(run("retrieve " + s + "/test.jsonl --retriever " + retriever + extra + " --k 20,100 --out " + d() + "/r.jsonl", *dir_).code, 0) << retriever;
    auto ev = run("eval " + s + "/test.jsonl --corpus " + s + "/corpus.tsv --results " + d() + "/r.jsonl --out " + d() + "/rep.json --ranks " + d() + "/ranks.tsv", *dir_);
    ASSERT_EQ(ev.code, 0);
    EXPECT_NE(ev.out.find("top-20\t"), std::string::npos);
    EXPECT_NE(ev.out.find("top-100\t"), std::string::npos);
    auto rep = nlohmann::json::parse(read_file(d() + "/rep.json"));
    EXPECT_TRUE(rep["accuracy"].contains("20"));
    EXPECT_TRUE(rep["accuracy"].contains("100"));
  }
  EXPECT_EQ(run("retrieve " + s + "/test.jsonl --retriever dense --out " + d() + "/r.jsonl", *dir_).code, 4);
}

TEST_F(Cli, CorruptArtifactsNameTheMagic) {
  mpr::testing::write_file(dir_->path() / "junk.ckpt", "JUNKJUNKJUNK");
  auto r = run("encode --checkpoint " + d() + "/junk.ckpt --corpus " + d() + "/s/corpus.tsv --out " + d() + "/j.idx", *dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(read_file(dir_->path() / "stderr.txt").find("MPRT"), std::string::npos);
}

TEST_F(Cli, AblateThreeRows) {
  auto r = run("ablate " + d() + "/s/train.jsonl --corpus " + d() + "/s/corpus.tsv --m 1,2,3 --epochs 1 --lr 5e-3 --vocab 16384 --embed-dim 8 --out-dim 8 --out " + d() + "/abl.tsv", *dir_);
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1].substr(0, 2), "1\t");
  EXPECT_EQ(lines[3].substr(0, 2), "3\t");
  EXPECT_EQ(read_file(d() + "/abl.tsv"), r.out);
  EXPECT_EQ(run("ablate " + d() + "/s/train.jsonl --corpus " + d() + "/s/corpus.tsv --loss nll --m 1,3", *dir_).code, 4);
}

TEST_F(Cli, GenSynthTwiceIdentical) {
  ASSERT_EQ(run("gen-synth --seed 0 --passages 400 --questions 48 --test-questions 12 --buckets 16384 --out-dir " + d() + "/s2", *dir_).code, 0);
  for (const char* f : {"corpus.tsv", "train.jsonl", "test.jsonl"}) {
    EXPECT_EQ(read_file(d() + "/s/" + f), read_file(d() + "/s2/" + f));
  }
}
