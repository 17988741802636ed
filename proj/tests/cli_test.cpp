#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "dialsum/cli.hpp"

namespace dialsum::cli {
namespace {

const std::string kBin = DIALSUM_CLI;
const std::string kData = DIALSUM_DATA_DIR;

int run(const std::string& args) {
  const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return detail::read_file(p); }

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dialsum_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }

  // A small model so a CLI training run takes well under a second per epoch.
  fs::path small_config(int epochs = 2) {
    return write("small.json", R"({"epochs": )" + std::to_string(epochs) +
                                   R"(, "beam": 1, "decode_max_len": 12,
        "model": {"d_model": 16, "n_enc_layers": 1, "n_dec_layers": 1, "n_heads": 2, "d_ff": 32}})");
  }

  fs::path dir_;
};

TEST(CliHelpers, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(CliHelpers, FlagsOverrideFileOverrideDefaults) {
  const json defaults = {{"lambda", 0.1}, {"epochs", 20}, {"model", {{"d_model", 64}, {"n_heads", 4}}}};
  const json file = {{"epochs", 5}, {"model", {{"d_model", 16}}}};
  const json flags = {{"epochs", 7}, {"lambda", nullptr}};
  const json r = resolve_config(defaults, file, flags);
  EXPECT_EQ(r["epochs"], 7);
  EXPECT_EQ(r["lambda"], 0.1);
  EXPECT_EQ(r["model"]["d_model"], 16);
  EXPECT_EQ(r["model"]["n_heads"], 4);
}

TEST(CliHelpers, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ArgumentError("x")), kBadArguments);
  EXPECT_EQ(exit_code_for(DataError("x")), kDataError);
  EXPECT_EQ(exit_code_for(PreconditionError("x")), kDataError);
  EXPECT_EQ(exit_code_for(NumericError("x")), kNumericError);
}

TEST(CliHelpers, SplitFromFileName) {
  EXPECT_EQ(split_from_name("a/test.json"), Split::Test);
  EXPECT_EQ(split_from_name("val.json"), Split::Dev);
  EXPECT_EQ(split_from_name("dev.jsonl"), Split::Dev);
  EXPECT_EQ(split_from_name("train.json"), Split::Train);
}

TEST_F(CliRun, BadArgumentsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train --lambda 1.5"), 2);
  EXPECT_EQ(run("train --input-type first"), 2);
  EXPECT_EQ(run("generate --beam 0"), 2);
  EXPECT_EQ(run("--help"), 0);
  // missing required inputs surface as argument errors
  EXPECT_EQ(run("train --out " + dir_.string()), 2);
  EXPECT_EQ(run("stats --out " + dir_.string()), 2);
  const fs::path bad_config = write("bad.json", "{not json");
  EXPECT_EQ(run("stats " + kData + "/toy/train.json --config " + bad_config.string() + " --out " + dir_.string()), 2);
}

TEST_F(CliRun, DataErrorsExitThree) {
  EXPECT_EQ(run("stats " + (dir_ / "missing.json").string() + " --out " + dir_.string()), 3);
  const fs::path broken = write("broken.json", R"([{"id": "a", "dialogue": "no separator here", "summary": "s"}])");
  EXPECT_EQ(run("stats " + broken.string() + " --out " + dir_.string()), 3);
}

TEST_F(CliRun, StatsWritesTablesAndManifest) {
  const fs::path out = dir_ / "stats";
  ASSERT_EQ(run("stats " + kData + "/toy/train.json " + kData + "/toy/dev.json --out " + out.string()), 0);
  const std::string csv = slurp(out / "stats.csv");
  EXPECT_NE(csv.find("train,8,9.25,6,12,2.125,2,3,5,4,8"), std::string::npos);
  const json m = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["command"], "stats");
  EXPECT_EQ(m["inputs"].size(), 2u);
  EXPECT_EQ(m["inputs"][0]["sha256"], file_sha256(kData + "/toy/train.json"));
  EXPECT_EQ(m["outputs"]["stats.csv"], sha256_hex(csv));
  EXPECT_EQ(m["config"]["bin_width"], 5);
}

TEST_F(CliRun, PreprocessProducesTaggedCorpus) {
  const fs::path out = dir_ / "pre";
  ASSERT_EQ(run("preprocess " + kData + "/toy/train.json --lexicons " + kData + "/lexicons --out " + out.string()), 0);
  const Corpus c = load_corpus(out / "train.jsonl");
  EXPECT_TRUE(fully_tagged(c));
  EXPECT_EQ(c.dialogues.size(), 8u);
  // importing the tags back is the identity
  const fs::path again = dir_ / "again";
  ASSERT_EQ(run("preprocess " + kData + "/toy/train.json --tagger import --tags " + (out / "train.jsonl").string() +
                " --out " + again.string()),
            0);
  EXPECT_EQ(slurp(again / "train.jsonl"), slurp(out / "train.jsonl"));
}

TEST_F(CliRun, TrainGenerateEvaluatePipeline) {
  const fs::path cfg = small_config();
  const fs::path a = dir_ / "a", b = dir_ / "b";
  const std::string data = " --train " + kData + "/toy/train.json --dev " + kData + "/toy/dev.json";
  ASSERT_EQ(run("train --config " + cfg.string() + data + " --seed 3 --out " + a.string()), 0);
  ASSERT_EQ(run("train --config " + cfg.string() + data + " --seed 3 --out " + b.string()), 0);
  for (const char* f : {"train_log.jsonl", "checkpoint.json", "checkpoint_final.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const json m = json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["config"]["model"]["d_model"], 16);
  EXPECT_EQ(m["outputs"]["checkpoint.json"], file_sha256(a / "checkpoint.json"));

  // replaying the manifest reproduces the run
  const fs::path c = dir_ / "c";
  ASSERT_EQ(run("train --config " + (a / "manifest.json").string() + " --out " + c.string()), 0);
  EXPECT_EQ(slurp(c / "checkpoint.json"), slurp(a / "checkpoint.json"));
  EXPECT_EQ(slurp(c / "train_log.jsonl"), slurp(a / "train_log.jsonl"));

  std::istringstream log(slurp(a / "train_log.jsonl"));
  std::string line;
  int epochs = 0;
  while (std::getline(log, line)) {
    const json rec = json::parse(line);
    EXPECT_TRUE(rec.contains("l_ds") && rec.contains("l_pos") && rec.contains("dev_rouge1"));
    ++epochs;
  }
  EXPECT_EQ(epochs, 2);

  const fs::path g = dir_ / "gen";
  ASSERT_EQ(run("generate --checkpoint " + (a / "checkpoint.json").string() + " --input " + kData +
                "/toy/test.json --beam 2 --max-tokens 8 --out " + g.string()),
            0);
  std::istringstream gen(slurp(g / "generated.jsonl"));
  int n = 0;
  while (std::getline(gen, line)) {
    const json rec = json::parse(line);
    EXPECT_LE(rec["n_words"].get<int>(), 8);
    ++n;
  }
  EXPECT_EQ(n, 2);

  const fs::path e = dir_ / "eval";
  ASSERT_EQ(run("evaluate --generated " + (g / "generated.jsonl").string() + " --references " + kData +
                "/toy/test.json --system small --out " + e.string()),
            0);
  EXPECT_NE(slurp(e / "rouge.txt").find("small"), std::string::npos);
  EXPECT_EQ(slurp(e / "rouge.csv").substr(0, 7), "system,");
  // references that do not match the generated ids are a data error
  EXPECT_EQ(run("evaluate --generated " + (g / "generated.jsonl").string() + " --references " + kData +
                "/toy/dev.json --out " + e.string()),
            3);
}

TEST_F(CliRun, DivergentTrainingExitsFour) {
  const fs::path cfg = small_config(3);
  EXPECT_EQ(run("train --config " + cfg.string() + " --train " + kData + "/toy/train.json --dev " + kData +
                "/toy/dev.json --lr 1e300 --out " + (dir_ / "nan").string()),
            4);
}

TEST_F(CliRun, AnalyzeStylesOutputs) {
  const fs::path out = dir_ / "styles";
  ASSERT_EQ(run("analyze-styles " + kData + "/toy/train.json --k 2 --seed 1 --out " + out.string()), 0);
  for (const char* f : {"styles.csv", "tfidf.csv", "clusters.csv", "pca.csv", "feature_rank.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(slurp(out / "feature_rank.csv").substr(0, 36), "tag,cluster_0_mean,cluster_1_mean,st");
  const json m = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["config"]["pca_explained"].size(), 2u);
  const fs::path again = dir_ / "styles2";
  ASSERT_EQ(run("analyze-styles " + kData + "/toy/train.json --k 2 --seed 1 --out " + again.string()), 0);
  EXPECT_EQ(slurp(again / "clusters.csv"), slurp(out / "clusters.csv"));
  EXPECT_EQ(run("analyze-styles " + kData + "/toy/train.json --k 99 --out " + out.string()), 2);
}

}  // namespace
}  // namespace dialsum::cli
