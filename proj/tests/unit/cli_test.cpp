#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "tzsl/io.hpp"

namespace fs = std::filesystem;

namespace {

int exit_status(const std::string& args) {
  const std::string cmd = std::string(TZSL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tzsl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string data() const { return " --features " + path("f.txt") + " --semantics " + path("s.txt"); }

  int synth(const std::string& extra = "") {
    return exit_status("synth --out-features " + path("f.txt") + " --out-semantics " + path("s.txt") +
                       " --seen 4 --unseen 2 --semantic-dim 5 --feature-dim 6 --per-class 8 " + extra);
  }

  static constexpr const char* kFast = " --hidden 8 --lr 1e-3 --epochs-inductive 3 --epochs-transductive 3";

  fs::path dir_;
};

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(exit_status(""), 1); }

TEST_F(Cli, ZeroPerClassIsUsageError) { EXPECT_EQ(synth("--per-class 0"), 1); }

TEST_F(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(synth("--bogus 3"), 1); }

TEST_F(Cli, MissingInputIsIoError) {
  EXPECT_EQ(exit_status("train --features " + path("nope") + " --semantics " + path("nope") + " --out " +
                        path("m.ckpt")),
            2);
}

TEST_F(Cli, TransductiveWithoutInitIsValidationError) {
  ASSERT_EQ(synth(), 0);
  EXPECT_EQ(exit_status("train" + data() + kFast + " --stage transductive --out " + path("m.ckpt")), 3);
}

TEST_F(Cli, InvalidHyperparameterIsValidationError) {
  ASSERT_EQ(synth(), 0);
  EXPECT_EQ(exit_status("train" + data() + kFast + " --margin -1 --out " + path("m.ckpt")), 3);
}

TEST_F(Cli, StagesComposeLikeBoth) {
  ASSERT_EQ(synth(), 0);
  ASSERT_EQ(exit_status("train" + data() + kFast + " --out " + path("both.ckpt") + " --out-inductive " +
                        path("ind_both.ckpt")),
            0);
  ASSERT_EQ(exit_status("train" + data() + kFast + " --stage inductive --out " + path("ind.ckpt")), 0);
  ASSERT_EQ(exit_status("train" + data() + kFast + " --stage transductive --init " + path("ind.ckpt") +
                        " --out " + path("tns.ckpt")),
            0);
  EXPECT_EQ(tzsl::read_file(path("ind.ckpt")), tzsl::read_file(path("ind_both.ckpt")));
  EXPECT_EQ(tzsl::read_file(path("tns.ckpt")), tzsl::read_file(path("both.ckpt")));
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  ASSERT_EQ(synth(), 0);
  tzsl::write_file_atomic(path("cfg.txt"), "# comment\nhidden_dim=8\nlr=1e-3\nepochs_inductive=3\n"
                                           "epochs_transductive=3\nalpha=0.5\n");
  ASSERT_EQ(exit_status("train" + data() + " --config " + path("cfg.txt") + " --alpha 0.25 --out " +
                        path("m.ckpt")),
            0);
  auto manifest = nlohmann::json::parse(tzsl::read_file(path("m.ckpt.manifest.json")));
  EXPECT_EQ(manifest["config"]["alpha"], "0.25");
  EXPECT_EQ(manifest["config"]["hidden_dim"], "8");
  EXPECT_EQ(manifest["command"], "train");
  EXPECT_EQ(manifest["inputs"].size(), 2u);
}

TEST_F(Cli, BadConfigKeyIsValidationError) {
  ASSERT_EQ(synth(), 0);
  tzsl::write_file_atomic(path("cfg.txt"), "learning_rate=1\n");
  EXPECT_EQ(exit_status("train" + data() + " --config " + path("cfg.txt") + " --out " + path("m.ckpt")), 3);
}

TEST_F(Cli, ResumeAddsEpochs) {
  ASSERT_EQ(synth(), 0);
  ASSERT_EQ(exit_status("train" + data() + kFast + " --stage inductive --out " + path("a.ckpt")), 0);
  ASSERT_EQ(exit_status("train" + data() + " --resume " + path("a.ckpt") + " --extra-epochs 2 --out " +
                        path("b.ckpt")),
            0);
  auto manifest = nlohmann::json::parse(tzsl::read_file(path("b.ckpt.manifest.json")));
  EXPECT_EQ(manifest["epochs"], 5);
}

TEST_F(Cli, EvalWritesReportsAndSweepAndCvRun) {
  ASSERT_EQ(synth("--seen-test-fraction 0.25"), 0);
  ASSERT_EQ(exit_status("train" + data() + kFast + " --out " + path("m.ckpt")), 0);
  ASSERT_EQ(exit_status("eval" + data() + " --checkpoint " + path("m.ckpt") + " --mode gzsl --out " +
                        path("r.txt") + " --confusion " + path("c.csv") + " --hubness 1"),
            0);
  const auto report = tzsl::read_file(path("r.txt"));
  EXPECT_NE(report.find("hm="), std::string::npos);
  EXPECT_TRUE(fs::exists(path("r.txt.hubness")));
  EXPECT_EQ(tzsl::read_file(path("c.csv")).rfind("true\\predicted", 0), 0u);

  ASSERT_EQ(exit_status("sweep-batch" + data() + kFast + " --batch-sizes 4,8 --out " + path("sweep.csv")), 0);
  EXPECT_EQ(tzsl::split(tzsl::read_file(path("sweep.csv")), '\n').size(), 4u);  // header, 2 rows, trailing

  ASSERT_EQ(exit_status("cv" + data() + kFast + " --alphas 0,0.15 --reps 2 --val-fraction 0.25 --out " +
                        path("cv.csv")),
            0);
  auto manifest = nlohmann::json::parse(tzsl::read_file(path("cv.csv.manifest.json")));
  EXPECT_EQ(manifest["training_runs"], 4);
  EXPECT_TRUE(fs::exists(path("cv.csv.best")));
}

TEST_F(Cli, QfslNeedsGzsl) {
  ASSERT_EQ(synth("--seen-test-fraction 0.25"), 0);
  EXPECT_EQ(exit_status("eval" + data() + kFast + " --protocol qfsl --out " + path("q.txt")), 3);
}

}  // namespace
