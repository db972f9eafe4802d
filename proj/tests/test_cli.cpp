// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "difom/config.hpp"
#include "difom/errors.hpp"
#include "difom/teacher_io.hpp"

using namespace difom;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun difom_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "difom");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("difom_cli_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Small enough to train in well under a second.
std::vector<std::string> tiny_train_flags(const fs::path& out) {
  return {"train",          "--data-count",       "4",     "--data-test-count", "2",     "--model-input-size", "32",
          "--model-channels", "4, 8, 16",         "--model-latent-channels", "4", "--total-epochs", "3",
          "--phase1-end",   "1",                  "--phase2-end", "2",     "--output-dir",      out.string()};
}

}  // namespace

TEST(ConfigParser, ParsesCommentsQuotesAndLists) {
  const ConfigMap m = parse_config("# header\n\nmodel.channels = 8, 16 # ladder\noutput.dir = \"a # b\"\nx=1\n");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("model.channels").text, "8, 16");
  EXPECT_EQ(m.at("model.channels").line, 3u);
  EXPECT_EQ(m.at("output.dir").text, "a # b");
  EXPECT_EQ(parse_size_list("k", m.at("model.channels").text), (std::vector<std::size_t>{8, 16}));
}

TEST(ConfigParser, RejectsMalformedInput) {
  EXPECT_THROW(parse_config("novalue\n"), ConfigError);
  EXPECT_THROW(parse_config("Bad.Key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("a..b = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("a = \"open\n"), ConfigError);
  EXPECT_THROW(read_config("/nonexistent/difom.cfg"), MissingInputError);
}

TEST(ConfigParser, TypedConversions) {
  EXPECT_TRUE(parse_bool("k", "true"));
  EXPECT_FALSE(parse_bool("k", "off"));
  EXPECT_THROW(parse_bool("k", "maybe"), ConfigError);
  EXPECT_EQ(parse_size("k", "42"), 42u);
  EXPECT_THROW(parse_size("k", "-1"), ConfigError);
  EXPECT_THROW(parse_size("k", "4x"), ConfigError);
  EXPECT_DOUBLE_EQ(parse_double("k", "1e-4"), 1e-4);
  EXPECT_THROW(parse_double("k", "nan"), ConfigError);
  EXPECT_THROW(parse_double_list("k", ""), ConfigError);
}

TEST(CliHelp, MatchesGoldenFiles) {
  const fs::path golden = DIFOM_GOLDEN_DIR;
  EXPECT_EQ(difom_cli({"--help"}).out, slurp(golden / "help.txt"));
  for (const char* sub : {"train", "eval", "decompose", "synth", "inspect"}) {
    const CliRun r = difom_cli({sub, "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, slurp(golden / (std::string("help_") + sub + ".txt"))) << sub;
  }
}

TEST(CliHelp, TrainHelpListsEveryConfigKey) {
  const std::string help = difom_cli({"train", "--help"}).out;
  const ConfigMap desk = read_config(fs::path(DIFOM_SOURCE_DIR) / "configs" / "desk.cfg");
  for (const auto& [key, value] : desk) EXPECT_NE(help.find("[" + key + "]"), std::string::npos) << key;
}

TEST(CliExitCodes, ValidationAndMissingInput) {
  EXPECT_EQ(difom_cli({}).code, cli::kExitInvalid);
  EXPECT_EQ(difom_cli({"bogus"}).code, cli::kExitInvalid);
  EXPECT_EQ(difom_cli({"eval", "--pred", "/nonexistent"}).code, cli::kExitInvalid);  // --gt missing
  EXPECT_EQ(difom_cli({"eval", "--pred", "/nonexistent/a", "--gt", "/nonexistent/b"}).code, cli::kExitMissing);
  EXPECT_EQ(difom_cli({"inspect", "/nonexistent/x.dfom"}).code, cli::kExitMissing);
  EXPECT_EQ(difom_cli({"train", "--config", "/nonexistent/x.cfg"}).code, cli::kExitMissing);
  const CliRun r = difom_cli({"train", "--phase1-end", "0"});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("phase1_end"), std::string::npos);
  EXPECT_EQ(difom_cli({"train", "--learning-rate", "fast"}).code, cli::kExitInvalid);
}

TEST(CliExitCodes, CorruptBundleIsValidationError) {
  TempDir dir("corrupt");
  std::ofstream(dir.path / "bad.dfom") << "DFOMxxxx";
  const CliRun r = difom_cli({"inspect", (dir.path / "bad.dfom").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliExitCodes, ThreadCapMustBePositive) {
  TempDir dir("threads");
  ASSERT_EQ(difom_cli({"synth", "--count", "2", "--size", "16", "--out", dir.path.string()}).code, 0);
  const std::string masks = (dir.path / "masks").string();
  setenv("DIFOM_THREADS", "0", 1);
  EXPECT_EQ(difom_cli({"eval", "--pred", masks, "--gt", masks}).code, cli::kExitInvalid);
  setenv("DIFOM_THREADS", "3", 1);
  const CliRun r = difom_cli({"eval", "--pred", masks, "--gt", masks});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("threads = 3"), std::string::npos);
  unsetenv("DIFOM_THREADS");
}

TEST(CliConfig, UnknownKeyRejected) {
  TempDir dir("unknown");
  std::ofstream(dir.path / "c.cfg") << "train.total_epochs = 3\ntrain.warmup = 2\n";
  const CliRun r = difom_cli({"train", "--config", (dir.path / "c.cfg").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("train.warmup"), std::string::npos);
  EXPECT_NE(r.err.find(":2:"), std::string::npos);
}

TEST(CliConfig, FlagsOverrideFileAndResolvedConfigIsPrinted) {
  TempDir dir("override");
  std::ofstream(dir.path / "c.cfg") << "train.seed = 5\ntrain.learning_rate = 0.002\ntrain.total_epochs = 0\n";
  // total_epochs = 0 in the file is invalid, so the run stops after printing the resolved config.
  const CliRun r = difom_cli({"train", "--config", (dir.path / "c.cfg").string(), "--seed", "7"});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.out.find("train.seed = 7\n"), std::string::npos);
  EXPECT_NE(r.out.find("train.learning_rate = 0.002\n"), std::string::npos);
  // The printed block is itself a valid configuration with every key.
  const std::string block = r.out.substr(r.out.find('\n') + 1);
  const ConfigMap printed = parse_config(block);
  EXPECT_EQ(printed.at("train.total_epochs").text, "0");
  for (const auto& [key, value] : read_config(fs::path(DIFOM_SOURCE_DIR) / "configs" / "desk.cfg")) {
    EXPECT_EQ(printed.count(key), 1u) << key;
  }
  const std::string help = difom_cli({"train", "--help"}).out;
  for (const auto& [key, value] : printed) EXPECT_NE(help.find("[" + key + "]"), std::string::npos) << key;
}

TEST(CliTrain, DeterministicAcrossRuns) {
  TempDir dir("determinism");
  auto flags_a = tiny_train_flags(dir.path / "a");
  auto flags_b = tiny_train_flags(dir.path / "b");
  const CliRun a = difom_cli(flags_a), b = difom_cli(flags_b);
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir.path / "a" / "report.csv"), slurp(dir.path / "b" / "report.csv"));
  EXPECT_EQ(slurp(dir.path / "a" / "train_log.csv"), slurp(dir.path / "b" / "train_log.csv"));
  for (const char* ck : {"phase1.dfck", "phase2.dfck", "final.dfck"}) {
    EXPECT_TRUE(fs::exists(dir.path / "a" / "checkpoints" / ck)) << ck;
  }
  EXPECT_FALSE(fs::exists(dir.path / "a" / "checkpoints.partial"));
  EXPECT_TRUE(fs::exists(dir.path / "a" / "predictions" / "heldout_0.png"));
  EXPECT_NE(a.out.find("held-out mDice"), std::string::npos);
}

TEST(CliTrain, MissingTeacherDirectory) {
  TempDir dir("noteachers");
  auto flags = tiny_train_flags(dir.path / "out");
  for (const char* f : {"--teacher-source", "directory", "--teacher-dir", "/nonexistent/teachers"}) flags.push_back(f);
  const CliRun r = difom_cli(flags);
  EXPECT_EQ(r.code, cli::kExitMissing);
  EXPECT_NE(r.err.find("teacher directory"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.path / "out" / "checkpoints"));
}

TEST(CliTrain, SegOnlyTwinNeedsNoTeachers) {
  TempDir dir("segonly");
  auto flags = tiny_train_flags(dir.path / "out");
  for (const char* f : {"--teacher-source", "directory", "--teacher-dir", "/nonexistent/teachers", "--distillation",
                        "false"}) {
    flags.push_back(f);
  }
  const CliRun r = difom_cli(flags);
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("model.distillation = true"), std::string::npos);
  EXPECT_NE(r.out.find("train.distillation = false"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path / "out" / "checkpoints" / "final.dfck"));
}

TEST(CliTrain, FailureInPhaseTwoLeavesNoCheckpoints) {
  TempDir dir("partial");
  fs::create_directories(dir.path / "empty_teachers");
  auto flags = tiny_train_flags(dir.path / "out");
  for (std::string f : {"--teacher-source", "directory", "--teacher-dir"}) flags.push_back(f);
  flags.push_back((dir.path / "empty_teachers").string());
  const CliRun r = difom_cli(flags);
  EXPECT_EQ(r.code, cli::kExitMissing) << r.err;
  EXPECT_FALSE(fs::exists(dir.path / "out" / "checkpoints"));
  EXPECT_FALSE(fs::exists(dir.path / "out" / "checkpoints.partial"));
}

TEST(CliTrain, DirectoryTeachersFromSynth) {
  TempDir dir("dirteachers");
  ASSERT_EQ(difom_cli({"synth", "--count", "4", "--size", "32", "--out", (dir.path / "ds").string(), "--teachers"}).code,
            0);
  auto flags = tiny_train_flags(dir.path / "out");
  const std::string ds = (dir.path / "ds").string();
  flags.insert(flags.end(), {"--data-train-dir", ds, "--data-test-dir", ds, "--teacher-source", "directory",
                             "--teacher-dir", ds + "/teachers"});
  const CliRun r = difom_cli(flags);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("teacher loads 4"), std::string::npos) << r.out;
}

TEST(CliSynthEval, MasksAgainstThemselvesArePerfect) {
  TempDir dir("synth");
  const CliRun s = difom_cli({"synth", "--count", "3", "--size", "32", "--seed", "4", "--out", dir.path.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  const std::string masks = (dir.path / "masks").string();
  const CliRun e = difom_cli({"eval", "--pred", masks, "--gt", masks, "--out", (dir.path / "r.csv").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  for (const char* line : {"images 3", "m_dice 1.0000", "m_iou 1.0000", "f_beta_w 1.0000", "s_alpha 1.0000",
                           "e_phi_max 1.0000", "mae 0.0000"}) {
    EXPECT_NE(e.out.find(line), std::string::npos) << line;
  }
  EXPECT_TRUE(fs::exists(dir.path / "r.csv"));
  const CliRun f = difom_cli({"eval", "--pred", masks, "--gt", masks, "--fixed-threshold"});
  EXPECT_EQ(f.code, 0);
  EXPECT_NE(f.out.find("fixed_threshold = 0.5"), std::string::npos);
}

TEST(CliInspect, ReportsRecordsAndDStar) {
  TempDir dir("inspect");
  std::vector<TeacherRecord> recs = {{"sam-vit-b", FeatureMap(5, 4, 4, 0.5f)}, {"dinov2", FeatureMap(3, 2, 2, 1.0f)}};
  write_bundle(recs, dir.path / "b.dfom");
  const CliRun r = difom_cli({"inspect", (dir.path / "b.dfom").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sam-vit-b"), std::string::npos);
  EXPECT_NE(r.out.find("records 2"), std::string::npos);
  EXPECT_NE(r.out.find("d_star 8"), std::string::npos);
}

TEST(CliDecompose, WritesTwoImagesPerDumpedChannel) {
  TempDir dir("decompose");
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureMap f(6, 8, 8);
  for (float& v : f.data()) v = n(rng);
  write_bundle(std::vector<TeacherRecord>{{"m", f}}, dir.path / "b.dfom");
  for (auto [limit, expected] : {std::pair<int, int>{4, 8}, {16, 12}}) {
    const fs::path out = dir.path / ("out" + std::to_string(limit));
    const CliRun r = difom_cli({"decompose", "--bundle", (dir.path / "b.dfom").string(), "--out", out.string(),
                             "--resolution", "8", "--max-channels", std::to_string(limit)});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(std::distance(fs::directory_iterator(out), fs::directory_iterator{}), expected);
  }
  EXPECT_EQ(difom_cli({"decompose", "--bundle", (dir.path / "b.dfom").string(), "--out", (dir.path / "x").string(),
                       "--cutoff", "1.5"})
                .code,
            cli::kExitInvalid);
}
