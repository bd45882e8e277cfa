// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end tests of the apf binary: exit codes, run-directory contents and
// byte-level reproducibility.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apf/io.hpp"
#include "test_support.hpp"

namespace apf {
namespace {

namespace fs = std::filesystem;
using testing_support::read_file;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs `apf <args>` inside `cwd`.
Result run(const fs::path& cwd, const std::string& args) {
  const auto out = cwd / ".stdout", err = cwd / ".stderr";
  const std::string cmd = "cd '" + cwd.string() + "' && '" APF_CLI_PATH "' " + args + " > '" + out.string() +
                          "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

const std::string kSmallSynth = "synth --out data --videos 30 --frames 60 --seed 5";
const std::string kShortTrain = "--epochs-a 2 --epochs-b 2";

fs::path with_data(const std::string& extra = "") {
  const auto dir = testing_support::scratch_dir();
  const auto r = run(dir, kSmallSynth + " " + extra);
  EXPECT_EQ(r.code, 0) << r.err;
  return dir;
}

TEST(Cli, HelpOnEveryCommand) {
  const auto dir = testing_support::scratch_dir();
  EXPECT_EQ(run(dir, "--help").code, 0);
  for (const char* c : {"synth", "train", "predict", "evaluate", "ablate", "audit", "gradcheck"}) {
    const auto r = run(dir, std::string(c) + " --help");
    EXPECT_EQ(r.code, 0) << c;
    EXPECT_NE(r.out.find("--out"), std::string::npos) << c;
  }
}

TEST(Cli, UsageErrorsExit64) {
  const auto dir = testing_support::scratch_dir();
  EXPECT_EQ(run(dir, "").code, 64);
  EXPECT_EQ(run(dir, "frobnicate").code, 64);
  EXPECT_EQ(run(dir, "synth --out x --no-such-flag").code, 64);
  EXPECT_EQ(run(dir, "synth --videos 3").code, 64);  // --out is required
  EXPECT_EQ(run(dir, "synth --out x --bias female:Q:0.1").code, 64);
  EXPECT_EQ(run(dir, "synth --out x --ethnicity-shares 0.5,0.5").code, 64);
  EXPECT_EQ(run(dir, "gradcheck --out x --audio loud").code, 64);
  EXPECT_EQ(run(dir, "gradcheck --out x --attributes emotion,height").code, 64);
}

TEST(Cli, MissingManifestExits2) {
  const auto dir = testing_support::scratch_dir();
  const auto r = run(dir, "train --out run --manifest nowhere/manifest.jsonl");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos) << r.err;
}

TEST(Cli, SchemaErrorsExit3) {
  const auto dir = with_data();
  auto manifest = read_file(dir / "data" / "manifest.jsonl");
  const auto pos = manifest.find("\"O\":");
  ASSERT_NE(pos, std::string::npos);
  manifest.replace(pos, 4, "\"O\":7,\"X\":");
  testing_support::write_file(dir / "data" / "manifest.jsonl", manifest);
  const auto r = run(dir, "audit --out run --manifest data/manifest.jsonl");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("manifest.jsonl:2"), std::string::npos) << r.err;  // line 1 is the header
}

TEST(Cli, SynthIsByteDeterministic) {
  const auto a = with_data(), b = with_data();
  const auto listing = read_file(a / "data" / "produced_files.txt");
  EXPECT_EQ(listing, read_file(b / "data" / "produced_files.txt"));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a / "data")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(read_file(e.path()), read_file(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 30u);  // manifest, series and embeddings for 30 videos, plus run files
  EXPECT_NE(listing.find("manifest.jsonl\t"), std::string::npos);
}

TEST(Cli, SynthEchoesBiasOffsets) {
  const auto dir = with_data("--bias female:O:+0.05 --bias asian:N:-0.1");
  const auto j = nlohmann::json::parse(read_file(dir / "data" / "config.json"));
  EXPECT_EQ(j["command"], "synth");
  EXPECT_DOUBLE_EQ(j["generator"]["bias_offsets"]["female"]["O"].get<double>(), 0.05);
  EXPECT_DOUBLE_EQ(j["generator"]["bias_offsets"]["asian"]["N"].get<double>(), -0.1);
  EXPECT_EQ(j["generator"]["videos"], 30);
}

TEST(Cli, EvaluatePerfectPredictionsScoresOne) {
  const auto dir = with_data();
  const auto d = load_dataset(dir / "data" / "manifest.jsonl");
  std::vector<Prediction> p;
  for (const auto& r : d.records_in(Split::test)) p.push_back({r.video_id, r.labels});
  write_predictions(p, dir / "exact.tsv");
  const auto r = run(dir, "evaluate --out eval --manifest data/manifest.jsonl --predictions exact.tsv --baseline");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("predictions\t1.0000\t1.0000\t1.0000\t1.0000\t1.0000\t1.0000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mean_baseline\t0."), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("improved_share_at_0\t-\t1.0000"), std::string::npos) << r.out;
  for (const char* f : {"metrics.tsv", "baseline_metrics.tsv", "baseline_predictions.tsv", "residual_curve.tsv",
                        "residual_curve.svg", "residual_curve_O.tsv", "top_improvers.tsv", "summary.txt",
                        "config.json", "produced_files.txt"})
    EXPECT_TRUE(fs::exists(dir / "eval" / f)) << f;
}

TEST(Cli, EvaluateRejectsUnknownVideos) {
  const auto dir = with_data();
  write_predictions(std::vector<Prediction>{{"ghost", TraitVector{}}}, dir / "ghost.tsv");
  EXPECT_EQ(run(dir, "evaluate --out eval --manifest data/manifest.jsonl --predictions ghost.tsv").code, 3);
}

TEST(Cli, TrainPredictEvaluatePipeline) {
  const auto dir = with_data();
  auto r = run(dir, "train --out model --manifest data/manifest.jsonl --seed 1 " + kShortTrain);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"model.apfm", "train_log.tsv", "learning_curve.svg", "skipped.txt"})
    EXPECT_TRUE(fs::exists(dir / "model" / f)) << f;
  const auto log = read_file(dir / "model" / "train_log.tsv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);
  r = run(dir, "predict --out pred --manifest data/manifest.jsonl --model model/model.apfm");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto preds = read_predictions(dir / "pred" / "predictions.tsv");
  EXPECT_EQ(preds.size(), 6u);  // 30 videos -> 6 test videos
  r = run(dir, "evaluate --out eval --manifest data/manifest.jsonl --predictions pred/predictions.tsv --baseline");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "eval" / "top_improvers.tsv"));
}

TEST(Cli, CorruptCheckpointIsSchemaError) {
  const auto dir = with_data();
  testing_support::write_file(dir / "bad.apfm", "APFMgarbage");
  EXPECT_EQ(run(dir, "predict --out pred --manifest data/manifest.jsonl --model bad.apfm").code, 3);
}

TEST(Cli, AblateWritesOneRowPerConfig) {
  const auto dir = with_data();
  const auto r = run(dir, "ablate --out abl --manifest data/manifest.jsonl --grid audio --jobs 2 " + kShortTrain);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = read_file(dir / "abl" / "ablation.tsv");
  EXPECT_EQ(table.rfind("group\tconfig\tAvg.\tO\tC\tE\tA\tN\tstatus\n", 0), 0u) << table;
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_NE(table.find("audio_slices\tV+Audio first_half\t"), std::string::npos);
  EXPECT_NE(r.out.find("V+Audio whole"), std::string::npos);
  EXPECT_EQ(run(dir, "ablate --out abl2 --manifest data/manifest.jsonl --grid shapes").code, 64);
}

TEST(Cli, AuditWritesEveryReport) {
  const auto dir = with_data();
  const auto r = run(dir, "audit --out audit --manifest data/manifest.jsonl --extremes-split all");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"group_stats.tsv", "group_stats_long.tsv", "age_trend.tsv", "age_trend_C.tsv", "age_trend.svg",
                        "attractiveness_extremes.tsv", "attractiveness_E_top.tsv", "attractiveness_E_bottom.tsv",
                        "attractiveness_E.svg", "emotion_frequencies.tsv", "emotions_E_top.tsv"})
    EXPECT_TRUE(fs::exists(dir / "audit" / f)) << f;
  EXPECT_NE(r.out.find("videos_per_extreme\t3"), std::string::npos) << r.out;
  EXPECT_EQ(run(dir, "audit --out a2 --manifest data/manifest.jsonl --fraction 0.9").code, 64);
}

TEST(Cli, GradcheckPasses) {
  const auto dir = testing_support::scratch_dir();
  const auto r = run(dir, "gradcheck --out gc --samples 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("status\tok"), std::string::npos) << r.out;
  EXPECT_EQ(run(dir, "gradcheck --out gc2 --samples 1 --tolerance 1e-30").code, 4);
}

}  // namespace
}  // namespace apf
