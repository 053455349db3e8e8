// Copyright 2026 The Psychstate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli/commands.hpp"
#include "test_support.hpp"

namespace psychstate::cli {
namespace {

struct Result {
  int code;
  std::string out;
  std::string log;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, log;
  const int code = run(args, out, log);
  return {code, out.str(), log.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// A small but complete run: every path under `dir`.
std::vector<std::string> small_run(const test::TempDir& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {
      "--total", "80", "--epochs", "2", "--hidden", "8", "--d_text", "8", "--batch_size", "16",
      "--svm_epochs", "10", "--min_count", "1",
      "--dataset", (dir / "d.jsonl").string(), "--checkpoint", (dir / "m.psym").string(),
      "--history", (dir / "h.csv").string(), "--report_dir", (dir / "report").string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

std::vector<std::string> cmd(const std::string& sub, std::vector<std::string> rest) {
  rest.insert(rest.begin(), sub);
  return rest;
}

TEST(Cli, GenPrintsTallies) {
  test::TempDir dir;
  const auto r = invoke({"gen", "--dataset", (dir / "d.jsonl").string()});
  EXPECT_EQ(r.code, kExitOk) << r.log;
  EXPECT_NE(r.out.find("| Engagement | 70 | 320 | 110 |"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("| Stress | 40 | 410 | 50 |"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "d.jsonl"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(invoke({"gen", "--not_a_key", "1"}).code, kExitConfig);
  EXPECT_EQ(invoke({"gen", "--total", "abc"}).code, kExitConfig);
  EXPECT_EQ(invoke({}).code, kExitConfig);
  EXPECT_EQ(invoke({"gen", "--protocol", "holdout"}).code, kExitConfig);
  test::TempDir dir;
  std::ofstream(dir / "c.toml") << "seed = 1\nlearning_rate = 0.1\n";
  const auto r = invoke({"gen", "--config", (dir / "c.toml").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.log.find("learning_rate"), std::string::npos) << r.log;
  EXPECT_EQ(invoke({"gen", "--config", (dir / "absent.toml").string()}).code, kExitConfig);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, MissingArtifactsExitThree) {
  test::TempDir dir;
  EXPECT_EQ(invoke({"eval", "--checkpoint", (dir / "none.psym").string()}).code, kExitMissingArtifact);
  EXPECT_EQ(invoke({"train", "--dataset", (dir / "none.jsonl").string()}).code, kExitMissingArtifact);
  EXPECT_EQ(invoke({"report", "--series", (dir / "none.csv").string()}).code, kExitMissingArtifact);
}

TEST(Cli, VerifyQuickAndInjectedFault) {
  EXPECT_EQ(invoke({"verify", "--quick"}).code, kExitOk);
  const auto bad = invoke({"verify", "--quick", "--inject_fault", "head_stress.M"});
  EXPECT_EQ(bad.code, kExitVerification);
  EXPECT_NE(bad.out.find("gradcheck FAIL tensor head_stress.M"), std::string::npos) << bad.out;
}

TEST(Cli, TrainEvalInferReportAreDeterministic) {
  test::TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    ASSERT_EQ(invoke(cmd("gen", small_run(*dir))).code, kExitOk);
    const auto t = invoke(cmd("train", small_run(*dir)));
    ASSERT_EQ(t.code, kExitOk) << t.log;
    const auto e = invoke(cmd("eval", small_run(*dir)));
    ASSERT_EQ(e.code, kExitOk) << e.log;
    EXPECT_NE(e.out.find("Multimodal BiLSTM + attention"), std::string::npos);
    EXPECT_NE(e.out.find("Prosody-only SVM"), std::string::npos);
  }
  EXPECT_EQ(slurp(a / "h.csv"), slurp(b / "h.csv"));
  EXPECT_EQ(slurp(a / "report" / "metrics.csv"), slurp(b / "report" / "metrics.csv"));
  EXPECT_EQ(slurp(a / "report" / "comparison.md"), slurp(b / "report" / "comparison.md"));
}

TEST(Cli, InferEmitsPredictionAndIntervention) {
  test::TempDir dir;
  ASSERT_EQ(invoke(cmd("gen", small_run(dir))).code, kExitOk);
  ASSERT_EQ(invoke(cmd("train", small_run(dir))).code, kExitOk);
  const auto r = invoke(cmd("infer", small_run(dir, {"--text", "I keep failing at loops and I am so stressed",
                                                     "--kg_epochs", "20"})));
  ASSERT_EQ(r.code, kExitOk) << r.log;
  std::istringstream lines(r.out);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  const auto p = nlohmann::json::parse(first);
  EXPECT_EQ(p["type"], "prediction");
  EXPECT_EQ(p["modality_indicator"], 0);
  double sum = 0;
  for (double v : p["probs"]["stress"]) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  const auto i = nlohmann::json::parse(second);
  EXPECT_EQ(i["type"], "intervention");
  EXPECT_TRUE(i.contains("kg_prompt"));
  EXPECT_EQ(invoke(cmd("infer", small_run(dir))).code, kExitConfig);  // no --text
}

TEST(Cli, ReportFromSeries) {
  test::TempDir dir;
  std::ofstream(dir / "s.csv") << "instrument,time,mean,std\nPSS,T0,22.4,5.1\nPSS,T2,18.1,4.7\n";
  const auto r = invoke({"report", "--series", (dir / "s.csv").string(), "--report_dir", (dir / "r").string()});
  ASSERT_EQ(r.code, kExitOk) << r.log;
  EXPECT_NE(r.out.find("-19.2%"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "r" / "trend.svg"));
  const auto empty = invoke({"report", "--report_dir", (dir / "e").string()});
  EXPECT_EQ(empty.code, kExitOk);
  EXPECT_NE(empty.out.find("no data"), std::string::npos);
}

}  // namespace
}  // namespace psychstate::cli
