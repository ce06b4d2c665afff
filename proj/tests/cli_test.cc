// Copyright 2026 The sprl Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#ifndef SPRL_CLI_PATH
#error "SPRL_CLI_PATH must name the CLI binary"
#endif

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "sprl_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  // Exit status of `sprl <args>`, output captured to a log file.
  static int Run(const std::string& args) {
    const std::string cmd =
        std::string(SPRL_CLI_PATH) + " " + args + " > " + (dir_ / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string LastLog() { return Slurp(dir_ / "last.log"); }
  static std::string Slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  static std::string P(const std::string& name) { return (dir_ / name).string(); }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, EndToEndFlow) {
  ASSERT_EQ(Run("generate-world --seed 3 --out-dir " + P("w")), 0) << LastLog();
  for (const char* f : {"embeddings.jsonl", "keys.jsonl", "queries.jsonl", "task.json", "probes.jsonl", "world.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "w" / f)) << f;
  }
  ASSERT_EQ(Run("validate --kind keys --file " + P("w/keys.jsonl")), 0) << LastLog();
  ASSERT_EQ(Run("validate --kind embeddings --file " + P("w/embeddings.jsonl")), 0) << LastLog();
  ASSERT_EQ(Run("validate --kind probes --file " + P("w/probes.jsonl")), 0) << LastLog();
  ASSERT_EQ(Run("validate --kind task --file " + P("w/task.json")), 0) << LastLog();

  ASSERT_EQ(Run("build-library --keys " + P("w/keys.jsonl") + " --embeddings " + P("w/embeddings.jsonl") +
                " --n 50 --method clustering --seed 1 --out " + P("lib.splb")),
            0)
      << LastLog();
  ASSERT_EQ(Run("validate --kind library --file " + P("lib.splb")), 0) << LastLog();

  ASSERT_EQ(Run("retrieve --library " + P("lib.splb") + " --queries " + P("w/queries.jsonl") +
                " --q 32 --top-n 10 --seed 5 --threads 2 --out " + P("tally.json")),
            0)
      << LastLog();
  const auto tally = Json::parse(Slurp(dir_ / "tally.json"));
  EXPECT_EQ(tally["total"], 320);
  EXPECT_EQ(tally["hits"].size(), 32u);
  const std::string planted = Json::parse(Slurp(dir_ / "w/world.json"))["planted_id"];

  ASSERT_EQ(Run("select --tally " + P("tally.json") + " --strategy freq --library " + P("lib.splb") + " --out " +
                P("sel.json")),
            0)
      << LastLog();
  const auto sel = Json::parse(Slurp(dir_ / "sel.json"));
  EXPECT_EQ(sel["chosen"].size(), 1u);
  EXPECT_EQ(sel["chosen"][0]["weight"], 1.0);
  EXPECT_EQ(sel["prompt"]["values"].size(), sel["prompt"]["prefix_len"].get<int>() * sel["prompt"]["model_dim"].get<int>());

  const std::string hp = Json::parse(Slurp(dir_ / "w/task.json"))["hard_prompt_ids"][0];
  ASSERT_EQ(Run("select --tally " + P("tally.json") + " --strategy var-inter --probes " + P("w/probes.jsonl") +
                " --hard-prompt " + hp + " --out " + P("sel_var.json")),
            0)
      << LastLog();
  const auto sel_var = Json::parse(Slurp(dir_ / "sel_var.json"));
  EXPECT_EQ(sel_var["scores"].size(), tally["counts"].size());
  double w = 0;
  for (const auto& c : sel_var["chosen"]) w += c["weight"].get<double>();
  EXPECT_NEAR(w, 1.0, 1e-9);

  ASSERT_EQ(Run("evaluate --library " + P("lib.splb") + " --task " + P("w/task.json") +
                " --strategy var --seeds 2 --oracle --report " + P("report.json")),
            0)
      << LastLog();
  const auto report = Json::parse(Slurp(dir_ / "report.json"));
  EXPECT_EQ(report["seeds"].size(), 2u);
  EXPECT_GE(report["mean"].get<double>(), 0.0);
  EXPECT_LE(report["mean"].get<double>(), 1.0);
}

TEST_F(CliTest, ReplayFixture) {
  ASSERT_EQ(Run(std::string("replay --fixture ") + SPRL_FIXTURE_DIR + "/rte_retrievals.json --out " + P("replay.json")),
            0)
      << LastLog();
  EXPECT_NE(LastLog().find("retrieved 71.30"), std::string::npos) << LastLog();
}

TEST_F(CliTest, AblateWritesTable) {
  std::ofstream(dir_ / "grid.json") << R"({"Q": [1, 8]})";
  std::ofstream(dir_ / "base.json")
      << R"({"world": {"instances_per_embedding": 30, "task_instances": 20, "hard_prompts": 1}, "seeds": 1, "n_per_prompt": 10})";
  ASSERT_EQ(Run("ablate --grid " + P("grid.json") + " --base " + P("base.json") + " --out " + P("table.csv")), 0)
      << LastLog();
  const auto csv = Slurp(dir_ / "table.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("Q,strategy,", 0), 0u) << csv;
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("retrieve --library x"), 2);
  EXPECT_EQ(Run("frobnicate"), 2);

  std::ofstream(dir_ / "tally_bad.json") << R"({"total": 2, "counts": {"a": 2}})";
  EXPECT_EQ(Run("select --tally " + P("tally_bad.json") + " --strategy best --out " + P("x.json")), 2) << LastLog();
  EXPECT_EQ(Run("select --tally " + P("tally_bad.json") + " --strategy var --out " + P("x.json")), 2) << LastLog();

  std::ofstream(dir_ / "garbage.splb") << "NOPE and some more bytes here";
  EXPECT_EQ(Run("validate --kind library --file " + P("garbage.splb")), 3) << LastLog();
  EXPECT_NE(LastLog().find("E_BAD_MAGIC"), std::string::npos) << LastLog();
  EXPECT_EQ(Run("retrieve --library " + P("garbage.splb") + " --queries q --out " + P("t.json")), 3) << LastLog();
  EXPECT_EQ(Run("retrieve --library " + P("missing.splb") + " --queries q --out " + P("t.json")), 3) << LastLog();

  std::ofstream(dir_ / "keys_bad.jsonl") << "{\"embedding_id\": \"a\", \"key\": [1, 2]}\n{oops}\n";
  EXPECT_EQ(Run("validate --kind keys --file " + P("keys_bad.jsonl")), 3);
  EXPECT_NE(LastLog().find("line 2"), std::string::npos) << LastLog();
  EXPECT_EQ(Run("validate --kind pictures --file " + P("keys_bad.jsonl")), 2);
}

}  // namespace
