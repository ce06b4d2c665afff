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

#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.h"
#include "sprl/error.h"

int main(int argc, char** argv) {
  using namespace sprl::cli;

  CLI::App app{"Source prompt library: build, retrieve, select, evaluate, ablate"};
  app.require_subcommand(1);

  BuildLibraryArgs build;
  auto* build_cmd = app.add_subcommand("build-library", "Sample training-instance keys into a library file");
  build_cmd->add_option("--keys", build.keys, "Key file (JSON lines with embedding_id)")->required();
  build_cmd->add_option("--embeddings", build.embeddings, "Embedding file (JSON lines)")->required();
  build_cmd->add_option("--n", build.n, "Instances kept per prompt")->capture_default_str();
  build_cmd->add_option("--method", build.method, "random|clustering|distributed")->capture_default_str();
  build_cmd->add_option("--seed", build.seed)->capture_default_str();
  build_cmd->add_option("--out", build.out, "Output .splb path")->required();

  RetrieveArgs retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Sample queries and tally top-N MIPS hits");
  retrieve_cmd->add_option("--library", retrieve.library)->required();
  retrieve_cmd->add_option("--queries", retrieve.queries, "Key file of task instances")->required();
  retrieve_cmd->add_option("--q", retrieve.q, "Queries sampled")->capture_default_str();
  retrieve_cmd->add_option("--top-n", retrieve.top_n, "Hits per query")->capture_default_str();
  retrieve_cmd->add_option("--seed", retrieve.seed)->capture_default_str();
  retrieve_cmd->add_flag("--cosine", retrieve.cosine, "Score by cosine instead of raw inner product");
  retrieve_cmd->add_option("--threads", retrieve.threads)->capture_default_str();
  retrieve_cmd->add_option("--out", retrieve.out, "Output tally.json")->required();

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Turn a tally into a soft prompt");
  select_cmd->add_option("--tally", select.tally)->required();
  select_cmd->add_option("--strategy", select.strategy, "freq|inter|var|var-inter")->capture_default_str();
  select_cmd->add_option("--n-prime", select.n_prime, "Candidates blended by interpolation")->capture_default_str();
  select_cmd->add_option("--probes", select.probes, "Probe table (JSON lines), for var strategies");
  select_cmd->add_option("--hard-prompt", select.hard_prompt, "Hard prompt id used to look up probes");
  select_cmd->add_option("--library", select.library, "Library used to materialize the blended prompt");
  select_cmd->add_option("--out", select.out, "Output selection.json")->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run the full pipeline on a task");
  evaluate_cmd->add_option("--library", evaluate.library)->required();
  evaluate_cmd->add_option("--task", evaluate.task)->required();
  evaluate_cmd->add_option("--strategy", evaluate.strategy, "freq|inter|var|var-inter")->capture_default_str();
  evaluate_cmd->add_option("--q", evaluate.q)->capture_default_str();
  evaluate_cmd->add_option("--top-n", evaluate.top_n)->capture_default_str();
  evaluate_cmd->add_option("--n-prime", evaluate.n_prime)->capture_default_str();
  evaluate_cmd->add_option("--seed", evaluate.seed, "First seed")->capture_default_str();
  evaluate_cmd->add_option("--seeds", evaluate.seeds, "Number of seeds averaged")->capture_default_str();
  evaluate_cmd->add_flag("--oracle", evaluate.oracle, "Also evaluate the best retrieved candidate");
  evaluate_cmd->add_flag("--cosine", evaluate.cosine);
  evaluate_cmd->add_option("--threads", evaluate.threads)->capture_default_str();
  evaluate_cmd->add_option("--report", evaluate.report, "Output report.json")->required();

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation grid on a synthetic world");
  ablate_cmd->add_option("--grid", ablate.grid, "JSON object: axis -> values")->required();
  ablate_cmd->add_option("--base", ablate.base, "JSON base configuration")->required();
  ablate_cmd->add_option("--out", ablate.out, "Output table.csv")->required();
  ablate_cmd->add_option("--reports", ablate.reports, "Optional JSON dump of every cell report");

  GenerateWorldArgs world;
  auto* world_cmd = app.add_subcommand("generate-world", "Write a planted-optimum synthetic world");
  world_cmd->add_option("--config", world.config, "World config JSON");
  world_cmd->add_option("--seed", world.seed)->capture_default_str();
  world_cmd->add_option("--out-dir", world.out_dir)->required();

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check a file against its format");
  validate_cmd->add_option("--kind", validate.kind, "keys|embeddings|probes|records|library|task")->required();
  validate_cmd->add_option("--file", validate.file)->required();

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a transcribed per-prompt retrieval table");
  replay_cmd->add_option("--fixture", replay.fixture)->required();
  replay_cmd->add_option("--out", replay.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*build_cmd) BuildLibraryCommand(build);
    if (*retrieve_cmd) RetrieveCommand(retrieve);
    if (*select_cmd) SelectCommand(select);
    if (*evaluate_cmd) EvaluateCommand(evaluate);
    if (*ablate_cmd) AblateCommand(ablate);
    if (*world_cmd) GenerateWorldCommand(world);
    if (*validate_cmd) return ValidateCommand(validate);
    if (*replay_cmd) ReplayCommand(replay);
  } catch (const sprl::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const sprl::ProviderError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const sprl::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  }
  return kExitOk;
}
