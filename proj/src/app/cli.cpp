// Copyright 2026 The memetag Authors
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

#include "memetag/app/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "memetag/app/pipeline.hpp"
#include "memetag/app/run_config.hpp"
#include "memetag/dataset_io.hpp"

namespace memetag::app {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string split = "test";
  std::optional<std::string> method;
  std::vector<std::string> files;
  std::size_t count = 200;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "YAML run configuration")->required();
  cmd->add_option("--seed", f.seed, "overrides the config seed");
  cmd->add_option("--out", f.out, "overrides the output directory");
}

void report_record_issues(const RecordError& e, std::ostream& err) {
  for (const auto& issue : e.issues()) err << "  line " << issue.line << ": " << issue.message << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // diagnostics go to stderr so stdout carries only stage reports
  static const auto logger = [] {
    auto l = spdlog::stderr_logger_mt("memetag-cli");
    spdlog::set_default_logger(l);
    return l;
  }();
  (void)logger;

  CLI::App app{"memetag: hateful-meme tagging and classification pipeline"};
  app.require_subcommand(1);
  Flags flags;

  std::vector<std::pair<std::string, CLI::App*>> commands;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, flags);
    commands.emplace_back(name, cmd);
    return cmd;
  };
  add("enrich", "fetch entity and face labels for every split (cached)");
  add("build-inputs", "build the vocabulary, feature table and model input sequences");
  add("pretrain-itm", "pretrain the image-text matching head");
  add("train", "fine-tune every ensemble member");
  add("predict", "write per-member prediction CSVs for a split")
      ->add_option("--split", flags.split, "train, dev or test")
      ->check(CLI::IsMember({"train", "dev", "test"}));
  {
    CLI::App* cmd = add("ensemble", "combine prediction CSVs");
    cmd->add_option("--split", flags.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
    cmd->add_option("--method", flags.method, "mean or rank_mean")->check(CLI::IsMember({"mean", "rank_mean"}));
    cmd->add_option("csv", flags.files, "prediction CSVs (default: every member's CSV for the split)");
  }
  {
    CLI::App* cmd = add("evaluate", "AUROC and accuracy of a prediction CSV against a labeled split");
    cmd->add_option("--split", flags.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
    cmd->add_option("csv", flags.files, "prediction CSV (default: the ensemble CSV for the split)")->expected(0, 1);
  }
  add("make-corpus", "write a synthetic corpus to the configured split and fixture paths")
      ->add_option("--count", flags.count, "number of memes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::string command;
  for (const auto& [name, cmd] : commands) {
    if (cmd->parsed()) command = name;
  }

  try {
    if (!fs::exists(flags.config)) throw MissingArtifactError(flags.config, "config file");
    RunConfig config = load_run_config(flags.config);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out) config.paths.out = fs::absolute(*flags.out).string();

    StageOptions options;
    options.split = flags.split;
    options.method = flags.method;
    for (const auto& f : flags.files) options.files.emplace_back(f);
    options.count = flags.count;

    const StageResult result = run_stage(command, config, options);
    for (const auto& line : result.report) out << line << "\n";
    return kExitOk;
  } catch (const MissingArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const RecordError& e) {
    err << "error: " << e.what() << "\n";
    report_record_issues(e, err);
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace memetag::app
