// Command-line front end. Talks to the library only through the C API.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "localregret/localregret.h"

namespace {

int finish(lr_status status, lr_report* report) {
  if (status != LR_OK) {
    std::fprintf(stderr, "error: %s\n", lr_last_error());
    return status == LR_ERR_CONFIG || status == LR_ERR_ARGUMENT ? 2 : 1;
  }
  std::fputs(lr_report_text(report), stdout);
  const int code = lr_report_exit_code(report);
  lr_report_destroy(report);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online non-convex learning with local regret"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds;
  int parallelism = 1;
  auto* run = app.add_subcommand("run", "Run every experiment in a JSON config");
  run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory for traces and summaries");
  run->add_option("--seed-override", seeds, "Replace each experiment's seeds")->delimiter(',');
  run->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> summaries;
  auto* verify = app.add_subcommand("verify", "Re-check the bounds recorded in summary files");
  verify->add_option("summaries", summaries, "summary.json files");

  auto* list = app.add_subcommand("list-builtins", "List the built-in loss families");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  lr_report* report = nullptr;
  if (*run) {
    lr_run_options opts{};
    opts.out_dir = out_dir.c_str();
    opts.seed_override = seeds.empty() ? nullptr : seeds.data();
    opts.seed_override_count = seeds.size();
    opts.parallelism = parallelism;
    const lr_status status = lr_run_config(config.c_str(), &opts, &report);
    return finish(status, report);
  }
  if (*verify) {
    std::vector<const char*> paths;
    for (const auto& s : summaries) paths.push_back(s.c_str());
    const lr_status status = lr_verify(paths.data(), paths.size(), &report);
    return finish(status, report);
  }
  if (*list) {
    const lr_status status = lr_list_builtins(&report);
    return finish(status, report);
  }
  return 2;
}
