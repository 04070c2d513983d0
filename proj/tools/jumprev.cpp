// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the C API.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jumprev/jumprev.h"

namespace {

struct Options {
  std::string config;
  std::string demo;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> n_paths;
};

void add_common(CLI::App* cmd, Options& o, bool config_source) {
  if (config_source) {
    auto* c = cmd->add_option("--config", o.config, "Configuration file (JSON)")->check(CLI::ExistingFile);
    auto* d = cmd->add_option("--demo", o.demo, "Bundled demo preset instead of a file");
    c->excludes(d);
  }
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed (overrides run.seed)");
  cmd->add_option("--threads", o.threads, "Worker threads (overrides run.threads and JUMPREV_THREADS)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--n-paths", o.n_paths, "Number of paths (overrides run.n_paths)");
}

int report(jr_status s) {
  if (s != JR_OK && jr_last_message()[0] != '\0') std::cerr << "error: " << jr_last_message() << '\n';
  return static_cast<int>(s);
}

jr_config* load(const Options& o) {
  jr_config* cfg = nullptr;
  jr_status s = JR_OK;
  if (!o.demo.empty()) {
    s = jr_config_from_demo(o.demo.c_str(), &cfg);
  } else if (!o.config.empty()) {
    s = jr_config_from_file(o.config.c_str(), &cfg);
  } else {
    std::cerr << "error: one of --config or --demo is required\n";
    return nullptr;
  }
  if (s != JR_OK) {
    report(s);
    return nullptr;
  }
  if (o.seed) jr_config_set_seed(cfg, *o.seed);
  if (o.threads) jr_config_set_threads(cfg, *o.threads);
  if (o.n_paths) jr_config_set_n_paths(cfg, *o.n_paths);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time reversal of jump processes: simulate, reverse, verify"};
  app.require_subcommand(1);
  Options o;

  using Runner = jr_status (*)(const jr_config*, const char*);
  struct Command {
    const char* name;
    const char* help;
    Runner run;
  };
  const Command commands[] = {
      {"simulate", "Simulate an ensemble (ensemble.jsonl, summary.csv)", jr_run_simulate},
      {"marginals", "Time marginals (marginals.csv)", jr_run_marginals},
      {"reverse", "Backward characteristics (backward_kernel.csv, backward_drift.csv, ...)", jr_run_reverse},
      {"verify", "Compare reversed-path intensities with the backward kernel", jr_run_verify},
      {"entropy", "Relative entropy of a tilted process (entropy.csv)", jr_run_entropy},
  };
  Runner selected = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o, true);
    sub->callback([&selected, run = c.run] { selected = run; });
  }

  auto* demo = app.add_subcommand("demo", "Run a bundled demo's pipeline");
  demo->add_option("name", o.demo, "Demo name (see 'demo --list')");
  bool list = false;
  demo->add_flag("--list", list, "List the bundled demos");
  add_common(demo, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (demo->parsed()) {
    if (list || o.demo.empty()) {
      for (std::size_t i = 0; i < jr_demo_count(); ++i) std::cout << jr_demo_name(i) << '\n';
      return list ? 0 : 2;
    }
  }
  jr_config* cfg = load(o);
  if (cfg == nullptr) return 2;
  const jr_status s = demo->parsed() ? jr_run_demo(cfg, o.out.c_str()) : selected(cfg, o.out.c_str());
  jr_config_free(cfg);
  return s == JR_OK ? 0 : static_cast<int>(s);
}
