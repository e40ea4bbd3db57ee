// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// hybridpar: plan, cost and simulate hybrid PS/AR data-parallel training.
//
//   hybridpar compare --graph fixtures/lm.json --cluster fixtures/cluster8x6.json --partitions 128

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybridpar/errors.hpp"
#include "hybridpar/report.hpp"

namespace {

int write_trace(const std::string& path, const std::vector<hybridpar::Message>& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write trace file: " << path << '\n';
    return hybridpar::kExitUsage;
  }
  out << hybridpar::trace_json_lines(trace);
  return hybridpar::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plan, cost and simulate hybrid PS/AR data-parallel training"};
  app.set_help_all_flag("--help-all");

  std::string command;
  std::vector<std::string> architectures;
  std::string output = "json";
  std::uint64_t partitions = 0;
  hybridpar::RunConfig config;

  app.add_option("command", command, "transform | estimate | simulate | tune | compare")
      ->required()
      ->check(CLI::IsMember({"transform", "estimate", "simulate", "tune", "compare"}));
  app.add_option("--graph", config.graph_path, "graph spec JSON")->required();
  app.add_option("--cluster", config.cluster_path, "cluster spec JSON")->required();
  app.add_option("--architecture", architectures, "ar | ps-naive | ps-opt | hybrid (repeatable for compare)")
      ->check(CLI::IsMember({"ar", "ps-naive", "ps-opt", "hybrid"}));
  app.add_flag("--local-agg", config.local_agg, "aggregate per machine before pushing (turns ps-naive into ps-opt)");
  auto* partitions_opt =
      app.add_option("--partitions", partitions, "partitions per partitionable variable; upper bound for tune")
          ->check(CLI::PositiveNumber);
  app.add_option("--threshold", config.threshold, "relative improvement needed to continue the tune search")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", config.seed, "seed for simulated iteration noise");
  app.add_option("--output", output, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--trace", config.trace, "write the simulated message trace as JSON lines");
  app.add_option("--trace-out", config.trace_path, "trace destination (default trace.jsonl)");
  app.add_option("--iterations", config.iterations, "simulated iterations, first half discarded")
      ->check(CLI::Range(2u, 1000000u));
  app.add_option("--warmup", config.warmup_factor, "slowdown factor of the discarded iterations");
  app.add_option("--jitter", config.jitter, "relative std-dev of per-iteration noise")->check(CLI::NonNegativeNumber);
  app.add_option("--partition-overhead-us", config.partition_overhead_us, "per-partition stitch cost");
  app.add_option("--agg-us-per-mb", config.agg_us_per_mb, "sparse gradient aggregation cost");
  app.add_option("--eff-ar", config.eff_ar, "byte cost multiplier for AR traffic");
  app.add_option("--eff-ps", config.eff_ps, "byte cost multiplier for PS traffic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hybridpar::kExitUsage;
  }

  try {
    config.command = hybridpar::command_from_string(command);
    config.output = hybridpar::output_format_from_string(output);
    for (const auto& a : architectures) config.architectures.push_back(hybridpar::architecture_from_string(a));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hybridpar::kExitUsage;
  }
  if (partitions_opt->count() > 0) config.partitions = partitions;

  const hybridpar::RunOutcome outcome = hybridpar::run(config);
  if (outcome.exit_code != hybridpar::kExitOk) {
    std::cerr << "error: " << outcome.error << '\n';
    return outcome.exit_code;
  }
  if (config.trace) {
    if (const int rc = write_trace(config.trace_path, outcome.trace); rc != hybridpar::kExitOk) return rc;
  }
  std::cout << hybridpar::emit_report(*outcome.report, config.output);
  return hybridpar::kExitOk;
}
