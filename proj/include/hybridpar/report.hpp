// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridpar/comm_cost.hpp"
#include "hybridpar/graph_model.hpp"
#include "hybridpar/net_sim.hpp"
#include "hybridpar/partition_tuner.hpp"
#include "hybridpar/placement.hpp"
#include "hybridpar/serialization.hpp"

namespace hybridpar {

enum class Command { transform, estimate, simulate, tune, compare };
enum class OutputFormat { json, csv };

std::string_view to_string(Command c);
Command command_from_string(std::string_view s);
std::string_view to_string(OutputFormat f);
OutputFormat output_format_from_string(std::string_view s);

// CLI spelling of architectures: ar, ps-naive, ps-opt, hybrid.
// architecture_from_string accepts both spellings.
std::string_view cli_name(Architecture a);

struct RunConfig {
  Command command = Command::simulate;
  std::string graph_path;
  std::string cluster_path;
  // One entry for transform/estimate/simulate/tune (default hybrid); any
  // subset for compare (default all four).
  std::vector<Architecture> architectures;
  bool local_agg = false;
  std::optional<std::uint64_t> partitions;
  double threshold = 0.10;
  std::uint64_t seed = 0;
  OutputFormat output = OutputFormat::json;
  bool trace = false;
  std::string trace_path = "trace.jsonl";

  std::uint32_t iterations = 100;
  double warmup_factor = 1.5;
  double jitter = 0.0;
  double partition_overhead_us = 50.0;
  double agg_us_per_mb = 2000.0;
  double eff_ar = 1.0;
  double eff_ps = 1.0;
};

struct ArchitectureRow {
  Architecture architecture = Architecture::hybrid;
  std::uint64_t partitions = 1;
  std::uint32_t bottleneck_machine = 0;
  std::uint64_t bottleneck_bytes = 0;
  double analytic_time_us = 0.0;
  double simulated_time_us = 0.0;
  double throughput_items_per_sec = 0.0;

  friend bool operator==(const ArchitectureRow&, const ArchitectureRow&) = default;
};

struct Report {
  Command command = Command::simulate;
  json config;
  std::vector<ArchitectureRow> rows;
  std::optional<DistributedPlan> plan;
  std::optional<TransferReport> transfer;
  // Stored without the message trace, which goes to its own file.
  std::optional<IterationStats> iteration;
  std::optional<TuneResult> tune;

  friend bool operator==(const Report& a, const Report& b);
};

struct RunOutcome {
  int exit_code = 0;
  std::optional<Report> report;
  std::string error;
  std::vector<Message> trace;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Pure pipeline on already-loaded specs. Throws the library's exceptions.
Report build_report(const RunConfig& config, const GraphSpec& graph, const ClusterSpec& cluster,
                    std::vector<Message>* trace = nullptr);

// Loads both spec files, builds the report and maps failures to exit codes.
// Does not write the trace file; the caller decides where it goes.
RunOutcome run(const RunConfig& config);

std::string emit_report(const Report& report, OutputFormat format);
Report report_from_json(std::string_view text);

// items per iteration = batch_per_gpu * total GPUs
double throughput_items_per_sec(const GraphSpec& graph, const ClusterSpec& cluster, double iter_time_us);

}  // namespace hybridpar
