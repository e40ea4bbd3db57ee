// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/report.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "hybridpar/errors.hpp"

namespace hybridpar {
namespace {

constexpr std::array<std::pair<Command, std::string_view>, 5> kCommandNames{{
    {Command::transform, "transform"},
    {Command::estimate, "estimate"},
    {Command::simulate, "simulate"},
    {Command::tune, "tune"},
    {Command::compare, "compare"},
}};

constexpr std::string_view kRowHeader =
    "architecture,partitions,bottleneck_machine,bottleneck_bytes,analytic_time_us,simulated_time_us,"
    "throughput_items_per_sec\n";

std::string read_file(const std::string& path, std::string_view what) {
  if (path.empty()) throw UsageError(std::string(what) + " path is required");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw UsageError(std::string(what) + " file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + std::string(what) + " file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_config(const RunConfig& config) {
  if (config.partitions && *config.partitions < 1) throw UsageError("--partitions must be >= 1");
  if (!(config.threshold >= 0.0)) throw UsageError("--threshold must be >= 0");
  if (config.iterations < 2) throw UsageError("--iterations must be >= 2");
  if (!(config.warmup_factor > 0.0)) throw UsageError("--warmup must be > 0");
  if (!(config.jitter >= 0.0)) throw UsageError("--jitter must be >= 0");
  if (!(config.eff_ar > 0.0) || !(config.eff_ps > 0.0)) throw UsageError("efficiencies must be > 0");
  if (!(config.partition_overhead_us >= 0.0) || !(config.agg_us_per_mb >= 0.0)) {
    throw UsageError("cost coefficients must be >= 0");
  }
  if (config.command != Command::compare && config.architectures.size() > 1) {
    throw UsageError(std::string(to_string(config.command)) + " takes a single --architecture");
  }
}

Architecture effective_architecture(Architecture arch, bool local_agg) {
  return arch == Architecture::PS_naive && local_agg ? Architecture::PS_opt : arch;
}

Architecture single_architecture(const RunConfig& config) {
  const Architecture arch = config.architectures.empty() ? Architecture::hybrid : config.architectures.front();
  return effective_architecture(arch, config.local_agg);
}

json config_echo(const RunConfig& c) {
  json archs = json::array();
  for (Architecture a : c.architectures) archs.push_back(cli_name(a));
  return json{{"command", to_string(c.command)},
              {"graph", c.graph_path},
              {"cluster", c.cluster_path},
              {"architectures", archs},
              {"local_agg", c.local_agg},
              {"partitions", c.partitions ? json(*c.partitions) : json(nullptr)},
              {"threshold", c.threshold},
              {"seed", c.seed},
              {"output", to_string(c.output)},
              {"trace", c.trace},
              {"trace_path", c.trace_path},
              {"iterations", c.iterations},
              {"warmup_factor", c.warmup_factor},
              {"jitter", c.jitter},
              {"partition_overhead_us", c.partition_overhead_us},
              {"agg_us_per_mb", c.agg_us_per_mb},
              {"eff_ar", c.eff_ar},
              {"eff_ps", c.eff_ps}};
}

struct Pipeline {
  const RunConfig& config;
  const GraphSpec& graph;
  const ClusterSpec& cluster;
  MechanismPolicy policy;
  ComputeProfile profile;
  TrainingOptions training;

  Pipeline(const RunConfig& c, const GraphSpec& g, const ClusterSpec& cl) : config(c), graph(g), cluster(cl) {
    policy.eff_ar = c.eff_ar;
    policy.eff_ps = c.eff_ps;
    profile = ComputeProfile::from_graph(g);
    profile.partition_overhead_us = c.partition_overhead_us;
    profile.agg_us_per_mb = c.agg_us_per_mb;
    profile.ar_efficiency = c.eff_ar;
    profile.ps_efficiency = c.eff_ps;
    training.warmup_factor = c.warmup_factor;
    training.jitter = c.jitter;
    training.seed = c.seed;
  }

  std::uint64_t default_partitions() const { return config.partitions.value_or(cluster.machines); }

  DistributedPlan plan(Architecture arch, std::uint64_t partitions) const {
    return build_plan(arch, graph, cluster, policy, uniform_partitions(graph, partitions));
  }

  ArchitectureRow row(Architecture arch, std::uint64_t partitions) const {
    const DistributedPlan p = plan(arch, partitions);
    const TransferReport transfer = transfer_model(graph, p, cluster);
    ArchitectureRow r;
    r.architecture = arch;
    r.partitions = partitions;
    r.bottleneck_machine = transfer.bottleneck_machine;
    r.bottleneck_bytes = transfer.bottleneck_bytes();
    r.analytic_time_us = analytic_iteration_time_us(graph, p, cluster, policy);
    r.simulated_time_us = simulate_training(p, graph, cluster, profile, config.iterations, training).mean_iter_time_us;
    r.throughput_items_per_sec = throughput_items_per_sec(graph, cluster, r.simulated_time_us);
    return r;
  }
};

std::string row_csv(const ArchitectureRow& r) {
  std::ostringstream out;
  out << cli_name(r.architecture) << ',' << r.partitions << ',' << r.bottleneck_machine << ','
      << r.bottleneck_bytes << ',' << format_number(r.analytic_time_us) << ','
      << format_number(r.simulated_time_us) << ',' << format_number(r.throughput_items_per_sec) << '\n';
  return out.str();
}

std::string plan_csv(const DistributedPlan& plan) {
  std::ostringstream out;
  out << "id,role,machine,device,variable,partition,chief\n";
  for (const auto& n : plan.nodes) {
    out << n.id << ',' << to_string(n.role) << ',' << n.location.machine << ',' << to_string(n.location.device)
        << ',' << n.variable.value_or("") << ',';
    if (n.partition) out << *n.partition;
    out << ',' << (n.chief ? "true" : "false") << '\n';
  }
  return out.str();
}

json row_json(const ArchitectureRow& r) {
  return json{{"architecture", cli_name(r.architecture)},
              {"partitions", r.partitions},
              {"bottleneck_machine", r.bottleneck_machine},
              {"bottleneck_bytes", r.bottleneck_bytes},
              {"analytic_time_us", r.analytic_time_us},
              {"simulated_time_us", r.simulated_time_us},
              {"throughput_items_per_sec", r.throughput_items_per_sec}};
}

ArchitectureRow row_from_json(const json& j) {
  ArchitectureRow r;
  r.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  r.partitions = j.at("partitions").get<std::uint64_t>();
  r.bottleneck_machine = j.at("bottleneck_machine").get<std::uint32_t>();
  r.bottleneck_bytes = j.at("bottleneck_bytes").get<std::uint64_t>();
  r.analytic_time_us = j.at("analytic_time_us").get<double>();
  r.simulated_time_us = j.at("simulated_time_us").get<double>();
  r.throughput_items_per_sec = j.at("throughput_items_per_sec").get<double>();
  return r;
}

bool same_stats(const IterationStats& a, const IterationStats& b) {
  return a.iter_time_us == b.iter_time_us && a.per_machine_bytes == b.per_machine_bytes &&
         a.phase_times == b.phase_times && a.trace == b.trace;
}

}  // namespace

std::string_view to_string(Command c) {
  for (const auto& [cmd, name] : kCommandNames) {
    if (cmd == c) return name;
  }
  return "unknown";
}

Command command_from_string(std::string_view s) {
  for (const auto& [cmd, name] : kCommandNames) {
    if (name == s) return cmd;
  }
  throw UsageError("unknown command '" + std::string(s) + "'");
}

std::string_view to_string(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

OutputFormat output_format_from_string(std::string_view s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw UsageError("unknown output format '" + std::string(s) + "'");
}

std::string_view cli_name(Architecture a) {
  switch (a) {
    case Architecture::AR: return "ar";
    case Architecture::PS_naive: return "ps-naive";
    case Architecture::PS_opt: return "ps-opt";
    case Architecture::hybrid: return "hybrid";
  }
  return "unknown";
}

bool operator==(const Report& a, const Report& b) {
  if (a.command != b.command || a.config != b.config || a.rows != b.rows || a.plan != b.plan ||
      a.transfer != b.transfer || a.tune != b.tune) {
    return false;
  }
  if (a.iteration.has_value() != b.iteration.has_value()) return false;
  return !a.iteration || same_stats(*a.iteration, *b.iteration);
}

double throughput_items_per_sec(const GraphSpec& graph, const ClusterSpec& cluster, double iter_time_us) {
  if (!(iter_time_us > 0.0)) return 0.0;
  const double items = static_cast<double>(graph.batch_per_gpu) * cluster.machines * cluster.gpus_per_machine;
  return items / (iter_time_us / 1e6);
}

Report build_report(const RunConfig& config, const GraphSpec& graph, const ClusterSpec& cluster,
                    std::vector<Message>* trace) {
  check_config(config);
  const Pipeline pipe(config, graph, cluster);
  Report report;
  report.command = config.command;
  report.config = config_echo(config);

  switch (config.command) {
    case Command::transform: {
      DistributedPlan plan = pipe.plan(single_architecture(config), pipe.default_partitions());
      const auto issues = validate_plan(plan, graph, cluster);
      if (!issues.empty()) throw ValidationError("plan", issues.front());
      report.plan = std::move(plan);
      break;
    }
    case Command::estimate: {
      const DistributedPlan plan = pipe.plan(single_architecture(config), pipe.default_partitions());
      report.transfer = transfer_model(graph, plan, cluster);
      break;
    }
    case Command::simulate: {
      const Architecture arch = single_architecture(config);
      const std::uint64_t p = pipe.default_partitions();
      IterationStats stats = simulate_iteration(pipe.plan(arch, p), graph, cluster, pipe.profile);
      if (trace) *trace = std::move(stats.trace);
      stats.trace.clear();
      report.iteration = std::move(stats);
      report.rows.push_back(pipe.row(arch, p));
      break;
    }
    case Command::tune: {
      const Architecture arch = single_architecture(config);
      TuneOptions options;
      options.threshold = config.threshold;
      options.iterations = config.iterations;
      options.training = pipe.training;
      options.max_P = config.partitions.value_or(0);
      const TuneResult result =
          tune(graph, cluster, [&](std::uint64_t p) { return pipe.plan(arch, p); }, pipe.profile, options);
      report.tune = result;
      IterationStats stats = simulate_iteration(pipe.plan(arch, result.best_P), graph, cluster, pipe.profile);
      if (trace) *trace = std::move(stats.trace);
      stats.trace.clear();
      report.iteration = std::move(stats);
      report.rows.push_back(pipe.row(arch, result.best_P));
      break;
    }
    case Command::compare: {
      std::vector<Architecture> archs = config.architectures;
      if (archs.empty()) {
        archs = {Architecture::AR, Architecture::PS_naive, Architecture::PS_opt, Architecture::hybrid};
      }
      const std::uint64_t p = pipe.default_partitions();
      std::vector<std::future<ArchitectureRow>> pending;
      pending.reserve(archs.size());
      for (Architecture a : archs) {
        pending.push_back(std::async(std::launch::async, [&pipe, a, p] { return pipe.row(a, p); }));
      }
      for (auto& f : pending) report.rows.push_back(f.get());
      break;
    }
  }
  return report;
}

RunOutcome run(const RunConfig& config) {
  RunOutcome outcome;
  try {
    check_config(config);
    const GraphSpec graph = load_graph_spec(read_file(config.graph_path, "graph"));
    const ClusterSpec cluster = load_cluster_spec(read_file(config.cluster_path, "cluster"));
    outcome.report = build_report(config, graph, cluster, config.trace ? &outcome.trace : nullptr);
    outcome.exit_code = kExitOk;
  } catch (const UsageError& e) {
    outcome.exit_code = kExitUsage;
    outcome.error = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = kExitValidation;
    outcome.error = e.what();
  }
  if (outcome.exit_code != kExitOk) outcome.report.reset();
  return outcome;
}

std::string emit_report(const Report& report, OutputFormat format) {
  if (format == OutputFormat::csv) {
    if (report.plan) return plan_csv(*report.plan);
    if (report.transfer) return transfer_report_csv(*report.transfer);
    std::string out(kRowHeader);
    for (const auto& r : report.rows) out += row_csv(r);
    return out;
  }
  json doc;
  doc["command"] = to_string(report.command);
  doc["config"] = report.config;
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  doc["rows"] = rows;
  if (report.plan) doc["plan"] = *report.plan;
  if (report.transfer) doc["transfer"] = *report.transfer;
  if (report.iteration) doc["iteration"] = *report.iteration;
  if (report.tune) doc["tune"] = *report.tune;
  return doc.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  try {
    Report r;
    r.command = command_from_string(doc.at("command").get<std::string>());
    r.config = doc.at("config");
    for (const auto& row : doc.at("rows")) r.rows.push_back(row_from_json(row));
    if (doc.contains("plan")) r.plan = doc.at("plan").get<DistributedPlan>();
    if (doc.contains("transfer")) r.transfer = doc.at("transfer").get<TransferReport>();
    if (doc.contains("iteration")) r.iteration = doc.at("iteration").get<IterationStats>();
    if (doc.contains("tune")) r.tune = doc.at("tune").get<TuneResult>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError("report", e.what());
  }
}

}  // namespace hybridpar
