// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridpar/comm_cost.hpp"
#include "hybridpar/graph_model.hpp"
#include "hybridpar/placement.hpp"

namespace hybridpar {

// What a message carries. Collectives use reduce_scatter/all_gather (ring
// allreduce) or gather (allgatherv); PS traffic uses push/pull; the intra
// stages around them use local_reduce/broadcast.
enum class CommPhase {
  local_reduce,
  reduce_scatter,
  all_gather,
  gather,
  push,
  pull,
  update_trigger,
  broadcast,
};

std::string_view to_string(CommPhase p);
CommPhase comm_phase_from_string(std::string_view s);

struct MessageTag {
  std::string variable;
  std::optional<std::uint64_t> partition;
  CommPhase phase = CommPhase::push;

  friend bool operator==(const MessageTag&, const MessageTag&) = default;
};

struct Message {
  Location src;
  Location dst;
  std::uint64_t bytes = 0;
  MessageTag tag;
  // Position within a multi-step collective; 0 for single-shot transfers.
  std::uint32_t step = 0;

  bool crosses_machines() const { return src.machine != dst.machine; }
  friend bool operator==(const Message&, const Message&) = default;
};

struct ComputeProfile {
  double compute_us_per_gpu = 0.0;
  // Cost of managing and stitching one partition of a PS variable.
  double partition_overhead_us = 50.0;
  // Sparse gradient aggregation cost per 10^6 bytes, wherever it runs: local
  // and global aggregation for PS, applying gathered gradients for AllGatherv.
  double agg_us_per_mb = 2000.0;
  // Multipliers on wire time for AR and PS traffic.
  double ar_efficiency = 1.0;
  double ps_efficiency = 1.0;

  static ComputeProfile from_graph(const GraphSpec& graph);
};

// Phase names used in IterationStats::phase_times, in execution order.
inline constexpr std::string_view kPhaseNames[] = {"compute", "local", "network", "aggregation", "update",
                                                   "broadcast"};

struct IterationStats {
  double iter_time_us = 0.0;
  TransferReport per_machine_bytes;
  std::map<std::string, double> phase_times;
  std::vector<Message> trace;
};

struct CollectiveResult {
  double duration_us = 0.0;
  TransferReport per_machine;
  std::vector<Message> trace;
  std::uint32_t steps = 0;
};

// Ring allreduce among N machines: 2(N-1) steps, each moving ceil(bytes/N).
CollectiveResult simulate_ring_allreduce(std::uint64_t bytes, std::uint32_t machines, const ClusterSpec& cluster);

// Ring AllGatherv: N-1 steps, each forwarding one worker's payload.
CollectiveResult simulate_allgatherv(std::uint64_t bytes_per_worker, std::uint32_t machines,
                                     const ClusterSpec& cluster);

// Push/pull exchange of one PS variable under `plan` (owners, local aggregation).
// Throws MechanismMismatchError if the plan does not serve `var` through PS.
CollectiveResult simulate_ps_exchange(const VariableSpec& var, const PartitionSet& partitions,
                                      const DistributedPlan& plan, const ClusterSpec& cluster);

// One synchronous iteration. Phases run back to back: compute, intra-machine
// gathering, network exchange, aggregation, chief-triggered updates, and
// intra-machine distribution of the new values.
IterationStats simulate_iteration(const DistributedPlan& plan, const GraphSpec& graph, const ClusterSpec& cluster,
                                  const ComputeProfile& profile);

struct TrainingOptions {
  // Multiplier applied to the first half of the iterations, which are discarded.
  double warmup_factor = 1.5;
  // Relative standard deviation of per-iteration noise; 0 disables it.
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

struct TrainingResult {
  double mean_iter_time_us = 0.0;
  std::uint32_t discarded = 0;
  std::vector<double> iteration_times_us;
};

// Runs `iterations` iterations, drops the first iterations/2 and averages the rest.
TrainingResult simulate_training(const DistributedPlan& plan, const GraphSpec& graph, const ClusterSpec& cluster,
                                 const ComputeProfile& profile, std::uint32_t iterations = 100,
                                 const TrainingOptions& options = {});

// Per-machine NIC bytes implied by a trace.
TransferReport nic_bytes(const std::vector<Message>& trace, std::uint32_t machines);

}  // namespace hybridpar
