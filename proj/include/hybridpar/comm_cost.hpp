// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hybridpar/graph_model.hpp"
#include "hybridpar/placement.hpp"

namespace hybridpar {

struct MachineTraffic {
  std::uint64_t egress_bytes = 0;
  std::uint64_t ingress_bytes = 0;

  std::uint64_t total() const { return egress_bytes + ingress_bytes; }
  std::uint64_t busiest_direction() const { return std::max(egress_bytes, ingress_bytes); }

  friend bool operator==(const MachineTraffic&, const MachineTraffic&) = default;
};

// Per-machine network bytes for one iteration. total_bytes sums egress and
// ingress over all machines, so every byte on the wire is counted twice.
struct TransferReport {
  std::vector<MachineTraffic> per_machine;
  std::uint32_t bottleneck_machine = 0;
  std::uint64_t total_bytes = 0;

  static TransferReport from_machines(std::vector<MachineTraffic> machines);
  std::uint64_t bottleneck_bytes() const;
  TransferReport& operator+=(const TransferReport& other);

  friend bool operator==(const TransferReport&, const TransferReport&) = default;
};

struct TransferOptions {
  // Adds 4 bytes per touched element of a sparse gradient for its index.
  bool count_sparse_indices = false;
};

// Closed-form bytes for a single variable with one worker per machine:
//   dense PS   owner 2w(N-1), others 2w
//   sparse PS  owner 2aw(N-1), others 2aw
//   dense AR   4w(N-1)/N everywhere (ring, chunk = ceil(w/N))
//   sparse AR  2aw(N-1) everywhere (allgatherv)
// `owner` is required for PS and must be absent for AR.
TransferReport transfer_one_variable(const VariableSpec& var, Mechanism mech, const ClusterSpec& cluster,
                                     std::optional<std::uint32_t> owner,
                                     const TransferOptions& options = {});

// Sums transfer_one_variable over every (variable, partition) of a plan using
// the plan's owners and collectives.
TransferReport transfer_model(const GraphSpec& graph, const DistributedPlan& plan, const ClusterSpec& cluster,
                              const TransferOptions& options = {});

struct ArchitectureEstimate {
  Architecture architecture = Architecture::AR;
  std::uint32_t bottleneck_machine = 0;
  std::uint64_t bottleneck_bytes = 0;
  // Lower bound: efficiency-weighted bottleneck bytes over NIC bandwidth plus compute.
  double analytic_time_us = 0.0;
  TransferReport transfer;
};

struct ArchitectureComparison {
  std::vector<ArchitectureEstimate> rows;
  const ArchitectureEstimate* find(Architecture a) const;
};

// Analytic rows for AR, PS_naive, PS_opt and hybrid, in that order.
ArchitectureComparison compare_architectures(const GraphSpec& graph, const ClusterSpec& cluster,
                                             const MechanismPolicy& policy = {},
                                             const PartitionMap& partitions = {});

// Efficiency-weighted lower bound on one iteration of `plan`.
double analytic_iteration_time_us(const GraphSpec& graph, const DistributedPlan& plan,
                                  const ClusterSpec& cluster, const MechanismPolicy& policy = {});

}  // namespace hybridpar
