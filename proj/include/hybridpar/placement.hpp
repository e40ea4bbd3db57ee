// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridpar/graph_model.hpp"

namespace hybridpar {

enum class Mechanism { AR, PS };

enum class Architecture { AR, PS_naive, PS_opt, hybrid };

enum class NodeRole {
  model_replica,
  grad_producer,
  allreduce,
  allgatherv,
  local_agg,
  global_agg,
  accumulator,
  update,
  variable_home,
  replica_variable,
};

std::string_view to_string(Mechanism m);
std::string_view to_string(Architecture a);
std::string_view to_string(NodeRole r);
Mechanism mechanism_from_string(std::string_view s);
Architecture architecture_from_string(std::string_view s);
NodeRole node_role_from_string(std::string_view s);

// A GPU (index >= 0) or the machine's CPU, which hosts the server process.
struct Device {
  enum class Kind { gpu, cpu };
  Kind kind = Kind::gpu;
  std::uint32_t index = 0;

  static Device gpu(std::uint32_t i) { return {Kind::gpu, i}; }
  static Device cpu() { return {Kind::cpu, 0}; }
  bool is_cpu() const { return kind == Kind::cpu; }

  friend auto operator<=>(const Device&, const Device&) = default;
};

std::string to_string(Device d);
Device device_from_string(std::string_view s);

struct Location {
  std::uint32_t machine = 0;
  Device device;

  friend auto operator<=>(const Location&, const Location&) = default;
};

struct PlacedNode {
  std::string id;
  NodeRole role = NodeRole::model_replica;
  Location location;
  std::optional<std::string> variable;
  std::optional<std::uint64_t> partition;
  // Set on the model_replica of the worker that triggers PS updates.
  bool chief = false;

  friend bool operator==(const PlacedNode&, const PlacedNode&) = default;
};

struct GpuId {
  std::uint32_t machine = 0;
  std::uint32_t gpu = 0;

  friend auto operator<=>(const GpuId&, const GpuId&) = default;
};

struct DistributedPlan {
  Architecture architecture = Architecture::AR;
  std::vector<PlacedNode> nodes;
  std::map<std::string, Mechanism> mech_of;
  std::map<std::string, std::uint64_t> partitions_of;
  GpuId chief;
  bool local_agg_enabled = false;

  // Machine hosting the variable_home of (variable, partition), if any.
  std::optional<std::uint32_t> owner_of(std::string_view variable, std::uint64_t partition) const;
  // The collective role used for an AR variable (allreduce or allgatherv).
  std::optional<NodeRole> collective_of(std::string_view variable) const;

  friend bool operator==(const DistributedPlan&, const DistributedPlan&) = default;
};

// Efficiency multipliers applied to each mechanism's byte cost. Larger means
// slower; the defaults make the choice a pure byte comparison.
struct MechanismPolicy {
  double eff_ar = 1.0;
  double eff_ps = 1.0;
};

using PartitionMap = std::map<std::string, std::uint64_t>;

DistributedPlan transform_ar(const GraphSpec& graph, const ClusterSpec& cluster);

DistributedPlan transform_ps(const GraphSpec& graph, const ClusterSpec& cluster, bool local_agg,
                             const PartitionMap& partitions = {});

DistributedPlan transform_hybrid(const GraphSpec& graph, const ClusterSpec& cluster,
                                 const MechanismPolicy& policy = {},
                                 const PartitionMap& partitions = {});

// Dispatches on the architecture tag.
DistributedPlan build_plan(Architecture arch, const GraphSpec& graph, const ClusterSpec& cluster,
                           const MechanismPolicy& policy = {}, const PartitionMap& partitions = {});

Mechanism assign_mechanism(const VariableSpec& var, const ClusterSpec& cluster,
                           const MechanismPolicy& policy = {});

// Returns the list of violated invariants; empty means the plan is valid.
std::vector<std::string> validate_plan(const DistributedPlan& plan, const GraphSpec& graph,
                                       const ClusterSpec& cluster);

// Node multiset equality ignoring node ids.
bool nodes_isomorphic(const DistributedPlan& a, const DistributedPlan& b);

// Stable 64-bit FNV-1a, used to pick the first server of a partitioned variable.
std::uint64_t stable_hash(std::string_view s);

}  // namespace hybridpar
