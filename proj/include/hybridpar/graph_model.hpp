// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hybridpar/errors.hpp"

namespace hybridpar {

enum class VarKind { dense, sparse };

std::string_view to_string(VarKind kind);

// One trainable model variable. Gradients are modeled as byte payloads only.
struct VariableSpec {
  std::string name;
  std::uint64_t elements = 1;
  std::uint32_t elem_bytes = 4;
  // Average fraction of elements a worker touches per iteration. 1 for dense.
  double alpha = 1.0;
  VarKind kind = VarKind::dense;
  bool partitionable = false;

  std::uint64_t size_bytes() const { return elements * elem_bytes; }
  bool is_sparse() const { return kind == VarKind::sparse; }

  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

struct GraphSpec {
  std::string name;
  // Items (images, words) each GPU consumes per iteration.
  std::uint64_t batch_per_gpu = 1;
  double compute_us_per_gpu = 0.0;
  std::vector<VariableSpec> variables;

  std::size_t num_variables() const { return variables.size(); }
  const VariableSpec* find(std::string_view var_name) const;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;
};

struct ClusterSpec {
  std::uint32_t machines = 1;
  std::uint32_t gpus_per_machine = 1;
  double nic_gbps = 100.0;
  double latency_us = 0.0;
  double intra_gbps = 800.0;

  std::uint32_t total_gpus() const { return machines * gpus_per_machine; }
  // 1 Gbit/s moves 125 bytes per microsecond.
  double nic_bytes_per_us() const { return nic_gbps * 125.0; }
  double intra_bytes_per_us() const { return intra_gbps * 125.0; }

  friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;
};

struct Partition {
  std::uint64_t index = 0;
  std::uint64_t elements = 0;

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct PartitionSet {
  std::string variable;
  std::uint64_t count = 1;
  std::vector<Partition> partitions;
};

// Parses and validates a graph document. Throws ParseError or ValidationError.
GraphSpec load_graph_spec(std::string_view text);

// Parses and validates a cluster document. Omitted latency_us defaults to 0
// and omitted intra_gbps to 8x nic_gbps.
ClusterSpec load_cluster_spec(std::string_view text);

// Re-runs the document-level checks on an in-memory spec.
void validate(const GraphSpec& graph);
void validate(const ClusterSpec& cluster);

// Element-weighted mean of per-variable alpha.
double model_alpha(const GraphSpec& graph);

// Even split; the first (elements mod P) partitions carry one extra element.
PartitionSet partition_variable(const VariableSpec& var, std::uint64_t partitions);

std::vector<std::uint64_t> shard_count(std::uint64_t total_items, std::uint64_t workers);

// Elements a worker touches per iteration: alpha * elements, rounded up, with
// values within 1e-9 relative of an integer snapped to it.
std::uint64_t touched_elements(double alpha, std::uint64_t elements);

// Gradient payload bytes exchanged for `elements` elements of `var`.
std::uint64_t payload_bytes(const VariableSpec& var, std::uint64_t elements);
inline std::uint64_t payload_bytes(const VariableSpec& var) {
  return payload_bytes(var, var.elements);
}

}  // namespace hybridpar
