// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/comm_cost.hpp"

#include <algorithm>
#include <stdexcept>

namespace hybridpar {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::uint64_t sparse_payload(const VariableSpec& var, const TransferOptions& options) {
  std::uint64_t bytes = payload_bytes(var);
  if (options.count_sparse_indices && var.is_sparse()) bytes += 4 * touched_elements(var.alpha, var.elements);
  return bytes;
}

VariableSpec piece_of(const VariableSpec& var, std::uint64_t elements) {
  VariableSpec piece = var;
  piece.elements = elements;
  return piece;
}

VariableSpec treated_as_dense(const VariableSpec& var) {
  VariableSpec dense = var;
  dense.kind = VarKind::dense;
  dense.alpha = 1.0;
  return dense;
}

struct SplitTransfer {
  TransferReport ar;
  TransferReport ps;
};

SplitTransfer transfer_by_mechanism(const GraphSpec& graph, const DistributedPlan& plan,
                                    const ClusterSpec& cluster, const TransferOptions& options) {
  SplitTransfer out;
  out.ar.per_machine.assign(cluster.machines, {});
  out.ps.per_machine.assign(cluster.machines, {});
  for (const auto& var : graph.variables) {
    auto mit = plan.mech_of.find(var.name);
    if (mit == plan.mech_of.end()) throw std::invalid_argument("plan lacks variable '" + var.name + "'");
    if (mit->second == Mechanism::AR) {
      const bool gathers = plan.collective_of(var.name) == NodeRole::allgatherv;
      const VariableSpec effective = gathers ? var : treated_as_dense(var);
      out.ar += transfer_one_variable(effective, Mechanism::AR, cluster, std::nullopt, options);
      continue;
    }
    auto pit = plan.partitions_of.find(var.name);
    const std::uint64_t parts = pit == plan.partitions_of.end() ? 1 : pit->second;
    const PartitionSet set = partition_variable(var, parts);
    for (const auto& part : set.partitions) {
      const auto owner = plan.owner_of(var.name, part.index);
      if (!owner) throw std::invalid_argument("plan lacks a home for '" + var.name + "'");
      out.ps += transfer_one_variable(piece_of(var, part.elements), Mechanism::PS, cluster, owner, options);
    }
  }
  out.ar = TransferReport::from_machines(std::move(out.ar.per_machine));
  out.ps = TransferReport::from_machines(std::move(out.ps.per_machine));
  return out;
}

double weighted_bottleneck(const SplitTransfer& split, const MechanismPolicy& policy) {
  double worst = 0.0;
  for (std::size_t m = 0; m < split.ar.per_machine.size(); ++m) {
    const auto& a = split.ar.per_machine[m];
    const auto& p = split.ps.per_machine[m];
    const double eg = policy.eff_ar * static_cast<double>(a.egress_bytes) +
                      policy.eff_ps * static_cast<double>(p.egress_bytes);
    const double in = policy.eff_ar * static_cast<double>(a.ingress_bytes) +
                      policy.eff_ps * static_cast<double>(p.ingress_bytes);
    worst = std::max({worst, eg, in});
  }
  return worst;
}

}  // namespace

TransferReport TransferReport::from_machines(std::vector<MachineTraffic> machines) {
  TransferReport r;
  r.per_machine = std::move(machines);
  std::uint64_t worst = 0;
  for (std::size_t m = 0; m < r.per_machine.size(); ++m) {
    const auto& t = r.per_machine[m];
    r.total_bytes += t.total();
    if (t.busiest_direction() > worst) {
      worst = t.busiest_direction();
      r.bottleneck_machine = static_cast<std::uint32_t>(m);
    }
  }
  return r;
}

std::uint64_t TransferReport::bottleneck_bytes() const {
  if (per_machine.empty()) return 0;
  return per_machine.at(bottleneck_machine).busiest_direction();
}

TransferReport& TransferReport::operator+=(const TransferReport& other) {
  if (per_machine.size() < other.per_machine.size()) per_machine.resize(other.per_machine.size());
  for (std::size_t m = 0; m < other.per_machine.size(); ++m) {
    per_machine[m].egress_bytes += other.per_machine[m].egress_bytes;
    per_machine[m].ingress_bytes += other.per_machine[m].ingress_bytes;
  }
  *this = from_machines(std::move(per_machine));
  return *this;
}

TransferReport transfer_one_variable(const VariableSpec& var, Mechanism mech, const ClusterSpec& cluster,
                                     std::optional<std::uint32_t> owner, const TransferOptions& options) {
  const std::uint64_t n = cluster.machines;
  std::vector<MachineTraffic> machines(n);

  if (mech == Mechanism::PS) {
    if (!owner) throw std::invalid_argument("PS transfer for '" + var.name + "' needs an owner");
    if (*owner >= n) {
      throw std::out_of_range("owner " + std::to_string(*owner) + " out of range for " + std::to_string(n) +
                              " machines");
    }
  } else if (owner) {
    throw std::invalid_argument("AR transfer for '" + var.name + "' takes no owner");
  }
  if (n == 1) return TransferReport::from_machines(std::move(machines));

  const std::uint64_t payload = sparse_payload(var, options);
  if (mech == Mechanism::PS) {
    // Non-owners push one gradient and pull one value; the owner serves all.
    for (std::uint32_t m = 0; m < n; ++m) {
      if (m == *owner) {
        machines[m] = {payload * (n - 1), payload * (n - 1)};
      } else {
        machines[m] = {payload, payload};
      }
    }
  } else if (var.is_sparse()) {
    for (auto& t : machines) t = {payload * (n - 1), payload * (n - 1)};
  } else {
    const std::uint64_t per_direction = 2 * (n - 1) * ceil_div(payload, n);
    for (auto& t : machines) t = {per_direction, per_direction};
  }
  return TransferReport::from_machines(std::move(machines));
}

TransferReport transfer_model(const GraphSpec& graph, const DistributedPlan& plan, const ClusterSpec& cluster,
                              const TransferOptions& options) {
  const SplitTransfer split = transfer_by_mechanism(graph, plan, cluster, options);
  TransferReport total = split.ar;
  total += split.ps;
  return total;
}

double analytic_iteration_time_us(const GraphSpec& graph, const DistributedPlan& plan,
                                  const ClusterSpec& cluster, const MechanismPolicy& policy) {
  const SplitTransfer split = transfer_by_mechanism(graph, plan, cluster, {});
  return weighted_bottleneck(split, policy) / cluster.nic_bytes_per_us() + graph.compute_us_per_gpu;
}

const ArchitectureEstimate* ArchitectureComparison::find(Architecture a) const {
  for (const auto& row : rows) {
    if (row.architecture == a) return &row;
  }
  return nullptr;
}

ArchitectureComparison compare_architectures(const GraphSpec& graph, const ClusterSpec& cluster,
                                             const MechanismPolicy& policy, const PartitionMap& partitions) {
  ArchitectureComparison table;
  for (Architecture arch :
       {Architecture::AR, Architecture::PS_naive, Architecture::PS_opt, Architecture::hybrid}) {
    const DistributedPlan plan = build_plan(arch, graph, cluster, policy, partitions);
    const SplitTransfer split = transfer_by_mechanism(graph, plan, cluster, {});
    ArchitectureEstimate row;
    row.architecture = arch;
    row.transfer = split.ar;
    row.transfer += split.ps;
    row.bottleneck_machine = row.transfer.bottleneck_machine;
    row.bottleneck_bytes = row.transfer.bottleneck_bytes();
    row.analytic_time_us = weighted_bottleneck(split, policy) / cluster.nic_bytes_per_us() + graph.compute_us_per_gpu;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace hybridpar
