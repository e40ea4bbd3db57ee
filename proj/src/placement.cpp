// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/placement.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>
#include <utility>

namespace hybridpar {
namespace {

constexpr std::array<std::pair<NodeRole, std::string_view>, 10> kRoleNames{{
    {NodeRole::model_replica, "model_replica"},
    {NodeRole::grad_producer, "grad_producer"},
    {NodeRole::allreduce, "allreduce"},
    {NodeRole::allgatherv, "allgatherv"},
    {NodeRole::local_agg, "local_agg"},
    {NodeRole::global_agg, "global_agg"},
    {NodeRole::accumulator, "accumulator"},
    {NodeRole::update, "update"},
    {NodeRole::variable_home, "variable_home"},
    {NodeRole::replica_variable, "replica_variable"},
}};

bool is_server_role(NodeRole r) {
  return r == NodeRole::variable_home || r == NodeRole::global_agg || r == NodeRole::accumulator ||
         r == NodeRole::local_agg;
}

bool needs_variable(NodeRole r) {
  return r != NodeRole::model_replica && r != NodeRole::grad_producer;
}

std::string gpu_prefix(std::uint32_t m, std::uint32_t g) {
  return "m" + std::to_string(m) + "/gpu" + std::to_string(g) + "/";
}

std::string cpu_prefix(std::uint32_t m) { return "m" + std::to_string(m) + "/cpu/"; }

void emit_workers(DistributedPlan& plan, const ClusterSpec& cluster) {
  for (std::uint32_t m = 0; m < cluster.machines; ++m) {
    for (std::uint32_t g = 0; g < cluster.gpus_per_machine; ++g) {
      const Location loc{m, Device::gpu(g)};
      PlacedNode replica{gpu_prefix(m, g) + "model", NodeRole::model_replica, loc, {}, {}, false};
      replica.chief = (GpuId{m, g} == plan.chief);
      plan.nodes.push_back(std::move(replica));
      plan.nodes.push_back({gpu_prefix(m, g) + "grads", NodeRole::grad_producer, loc, {}, {}, false});
    }
  }
}

void emit_ar_variable(DistributedPlan& plan, const VariableSpec& var, const ClusterSpec& cluster,
                      NodeRole collective) {
  for (std::uint32_t m = 0; m < cluster.machines; ++m) {
    for (std::uint32_t g = 0; g < cluster.gpus_per_machine; ++g) {
      const Location loc{m, Device::gpu(g)};
      const std::string base = gpu_prefix(m, g) + var.name + "/";
      plan.nodes.push_back({base + "replica", NodeRole::replica_variable, loc, var.name, {}, false});
      plan.nodes.push_back({base + std::string(to_string(collective)), collective, loc, var.name, {}, false});
      plan.nodes.push_back({base + "update", NodeRole::update, loc, var.name, {}, false});
    }
  }
  plan.mech_of[var.name] = Mechanism::AR;
  plan.partitions_of[var.name] = 1;
}

void emit_ps_variable(DistributedPlan& plan, const VariableSpec& var, const ClusterSpec& cluster,
                      const std::vector<std::uint32_t>& owners, bool local_agg) {
  for (std::uint64_t p = 0; p < owners.size(); ++p) {
    const std::uint32_t owner = owners[p];
    const Location server{owner, Device::cpu()};
    const std::string base = cpu_prefix(owner) + var.name + "/p" + std::to_string(p) + "/";
    plan.nodes.push_back({base + "home", NodeRole::variable_home, server, var.name, p, false});
    plan.nodes.push_back({base + "accumulator", NodeRole::accumulator, server, var.name, p, false});
    plan.nodes.push_back({base + "global_agg", NodeRole::global_agg, server, var.name, p, false});
    plan.nodes.push_back({base + "update", NodeRole::update, server, var.name, p, false});
    if (local_agg) {
      for (std::uint32_t m = 0; m < cluster.machines; ++m) {
        plan.nodes.push_back({cpu_prefix(m) + var.name + "/p" + std::to_string(p) + "/local_agg",
                              NodeRole::local_agg, Location{m, Device::cpu()}, var.name, p, false});
      }
    }
  }
  plan.mech_of[var.name] = Mechanism::PS;
  plan.partitions_of[var.name] = owners.size();
}

std::uint64_t requested_partitions(const VariableSpec& var, const PartitionMap& partitions) {
  auto it = partitions.find(var.name);
  return it == partitions.end() ? 1 : it->second;
}

// Homes every partition of every PS variable on a server. Partitioned
// variables go round-robin from a name-derived start server; whole variables
// are then placed largest-first onto the least-loaded server.
std::map<std::string, std::vector<std::uint32_t>> distribute(
    const std::vector<const VariableSpec*>& ps_vars, const PartitionMap& partitions,
    std::uint32_t servers) {
  std::vector<std::uint64_t> load(servers, 0);
  std::map<std::string, std::vector<std::uint32_t>> owners;
  std::vector<const VariableSpec*> whole;

  for (const VariableSpec* var : ps_vars) {
    const PartitionSet set = partition_variable(*var, requested_partitions(*var, partitions));
    if (set.count == 1) {
      whole.push_back(var);
      continue;
    }
    auto& out = owners[var->name];
    const auto start = static_cast<std::uint32_t>(stable_hash(var->name) % servers);
    for (const auto& part : set.partitions) {
      const auto s = static_cast<std::uint32_t>((start + part.index) % servers);
      out.push_back(s);
      load[s] += part.elements * var->elem_bytes;
    }
  }

  std::stable_sort(whole.begin(), whole.end(), [](const VariableSpec* a, const VariableSpec* b) {
    if (a->size_bytes() != b->size_bytes()) return a->size_bytes() > b->size_bytes();
    return a->name < b->name;
  });
  for (const VariableSpec* var : whole) {
    const auto s = static_cast<std::uint32_t>(std::min_element(load.begin(), load.end()) - load.begin());
    owners[var->name] = {s};
    load[s] += var->size_bytes();
  }
  return owners;
}

DistributedPlan make_plan(Architecture arch, const GraphSpec& graph, const ClusterSpec& cluster,
                          const std::map<std::string, Mechanism>& mechs, const PartitionMap& partitions,
                          bool local_agg) {
  DistributedPlan plan;
  plan.architecture = arch;
  plan.chief = GpuId{0, 0};
  plan.local_agg_enabled = local_agg;
  emit_workers(plan, cluster);

  std::vector<const VariableSpec*> ps_vars;
  for (const auto& var : graph.variables) {
    if (mechs.at(var.name) == Mechanism::PS) ps_vars.push_back(&var);
  }
  const auto owners = distribute(ps_vars, partitions, cluster.machines);

  for (const auto& var : graph.variables) {
    if (mechs.at(var.name) == Mechanism::PS) {
      emit_ps_variable(plan, var, cluster, owners.at(var.name), local_agg);
    } else {
      // Pure AR gathers sparse gradients; hybrid only picks AR for a sparse
      // variable when treating it as dense is cheaper.
      const NodeRole collective = (arch == Architecture::AR && var.is_sparse())
                                      ? NodeRole::allgatherv
                                      : NodeRole::allreduce;
      emit_ar_variable(plan, var, cluster, collective);
    }
  }
  return plan;
}

}  // namespace

std::string_view to_string(Mechanism m) { return m == Mechanism::AR ? "AR" : "PS"; }

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::AR: return "AR";
    case Architecture::PS_naive: return "PS_naive";
    case Architecture::PS_opt: return "PS_opt";
    case Architecture::hybrid: return "hybrid";
  }
  return "?";
}

std::string_view to_string(NodeRole r) {
  for (const auto& [role, name] : kRoleNames) {
    if (role == r) return name;
  }
  return "?";
}

Mechanism mechanism_from_string(std::string_view s) {
  if (s == "AR") return Mechanism::AR;
  if (s == "PS") return Mechanism::PS;
  throw ValidationError("mechanism", "unknown mechanism '" + std::string(s) + "'");
}

Architecture architecture_from_string(std::string_view s) {
  if (s == "AR" || s == "ar") return Architecture::AR;
  if (s == "PS_naive" || s == "ps-naive") return Architecture::PS_naive;
  if (s == "PS_opt" || s == "ps-opt") return Architecture::PS_opt;
  if (s == "hybrid") return Architecture::hybrid;
  throw ValidationError("architecture", "unknown architecture '" + std::string(s) + "'");
}

NodeRole node_role_from_string(std::string_view s) {
  for (const auto& [role, name] : kRoleNames) {
    if (name == s) return role;
  }
  throw ValidationError("role", "unknown node role '" + std::string(s) + "'");
}

std::string to_string(Device d) {
  return d.is_cpu() ? std::string("cpu") : "gpu:" + std::to_string(d.index);
}

Device device_from_string(std::string_view s) {
  if (s == "cpu") return Device::cpu();
  if (s.starts_with("gpu:") && s.size() > 4) {
    std::uint32_t idx = 0;
    for (char c : s.substr(4)) {
      if (c < '0' || c > '9') throw ValidationError("device", "bad device '" + std::string(s) + "'");
      idx = idx * 10 + static_cast<std::uint32_t>(c - '0');
    }
    return Device::gpu(idx);
  }
  throw ValidationError("device", "bad device '" + std::string(s) + "'");
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::optional<std::uint32_t> DistributedPlan::owner_of(std::string_view variable,
                                                       std::uint64_t partition) const {
  for (const auto& n : nodes) {
    if (n.role == NodeRole::variable_home && n.variable && *n.variable == variable &&
        n.partition == partition) {
      return n.location.machine;
    }
  }
  return std::nullopt;
}

std::optional<NodeRole> DistributedPlan::collective_of(std::string_view variable) const {
  for (const auto& n : nodes) {
    if ((n.role == NodeRole::allreduce || n.role == NodeRole::allgatherv) && n.variable &&
        *n.variable == variable) {
      return n.role;
    }
  }
  return std::nullopt;
}

Mechanism assign_mechanism(const VariableSpec& var, const ClusterSpec& cluster,
                           const MechanismPolicy& policy) {
  if (var.kind == VarKind::dense) return Mechanism::AR;
  if (cluster.machines == 1) return Mechanism::AR;
  // Both sides share the factor 4w(N-1)/N: dense-treated AR moves w, sparse
  // PS moves alpha*w.
  const double n = cluster.machines;
  const double w = static_cast<double>(var.size_bytes());
  const double common = 4.0 * w * (n - 1.0) / n;
  const double ar_cost = policy.eff_ar * common;
  const double ps_cost = policy.eff_ps * var.alpha * common;
  return ar_cost < ps_cost ? Mechanism::AR : Mechanism::PS;
}

DistributedPlan transform_ar(const GraphSpec& graph, const ClusterSpec& cluster) {
  std::map<std::string, Mechanism> mechs;
  for (const auto& v : graph.variables) mechs[v.name] = Mechanism::AR;
  return make_plan(Architecture::AR, graph, cluster, mechs, {}, false);
}

DistributedPlan transform_ps(const GraphSpec& graph, const ClusterSpec& cluster, bool local_agg,
                             const PartitionMap& partitions) {
  std::map<std::string, Mechanism> mechs;
  for (const auto& v : graph.variables) mechs[v.name] = Mechanism::PS;
  return make_plan(local_agg ? Architecture::PS_opt : Architecture::PS_naive, graph, cluster, mechs,
                   partitions, local_agg);
}

DistributedPlan transform_hybrid(const GraphSpec& graph, const ClusterSpec& cluster,
                                 const MechanismPolicy& policy, const PartitionMap& partitions) {
  std::map<std::string, Mechanism> mechs;
  for (const auto& v : graph.variables) mechs[v.name] = assign_mechanism(v, cluster, policy);
  return make_plan(Architecture::hybrid, graph, cluster, mechs, partitions, true);
}

DistributedPlan build_plan(Architecture arch, const GraphSpec& graph, const ClusterSpec& cluster,
                           const MechanismPolicy& policy, const PartitionMap& partitions) {
  switch (arch) {
    case Architecture::AR: return transform_ar(graph, cluster);
    case Architecture::PS_naive: return transform_ps(graph, cluster, false, partitions);
    case Architecture::PS_opt: return transform_ps(graph, cluster, true, partitions);
    case Architecture::hybrid: return transform_hybrid(graph, cluster, policy, partitions);
  }
  return transform_ar(graph, cluster);
}

std::vector<std::string> validate_plan(const DistributedPlan& plan, const GraphSpec& graph,
                                       const ClusterSpec& cluster) {
  std::vector<std::string> issues;
  auto fail = [&issues](std::string msg) { issues.push_back(std::move(msg)); };

  std::set<std::string> ids;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> replicas, producers;
  std::vector<const PlacedNode*> chiefs;
  std::map<std::string, std::vector<const PlacedNode*>> by_var;

  for (const auto& n : plan.nodes) {
    if (!ids.insert(n.id).second) fail("duplicate node id '" + n.id + "'");
    const auto& loc = n.location;
    const bool in_range = loc.machine < cluster.machines &&
                          (loc.device.is_cpu() || loc.device.index < cluster.gpus_per_machine);
    if (!in_range) fail("node '" + n.id + "' placed outside the cluster");
    if (needs_variable(n.role) && !n.variable) {
      fail("node '" + n.id + "' with role " + std::string(to_string(n.role)) + " lacks a variable");
    }
    if (!needs_variable(n.role) && n.variable) {
      fail("worker node '" + n.id + "' must not carry a variable");
    }
    if (n.chief) {
      chiefs.push_back(&n);
      if (n.role != NodeRole::model_replica) fail("chief flag on non-replica node '" + n.id + "'");
    }
    if (n.role == NodeRole::model_replica || n.role == NodeRole::grad_producer) {
      if (loc.device.is_cpu()) {
        fail("worker node '" + n.id + "' must run on a GPU");
      } else {
        auto& counter = n.role == NodeRole::model_replica ? replicas : producers;
        ++counter[{loc.machine, loc.device.index}];
      }
    }
    if (n.variable) {
      if (!graph.find(*n.variable)) fail("node '" + n.id + "' references unknown variable '" + *n.variable + "'");
      by_var[*n.variable].push_back(&n);
    }
  }

  for (std::uint32_t m = 0; m < cluster.machines; ++m) {
    for (std::uint32_t g = 0; g < cluster.gpus_per_machine; ++g) {
      const std::string where = "gpu (" + std::to_string(m) + "," + std::to_string(g) + ")";
      if (replicas[{m, g}] != 1) fail("exactly one model_replica per GPU violated at " + where);
      if (producers[{m, g}] != 1) fail("exactly one grad_producer per GPU violated at " + where);
    }
  }
  if (chiefs.size() != 1) {
    fail("exactly one chief violated: found " + std::to_string(chiefs.size()));
  } else {
    const auto& loc = chiefs.front()->location;
    if (loc.device.is_cpu() || GpuId{loc.machine, loc.device.index} != plan.chief) {
      fail("exactly one chief violated: chief node does not match the plan's chief");
    }
  }

  for (const auto& [name, mech] : plan.mech_of) {
    if (!graph.find(name)) fail("mechanism assigned to unknown variable '" + name + "'");
  }

  for (const auto& var : graph.variables) {
    const std::string vq = "'" + var.name + "'";
    auto mit = plan.mech_of.find(var.name);
    if (mit == plan.mech_of.end()) {
      fail("variable " + vq + " has no mechanism");
      continue;
    }
    auto pit = plan.partitions_of.find(var.name);
    const std::uint64_t parts = pit == plan.partitions_of.end() ? 0 : pit->second;
    if (parts < 1 || parts > var.elements) {
      fail("variable " + vq + " has invalid partition count " + std::to_string(parts));
      continue;
    }
    if (parts > 1 && !var.partitionable) fail("variable " + vq + " is partitioned but not partitionable");

    const auto& vnodes = by_var[var.name];

    if (mit->second == Mechanism::AR) {
      if (parts != 1) fail("AR variable " + vq + " must not be partitioned");
      std::map<std::uint32_t, std::map<std::uint32_t, std::array<int, 3>>> per_gpu;  // replica, collective, update
      std::set<NodeRole> collectives;
      for (const PlacedNode* n : vnodes) {
        if (is_server_role(n->role)) {
          fail("AR variable " + vq + " has server-side node '" + n->id + "'");
          continue;
        }
        if (n->location.device.is_cpu()) {
          fail("AR variable " + vq + " has node '" + n->id + "' off the GPUs");
          continue;
        }
        auto& slot = per_gpu[n->location.machine][n->location.device.index];
        if (n->role == NodeRole::replica_variable) ++slot[0];
        if (n->role == NodeRole::allreduce || n->role == NodeRole::allgatherv) {
          ++slot[1];
          collectives.insert(n->role);
        }
        if (n->role == NodeRole::update) ++slot[2];
      }
      if (collectives.size() > 1) fail("AR variable " + vq + " mixes allreduce and allgatherv");
      for (std::uint32_t m = 0; m < cluster.machines; ++m) {
        for (std::uint32_t g = 0; g < cluster.gpus_per_machine; ++g) {
          const auto slot = per_gpu[m][g];
          const std::string where = " on gpu (" + std::to_string(m) + "," + std::to_string(g) + ")";
          if (slot[0] != 1) fail("AR variable " + vq + " needs exactly one replica_variable" + where);
          if (slot[1] != 1) fail("AR variable " + vq + " needs exactly one collective" + where);
          if (slot[2] != 1) fail("AR variable " + vq + " must be updated exactly once" + where);
        }
      }
      continue;
    }

    // PS: per partition one home/accumulator/global_agg/update colocated on a
    // server, plus one local_agg per machine when local aggregation is on.
    struct PartNodes {
      std::vector<const PlacedNode*> home, accumulator, global_agg, update, local_agg;
    };
    std::vector<PartNodes> per_part(parts);
    for (const PlacedNode* n : vnodes) {
      if (n->role == NodeRole::replica_variable || n->role == NodeRole::allreduce ||
          n->role == NodeRole::allgatherv) {
        fail("PS variable " + vq + " has AR node '" + n->id + "'");
        continue;
      }
      if (!n->partition || *n->partition >= parts) {
        fail("PS node '" + n->id + "' has a missing or out-of-range partition index");
        continue;
      }
      auto& pn = per_part[*n->partition];
      switch (n->role) {
        case NodeRole::variable_home: pn.home.push_back(n); break;
        case NodeRole::accumulator: pn.accumulator.push_back(n); break;
        case NodeRole::global_agg: pn.global_agg.push_back(n); break;
        case NodeRole::update: pn.update.push_back(n); break;
        case NodeRole::local_agg: pn.local_agg.push_back(n); break;
        default: break;
      }
    }
    for (std::uint64_t p = 0; p < parts; ++p) {
      const auto& pn = per_part[p];
      const std::string where = vq + " partition " + std::to_string(p);
      if (pn.home.size() != 1) fail("exactly one variable_home violated for " + where);
      if (pn.accumulator.size() != 1) fail("exactly one accumulator violated for " + where);
      if (pn.global_agg.size() != 1) fail("exactly one global_agg violated for " + where);
      if (pn.update.size() != 1) fail("variable updated exactly once violated for " + where);
      if (pn.home.size() == 1) {
        const Location home = pn.home.front()->location;
        if (!home.device.is_cpu()) fail("variable_home of " + where + " must be on a server");
        for (const auto* group : {&pn.accumulator, &pn.global_agg, &pn.update}) {
          for (const PlacedNode* n : *group) {
            if (n->location != home) {
              fail("colocation violated: '" + n->id + "' is not on the variable_home server of " + where);
            }
          }
        }
      }
      if (plan.local_agg_enabled) {
        std::map<std::uint32_t, int> per_machine;
        for (const PlacedNode* n : pn.local_agg) ++per_machine[n->location.machine];
        for (std::uint32_t m = 0; m < cluster.machines; ++m) {
          if (per_machine[m] != 1) {
            fail("aggregation chain violated: " + where + " needs one local_agg on machine " + std::to_string(m));
          }
        }
        if (pn.local_agg.size() != cluster.machines) {
          fail("aggregation chain violated: " + where + " has extra local_agg nodes");
        }
      } else if (!pn.local_agg.empty()) {
        fail("aggregation chain violated: " + where + " has local_agg while local aggregation is off");
      }
    }
  }
  return issues;
}

bool nodes_isomorphic(const DistributedPlan& a, const DistributedPlan& b) {
  using Key = std::tuple<NodeRole, Location, std::optional<std::string>, std::optional<std::uint64_t>, bool>;
  auto keys = [](const DistributedPlan& p) {
    std::multiset<Key> out;
    for (const auto& n : p.nodes) out.insert({n.role, n.location, n.variable, n.partition, n.chief});
    return out;
  };
  return keys(a) == keys(b);
}

}  // namespace hybridpar
