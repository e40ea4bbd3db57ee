// Copyright 2026 The hybridpar Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "hybridpar/net_sim.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <stdexcept>

namespace hybridpar {
namespace {

constexpr double kBytesPerMb = 1e6;

constexpr std::array<std::pair<CommPhase, std::string_view>, 8> kCommPhaseNames{{
    {CommPhase::local_reduce, "local_reduce"},
    {CommPhase::reduce_scatter, "reduce_scatter"},
    {CommPhase::all_gather, "all_gather"},
    {CommPhase::gather, "gather"},
    {CommPhase::push, "push"},
    {CommPhase::pull, "pull"},
    {CommPhase::update_trigger, "update_trigger"},
    {CommPhase::broadcast, "broadcast"},
}};

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

Location gpu_at(std::uint32_t machine, std::uint32_t gpu) { return {machine, Device::gpu(gpu)}; }
Location cpu_at(std::uint32_t machine) { return {machine, Device::cpu()}; }

// Collects the messages of one serialized phase and prices them: every
// transfer in the phase runs concurrently, limited by the busiest direction of
// each machine NIC and each intra-machine device port, plus one latency per
// cross-machine step of the longest collective. Compute work items run in
// parallel after the transfers.
class PhaseRecorder {
 public:
  PhaseRecorder(const ClusterSpec& cluster, std::vector<Message>* trace)
      : cluster_(cluster), trace_(trace), nic_(cluster.machines, {0.0, 0.0}) {}

  void send(Location src, Location dst, std::uint64_t bytes, MessageTag tag, std::uint32_t step = 0,
            double wire_weight = 1.0) {
    if (src.machine != dst.machine) {
      nic_[src.machine][0] += wire_weight * static_cast<double>(bytes);
      nic_[dst.machine][1] += wire_weight * static_cast<double>(bytes);
      steps_[tag.variable].insert(step);
    } else {
      intra_[src][0] += static_cast<double>(bytes);
      intra_[dst][1] += static_cast<double>(bytes);
    }
    trace_->push_back({src, dst, bytes, std::move(tag), step});
  }

  // Zero-cost control message; appears in the trace only.
  void notify(Location src, Location dst, MessageTag tag) { trace_->push_back({src, dst, 0, std::move(tag), 0}); }

  void add_parallel_work(double us) { work_us_ = std::max(work_us_, us); }

  double duration_us() const {
    double nic = 0.0;
    for (const auto& dir : nic_) nic = std::max({nic, dir[0], dir[1]});
    double intra = 0.0;
    for (const auto& [loc, dir] : intra_) intra = std::max({intra, dir[0], dir[1]});
    std::size_t steps = 0;
    for (const auto& [var, s] : steps_) steps = std::max(steps, s.size());
    const double transfer = std::max(nic / cluster_.nic_bytes_per_us(), intra / cluster_.intra_bytes_per_us());
    return transfer + cluster_.latency_us * static_cast<double>(steps) + work_us_;
  }

 private:
  const ClusterSpec& cluster_;
  std::vector<Message>* trace_;
  std::vector<std::array<double, 2>> nic_;
  std::map<Location, std::array<double, 2>> intra_;
  std::map<std::string, std::set<std::uint32_t>> steps_;
  double work_us_ = 0.0;
};

struct Phases {
  PhaseRecorder local, network, aggregation, update, broadcast;
  double update_serial_us = 0.0;

  Phases(const ClusterSpec& cluster, std::vector<Message>* trace)
      : local(cluster, trace),
        network(cluster, trace),
        aggregation(cluster, trace),
        update(cluster, trace),
        broadcast(cluster, trace) {}
};

void emit_ring_allreduce(PhaseRecorder& rec, const std::string& name, std::uint64_t bytes, std::uint32_t machines,
                         double weight) {
  if (machines < 2) return;
  const std::uint64_t chunk = ceil_div(bytes, machines);
  const std::uint32_t steps = 2 * (machines - 1);
  for (std::uint32_t s = 0; s < steps; ++s) {
    const CommPhase phase = s < machines - 1 ? CommPhase::reduce_scatter : CommPhase::all_gather;
    for (std::uint32_t i = 0; i < machines; ++i) {
      rec.send(gpu_at(i, 0), gpu_at((i + 1) % machines, 0), chunk, {name, std::nullopt, phase}, s, weight);
    }
  }
}

void emit_allgatherv(PhaseRecorder& rec, const std::string& name, std::uint64_t per_worker, std::uint32_t machines,
                     double weight) {
  if (machines < 2) return;
  for (std::uint32_t s = 0; s + 1 < machines; ++s) {
    for (std::uint32_t i = 0; i < machines; ++i) {
      rec.send(gpu_at(i, 0), gpu_at((i + 1) % machines, 0), per_worker, {name, std::nullopt, CommPhase::gather}, s,
               weight);
    }
  }
}

// G-1 steps of a ring among the GPUs of one machine.
void emit_intra_ring(PhaseRecorder& rec, const std::string& name, std::uint32_t machine, std::uint32_t gpus,
                     std::uint64_t bytes_per_step, CommPhase phase) {
  if (gpus < 2) return;
  for (std::uint32_t s = 0; s + 1 < gpus; ++s) {
    for (std::uint32_t k = 0; k < gpus; ++k) {
      rec.send(gpu_at(machine, k), gpu_at(machine, (k + 1) % gpus), bytes_per_step, {name, std::nullopt, phase}, s);
    }
  }
}

void emit_ar_variable(Phases& ph, const VariableSpec& var, NodeRole collective, const ClusterSpec& cluster,
                      const ComputeProfile& profile) {
  const std::uint32_t n = cluster.machines;
  const std::uint32_t g = cluster.gpus_per_machine;
  const double weight = profile.ar_efficiency;

  if (collective == NodeRole::allreduce) {
    // Hierarchical: intra reduce-scatter, inter-machine ring, intra all-gather.
    const std::uint64_t w = var.size_bytes();
    for (std::uint32_t m = 0; m < n; ++m) {
      emit_intra_ring(ph.local, var.name, m, g, ceil_div(w, g), CommPhase::local_reduce);
    }
    emit_ring_allreduce(ph.network, var.name, w, n, weight);
    for (std::uint32_t m = 0; m < n; ++m) {
      emit_intra_ring(ph.broadcast, var.name, m, g, ceil_div(w, g), CommPhase::broadcast);
    }
    return;
  }

  // AllGatherv concatenates: nothing can be reduced on the way.
  const std::uint64_t b = payload_bytes(var);
  for (std::uint32_t m = 0; m < n; ++m) {
    emit_intra_ring(ph.local, var.name, m, g, b, CommPhase::local_reduce);
  }
  emit_allgatherv(ph.network, var.name, static_cast<std::uint64_t>(g) * b, n, weight);
  if (n > 1 && g > 1) {
    const std::uint64_t remote = static_cast<std::uint64_t>(n - 1) * g * b;
    for (std::uint32_t m = 0; m < n; ++m) {
      for (std::uint32_t k = 0; k + 1 < g; ++k) {
        ph.broadcast.send(gpu_at(m, k), gpu_at(m, k + 1), remote, {var.name, std::nullopt, CommPhase::broadcast});
      }
    }
  }
  if (var.is_sparse()) {
    const double gathered = static_cast<double>(n) * g * static_cast<double>(b);
    ph.aggregation.add_parallel_work(gathered * profile.agg_us_per_mb / kBytesPerMb);
  }
}

void emit_ps_variable(Phases& ph, const VariableSpec& var, const PartitionSet& set, const DistributedPlan& plan,
                      const ClusterSpec& cluster, double wire_weight, double agg_us_per_mb) {
  const std::uint32_t n = cluster.machines;
  const std::uint32_t g = cluster.gpus_per_machine;
  const bool local_agg = plan.local_agg_enabled;
  const Location chief = gpu_at(plan.chief.machine, plan.chief.gpu);

  for (const auto& part : set.partitions) {
    const auto owner = plan.owner_of(var.name, part.index);
    if (!owner) {
      throw MechanismMismatchError("plan has no server for '" + var.name + "' partition " +
                                   std::to_string(part.index));
    }
    const std::uint32_t o = *owner;
    const std::uint64_t b = payload_bytes(var, part.elements);
    auto tag = [&](CommPhase p) { return MessageTag{var.name, part.index, p}; };
    const double mb = static_cast<double>(b) / kBytesPerMb;

    if (local_agg) {
      for (std::uint32_t m = 0; m < n; ++m) {
        for (std::uint32_t k = 0; k < g; ++k) ph.local.send(gpu_at(m, k), cpu_at(m), b, tag(CommPhase::local_reduce));
        if (var.is_sparse()) ph.local.add_parallel_work(g * mb * agg_us_per_mb);
      }
      for (std::uint32_t m = 0; m < n; ++m) {
        if (m != o) ph.network.send(cpu_at(m), cpu_at(o), b, tag(CommPhase::push), 0, wire_weight);
      }
    } else {
      for (std::uint32_t m = 0; m < n; ++m) {
        for (std::uint32_t k = 0; k < g; ++k) {
          ph.network.send(gpu_at(m, k), cpu_at(o), b, tag(CommPhase::push), 0, wire_weight);
        }
      }
    }
    for (std::uint32_t m = 0; m < n; ++m) {
      if (m != o) ph.network.send(cpu_at(o), cpu_at(m), b, tag(CommPhase::pull), 1, wire_weight);
    }

    if (var.is_sparse()) {
      const double contributions = local_agg ? n : static_cast<double>(n) * g;
      ph.aggregation.add_parallel_work(contributions * mb * agg_us_per_mb);
    }
    ph.update.notify(chief, cpu_at(o), tag(CommPhase::update_trigger));

    for (std::uint32_t m = 0; m < n; ++m) {
      for (std::uint32_t k = 0; k < g; ++k) ph.broadcast.send(cpu_at(m), gpu_at(m, k), b, tag(CommPhase::broadcast));
    }
  }
}

CollectiveResult finish(std::vector<Message> trace, double duration, std::uint32_t machines, std::uint32_t steps) {
  CollectiveResult r;
  r.duration_us = duration;
  r.per_machine = nic_bytes(trace, machines);
  r.trace = std::move(trace);
  r.steps = steps;
  return r;
}

}  // namespace

std::string_view to_string(CommPhase p) {
  for (const auto& [phase, name] : kCommPhaseNames) {
    if (phase == p) return name;
  }
  return "?";
}

CommPhase comm_phase_from_string(std::string_view s) {
  for (const auto& [phase, name] : kCommPhaseNames) {
    if (name == s) return phase;
  }
  throw ValidationError("phase", "unknown message phase '" + std::string(s) + "'");
}

ComputeProfile ComputeProfile::from_graph(const GraphSpec& graph) {
  ComputeProfile p;
  p.compute_us_per_gpu = graph.compute_us_per_gpu;
  return p;
}

TransferReport nic_bytes(const std::vector<Message>& trace, std::uint32_t machines) {
  std::vector<MachineTraffic> per(machines);
  for (const auto& msg : trace) {
    if (!msg.crosses_machines()) continue;
    per.at(msg.src.machine).egress_bytes += msg.bytes;
    per.at(msg.dst.machine).ingress_bytes += msg.bytes;
  }
  return TransferReport::from_machines(std::move(per));
}

CollectiveResult simulate_ring_allreduce(std::uint64_t bytes, std::uint32_t machines, const ClusterSpec& cluster) {
  ClusterSpec shape = cluster;
  shape.machines = std::max<std::uint32_t>(machines, 1);
  std::vector<Message> trace;
  PhaseRecorder rec(shape, &trace);
  emit_ring_allreduce(rec, "allreduce", bytes, shape.machines, 1.0);
  const double duration = rec.duration_us();
  return finish(std::move(trace), duration, shape.machines, machines > 1 ? 2 * (machines - 1) : 0);
}

CollectiveResult simulate_allgatherv(std::uint64_t bytes_per_worker, std::uint32_t machines,
                                     const ClusterSpec& cluster) {
  ClusterSpec shape = cluster;
  shape.machines = std::max<std::uint32_t>(machines, 1);
  std::vector<Message> trace;
  PhaseRecorder rec(shape, &trace);
  emit_allgatherv(rec, "allgatherv", bytes_per_worker, shape.machines, 1.0);
  const double duration = rec.duration_us();
  return finish(std::move(trace), duration, shape.machines, machines > 1 ? machines - 1 : 0);
}

CollectiveResult simulate_ps_exchange(const VariableSpec& var, const PartitionSet& partitions,
                                      const DistributedPlan& plan, const ClusterSpec& cluster) {
  auto it = plan.mech_of.find(var.name);
  if (it == plan.mech_of.end() || it->second != Mechanism::PS) {
    throw MechanismMismatchError("variable '" + var.name + "' is not served by PS in this plan");
  }
  std::vector<Message> trace;
  Phases ph(cluster, &trace);
  emit_ps_variable(ph, var, partitions, plan, cluster, 1.0, 0.0);
  const double duration = ph.local.duration_us() + ph.network.duration_us() + ph.update.duration_us() +
                          ph.broadcast.duration_us();
  return finish(std::move(trace), duration, cluster.machines, cluster.machines > 1 ? 2 : 0);
}

IterationStats simulate_iteration(const DistributedPlan& plan, const GraphSpec& graph, const ClusterSpec& cluster,
                                  const ComputeProfile& profile) {
  IterationStats stats;
  Phases ph(cluster, &stats.trace);

  for (const auto& var : graph.variables) {
    auto mit = plan.mech_of.find(var.name);
    if (mit == plan.mech_of.end()) throw std::invalid_argument("plan lacks variable '" + var.name + "'");
    if (mit->second == Mechanism::AR) {
      const auto collective = plan.collective_of(var.name);
      if (!collective) throw std::invalid_argument("AR variable '" + var.name + "' has no collective");
      emit_ar_variable(ph, var, *collective, cluster, profile);
      continue;
    }
    auto pit = plan.partitions_of.find(var.name);
    const std::uint64_t parts = pit == plan.partitions_of.end() ? 1 : pit->second;
    const PartitionSet set = partition_variable(var, parts);
    emit_ps_variable(ph, var, set, plan, cluster, profile.ps_efficiency, profile.agg_us_per_mb);
    // Stitching the pieces back into one tensor costs once per partition.
    ph.update_serial_us += static_cast<double>(parts) * profile.partition_overhead_us;
  }

  stats.phase_times["compute"] = profile.compute_us_per_gpu;
  stats.phase_times["local"] = ph.local.duration_us();
  stats.phase_times["network"] = ph.network.duration_us();
  stats.phase_times["aggregation"] = ph.aggregation.duration_us();
  stats.phase_times["update"] = ph.update.duration_us() + ph.update_serial_us;
  stats.phase_times["broadcast"] = ph.broadcast.duration_us();
  for (auto name : kPhaseNames) stats.iter_time_us += stats.phase_times.at(std::string(name));
  stats.per_machine_bytes = nic_bytes(stats.trace, cluster.machines);
  return stats;
}

TrainingResult simulate_training(const DistributedPlan& plan, const GraphSpec& graph, const ClusterSpec& cluster,
                                 const ComputeProfile& profile, std::uint32_t iterations,
                                 const TrainingOptions& options) {
  if (iterations < 2) throw std::invalid_argument("simulate_training needs at least 2 iterations");
  const double base = simulate_iteration(plan, graph, cluster, profile).iter_time_us;

  TrainingResult result;
  result.discarded = iterations / 2;
  result.iteration_times_us.reserve(iterations);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  // Averaging the multipliers keeps a noise-free run exactly equal to `base`.
  double kept_factor = 0.0;
  for (std::uint32_t i = 0; i < iterations; ++i) {
    double factor = 1.0;
    if (i < result.discarded) factor *= options.warmup_factor;
    if (options.jitter > 0.0) factor *= std::max(0.0, 1.0 + options.jitter * noise(rng));
    result.iteration_times_us.push_back(base * factor);
    if (i >= result.discarded) kept_factor += factor;
  }
  result.mean_iter_time_us = base * (kept_factor / static_cast<double>(iterations - result.discarded));
  return result;
}

}  // namespace hybridpar
